#include "smc/scene/geometry.hpp"


#include "smc/error.hpp"

namespace smc {

SceneObject apply_move(const SceneObject& obj, const Vec3& target) {
  if (!target.allFinite()) {
    throw Error(ErrorKind::InvalidArgument, "move target must be finite");
  }
  SceneObject out = obj;
  out.position = target;
  return out;
}

SceneObject apply_rotate(const SceneObject& obj, Axis axis, double degrees) {
  if (!std::isfinite(degrees)) {
    throw Error(ErrorKind::InvalidArgument, "rotation angle must be finite");
  }
  SceneObject out = obj;
  out.rotation = obj.rotation * rotation_about<double>(axis, degrees);
  // Drift from long products is corrected well before it reaches 1e-6.
  if (orthonormality_error(out.rotation) > 1e-9) {
    out.rotation = reorthonormalize<double>(out.rotation);
  }
  return out;
}

Aabb world_aabb(const SceneObject& obj) {
  const Vec3 ext = rotated_half_extents<double>(obj.rotation, obj.half_size);
  return Aabb(obj.position - ext, obj.position + ext);
}

std::array<Vec3, 8> world_corners(const SceneObject& obj) {
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    const Vec3 local((i & 1) ? obj.half_size.x() : -obj.half_size.x(),
                     (i & 2) ? obj.half_size.y() : -obj.half_size.y(),
                     (i & 4) ? obj.half_size.z() : -obj.half_size.z());
    out[i] = obj.position + obj.rotation * local;
  }
  return out;
}

DirectionSignature relative_direction(const SceneObject& a, const SceneObject& b,
                                      double dead_zone) {
  if (!(dead_zone >= 0)) {
    throw Error(ErrorKind::InvalidArgument, "dead zone must be non-negative");
  }
  return direction_signature<double>(b.position - a.position, dead_zone);
}

Axis parse_axis(char c) {
  switch (c) {
    case 'x': case 'X': return Axis::X;
    case 'y': case 'Y': return Axis::Y;
    case 'z': case 'Z': return Axis::Z;
    default:
      throw Error(ErrorKind::InvalidArgument, std::string("unknown axis '") + c + "'");
  }
}

char axis_char(Axis axis) {
  switch (axis) {
    case Axis::X: return 'x';
    case Axis::Y: return 'y';
    case Axis::Z: return 'z';
  }
  return '?';
}

}  // namespace smc
