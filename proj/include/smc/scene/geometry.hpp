#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/SVD>

#include "smc/scene/types.hpp"

namespace smc {

inline constexpr double kDefaultDeadZone = 0.005;
inline constexpr double kOrthonormalTolerance = 1e-6;

/// Right-handed rotation by `degrees` about a coordinate axis. Multiples of
/// 90 degrees produce exact 0/±1 entries so axis-aligned poses stay exact.
template <typename Scalar>
Mat3T<Scalar> rotation_about(Axis axis, Scalar degrees) {
  Scalar wrapped = std::fmod(degrees, Scalar(360));
  if (wrapped < 0) wrapped += Scalar(360);
  Scalar c, s;
  const Scalar quarter = wrapped / Scalar(90);
  if (quarter == std::floor(quarter)) {
    static constexpr int kCos[4] = {1, 0, -1, 0};
    static constexpr int kSin[4] = {0, 1, 0, -1};
    const int q = static_cast<int>(quarter) % 4;
    c = Scalar(kCos[q]);
    s = Scalar(kSin[q]);
  } else {
    const Scalar rad = wrapped * std::numbers::pi_v<Scalar> / Scalar(180);
    c = std::cos(rad);
    s = std::sin(rad);
  }
  Mat3T<Scalar> m = Mat3T<Scalar>::Identity();
  switch (axis) {
    case Axis::X:
      m << 1, 0, 0, 0, c, -s, 0, s, c;
      break;
    case Axis::Y:
      m << c, 0, s, 0, 1, 0, -s, 0, c;
      break;
    case Axis::Z:
      m << c, -s, 0, s, c, 0, 0, 0, 1;
      break;
  }
  return m;
}

/// ||R^T R - I||_F
template <typename Derived>
typename Derived::Scalar orthonormality_error(const Eigen::MatrixBase<Derived>& r) {
  using Scalar = typename Derived::Scalar;
  return (r.transpose() * r - Mat3T<Scalar>::Identity()).norm();
}

/// Nearest proper rotation (polar factor).
template <typename Scalar>
Mat3T<Scalar> reorthonormalize(const Mat3T<Scalar>& r) {
  Eigen::JacobiSVD<Mat3T<Scalar>> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3T<Scalar> u = svd.matrixU();
  const Mat3T<Scalar> v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0) u.col(2) *= Scalar(-1);
  return u * v.transpose();
}

template <typename Scalar>
bool is_rotation(const Mat3T<Scalar>& r, Scalar tol = Scalar(kOrthonormalTolerance)) {
  return r.allFinite() && orthonormality_error(r) <= tol &&
         std::abs(r.determinant() - Scalar(1)) <= tol;
}

/// Half extents of the world AABB of a box with local half extents `half`
/// under rotation `r`: sum_j |r_ij| * half_j, the tight hull of the 8 corners.
template <typename Scalar>
Vec3T<Scalar> rotated_half_extents(const Mat3T<Scalar>& r, const Vec3T<Scalar>& half) {
  return r.cwiseAbs() * half;
}

/// Volumetric intersection-over-union of two axis-aligned boxes.
/// Zero-volume boxes score 1 against an identical box and 0 otherwise.
template <typename Scalar>
Scalar aabb_iou(const AabbT<Scalar>& a, const AabbT<Scalar>& b) {
  const Scalar va = a.isEmpty() ? Scalar(0) : a.volume();
  const Scalar vb = b.isEmpty() ? Scalar(0) : b.volume();
  if (va <= Scalar(0) || vb <= Scalar(0)) {
    return (a.min() == b.min() && a.max() == b.max()) ? Scalar(1) : Scalar(0);
  }
  const AabbT<Scalar> inter = a.intersection(b);
  if (inter.isEmpty()) return Scalar(0);
  const Scalar vi = inter.volume();
  if (vi <= Scalar(0)) return Scalar(0);
  return std::clamp(vi / (va + vb - vi), Scalar(0), Scalar(1));
}

/// Sign of each component of `delta`, zero inside [-dead_zone, dead_zone].
template <typename Scalar>
DirectionSignature direction_signature(const Vec3T<Scalar>& delta, Scalar dead_zone) {
  DirectionSignature sig;
  for (int i = 0; i < 3; ++i) {
    if (delta[i] > dead_zone) sig.s[i] = 1;
    else if (delta[i] < -dead_zone) sig.s[i] = -1;
  }
  return sig;
}

// Object-level operations.

/// Copy of `obj` centred at `target`. Throws InvalidArgument when non-finite.
SceneObject apply_move(const SceneObject& obj, const Vec3& target);

/// Copy of `obj` rotated by `degrees` about its current local `axis`
/// (post-multiplication). Position and half extents are unchanged.
SceneObject apply_rotate(const SceneObject& obj, Axis axis, double degrees);

Aabb world_aabb(const SceneObject& obj);

/// Signature of (b.position - a.position).
DirectionSignature relative_direction(const SceneObject& a, const SceneObject& b,
                                      double dead_zone = kDefaultDeadZone);

/// The eight box corners in world coordinates.
std::array<Vec3, 8> world_corners(const SceneObject& obj);

Axis parse_axis(char c);
char axis_char(Axis axis);

}  // namespace smc
