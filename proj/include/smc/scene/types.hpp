#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smc/motif_type.hpp"

namespace smc {

template <typename Scalar>
using Vec3T = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3T = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using AabbT = Eigen::AlignedBox<Scalar, 3>;

using Vec3 = Vec3T<double>;
/// World orientation of an object; columns are the local axes in world frame.
using Rotation = Mat3T<double>;
using Aabb = AabbT<double>;

enum class Axis { X = 0, Y = 1, Z = 2 };

/// Oriented box-modeled object. `position` is the centroid of the box.
struct SceneObject {
  std::string id;
  std::string label;
  Vec3 half_size = Vec3::Ones();
  Vec3 position = Vec3::Zero();
  Rotation rotation = Rotation::Identity();
  std::optional<std::string> asset_id;
};

/// Per-axis sign of a displacement, with a dead zone around zero.
struct DirectionSignature {
  std::array<std::int8_t, 3> s{0, 0, 0};

  DirectionSignature operator-() const { return {{static_cast<std::int8_t>(-s[0]),
                                                   static_cast<std::int8_t>(-s[1]),
                                                   static_cast<std::int8_t>(-s[2])}}; }
  friend bool operator==(const DirectionSignature&, const DirectionSignature&) = default;
};

struct Arrangement {
  std::string description;
  std::optional<MotifType> motif_type;
  std::vector<SceneObject> objects;
};

}  // namespace smc
