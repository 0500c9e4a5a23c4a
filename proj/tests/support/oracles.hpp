#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "smc/scene/types.hpp"

namespace smc::testing {

std::filesystem::path data_path(const std::string& relative);

/// The seven-plate stack used throughout the worked learning session.
Arrangement golden_plates();

/// Rotation from Eigen's angle-axis type (independent of rotation_about).
Rotation reference_rotation(char axis, double degrees);

/// IoU from per-axis interval overlaps.
double closed_form_iou(const Vec3& min_a, const Vec3& max_a, const Vec3& min_b, const Vec3& max_b);

/// Min/max over the eight explicitly enumerated world corners.
std::pair<Vec3, Vec3> corner_hull(const SceneObject& obj);

Rotation random_rotation(std::mt19937_64& rng);

/// Penetration depth of two oriented boxes by the separating-axis test over
/// the 15 candidate axes; 0 when separated or touching.
double obb_penetration_depth(const SceneObject& a, const SceneObject& b);

/// A fresh empty scratch directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace smc::testing
