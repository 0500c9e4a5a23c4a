#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "smc/scene/types.hpp"

namespace smc {

nlohmann::json vec3_to_json(const Vec3& v);
Vec3 vec3_from_json(const nlohmann::json& j, const char* field);

/// Row-major 9-element array.
nlohmann::json rotation_to_json(const Rotation& r);
Rotation rotation_from_json(const nlohmann::json& j, const char* field);

nlohmann::json object_to_json(const SceneObject& obj);
SceneObject object_from_json(const nlohmann::json& j);

/// Canonical arrangement document:
///   {description, motif_type (string|null), objects: [{id, label,
///    half_size[3], position[3], rotation[9], asset_id?}]}
/// Parsing validates every invariant and throws ErrorKind::Parse.
nlohmann::json arrangement_to_json(const Arrangement& a);
Arrangement arrangement_from_json(const nlohmann::json& j);

Arrangement read_arrangement(const std::filesystem::path& path);
void write_arrangement(const std::filesystem::path& path, const Arrangement& a);

}  // namespace smc
