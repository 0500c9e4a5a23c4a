#include "smc/scene/arrangement_io.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

#include "smc/error.hpp"
#include "smc/io.hpp"
#include "smc/scene/geometry.hpp"

namespace smc {

using nlohmann::json;

namespace {

double number_at(const json& arr, std::size_t i, const char* field) {
  if (!arr[i].is_number()) {
    throw Error(ErrorKind::Parse, fmt::format("'{}' must contain numbers", field));
  }
  const double v = arr[i].get<double>();
  if (!std::isfinite(v)) {
    throw Error(ErrorKind::Parse, fmt::format("'{}' must be finite", field));
  }
  return v;
}

}  // namespace

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j, const char* field) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorKind::Parse, fmt::format("'{}' must be an array of 3 numbers", field));
  }
  return {number_at(j, 0, field), number_at(j, 1, field), number_at(j, 2, field)};
}

json rotation_to_json(const Rotation& r) {
  json out = json::array();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) out.push_back(r(i, k));
  return out;
}

Rotation rotation_from_json(const json& j, const char* field) {
  if (!j.is_array() || j.size() != 9) {
    throw Error(ErrorKind::Parse, fmt::format("'{}' must be an array of 9 numbers", field));
  }
  Rotation r;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) r(i, k) = number_at(j, static_cast<std::size_t>(3 * i + k), field);
  if (!is_rotation<double>(r)) {
    throw Error(ErrorKind::Parse, fmt::format("'{}' is not a proper rotation", field));
  }
  return r;
}

json object_to_json(const SceneObject& obj) {
  json j = {{"id", obj.id},
            {"label", obj.label},
            {"half_size", vec3_to_json(obj.half_size)},
            {"position", vec3_to_json(obj.position)},
            {"rotation", rotation_to_json(obj.rotation)}};
  if (obj.asset_id) j["asset_id"] = *obj.asset_id;
  return j;
}

SceneObject object_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Parse, "object entry must be an object");
  SceneObject obj;
  if (!j.contains("label") || !j["label"].is_string()) {
    throw Error(ErrorKind::Parse, "object is missing a string 'label'");
  }
  obj.label = j["label"].get<std::string>();
  if (j.contains("id")) {
    if (!j["id"].is_string()) throw Error(ErrorKind::Parse, "object 'id' must be a string");
    obj.id = j["id"].get<std::string>();
  }
  if (!j.contains("half_size")) throw Error(ErrorKind::Parse, "object is missing 'half_size'");
  obj.half_size = vec3_from_json(j["half_size"], "half_size");
  if ((obj.half_size.array() <= 0).any()) {
    throw Error(ErrorKind::Parse, fmt::format("object '{}' has a non-positive half_size", obj.id));
  }
  if (!j.contains("position")) throw Error(ErrorKind::Parse, "object is missing 'position'");
  obj.position = vec3_from_json(j["position"], "position");
  if (j.contains("rotation")) obj.rotation = rotation_from_json(j["rotation"], "rotation");
  if (j.contains("asset_id") && !j["asset_id"].is_null()) {
    obj.asset_id = j["asset_id"].get<std::string>();
  }
  return obj;
}

json arrangement_to_json(const Arrangement& a) {
  json objs = json::array();
  for (const auto& o : a.objects) objs.push_back(object_to_json(o));
  return {{"description", a.description},
          {"motif_type", a.motif_type ? json(a.motif_type->name()) : json(nullptr)},
          {"objects", std::move(objs)}};
}

Arrangement arrangement_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Parse, "arrangement must be a JSON object");
  Arrangement a;
  if (j.contains("description")) {
    if (!j["description"].is_string()) throw Error(ErrorKind::Parse, "'description' must be a string");
    a.description = j["description"].get<std::string>();
  }
  if (j.contains("motif_type") && !j["motif_type"].is_null()) {
    const auto name = j["motif_type"].get<std::string>();
    a.motif_type = MotifType::parse(name);
    if (!a.motif_type) throw Error(ErrorKind::Parse, "unknown motif_type '" + name + "'");
  }
  if (!j.contains("objects") || !j["objects"].is_array()) {
    throw Error(ErrorKind::Parse, "arrangement is missing the 'objects' array");
  }
  std::set<std::string> ids;
  for (const auto& jo : j["objects"]) {
    SceneObject obj = object_from_json(jo);
    if (obj.id.empty()) obj.id = fmt::format("obj_{}", a.objects.size() + 1);
    if (!ids.insert(obj.id).second) {
      throw Error(ErrorKind::Parse, "duplicate object id '" + obj.id + "'");
    }
    a.objects.push_back(std::move(obj));
  }
  return a;
}

Arrangement read_arrangement(const std::filesystem::path& path) {
  return arrangement_from_json(read_json_file(path));
}

void write_arrangement(const std::filesystem::path& path, const Arrangement& a) {
  write_file_atomic(path, arrangement_to_json(a).dump(2) + "\n");
}

}  // namespace smc
