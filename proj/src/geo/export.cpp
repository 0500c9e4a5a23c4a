#include "smc/geo/export.hpp"

#include <map>

#include "smc/scene/arrangement_io.hpp"

namespace smc {

using nlohmann::json;

json layout_to_json(const std::vector<PlacedMesh>& placed, const Arrangement& arrangement,
                    const AssetIndex* index) {
  json instances = json::array();
  for (const auto& pm : placed) {
    const Eigen::Matrix<double, 4, 4, Eigen::RowMajor> t = pm.source_to_world();
    json inst = {{"id", pm.object.id},
                 {"transform", std::vector<double>(t.data(), t.data() + 16)}};
    if (pm.object.asset_id) {
      inst["asset_id"] = *pm.object.asset_id;
      if (index) {
        if (const AssetRecord* r = index->find(*pm.object.asset_id)) {
          inst["mesh_path"] = r->mesh_path.string();
        }
      }
    }
    instances.push_back(std::move(inst));
  }
  return {{"arrangement", arrangement_to_json(arrangement)}, {"instances", instances}};
}

std::vector<PlacedMesh> place_arrangement(const Arrangement& arrangement,
                                          const AssetIndex* index) {
  std::map<std::string, std::shared_ptr<const TriMesh>> cache;
  std::vector<PlacedMesh> out;
  for (const auto& obj : arrangement.objects) {
    const AssetRecord* r = obj.asset_id && index ? index->find(*obj.asset_id) : nullptr;
    if (!r) {
      out.push_back(box_placement(obj));
      continue;
    }
    auto& mesh = cache[r->asset_id];
    if (!mesh) mesh = std::make_shared<const TriMesh>(load_obj(r->mesh_path));
    const Vec3 native = mesh->bounds().sizes() / 2.0;
    const bool scaled = !obj.half_size.isApprox(native, 1e-6);
    out.push_back(bind_mesh(obj, *mesh, Rotation::Identity(), scaled));
  }
  return out;
}

std::string merged_obj(const std::vector<PlacedMesh>& placed) {
  std::vector<TriMesh> world;
  world.reserve(placed.size());
  for (const auto& pm : placed) world.push_back(pm.mesh->transformed(pm.object.rotation, pm.object.position));
  std::vector<ObjGroup> groups;
  for (std::size_t i = 0; i < placed.size(); ++i) groups.push_back({placed[i].object.id, &world[i]});
  return to_obj(groups);
}

}  // namespace smc
