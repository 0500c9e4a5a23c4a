#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "smc/assets/asset_index.hpp"
#include "smc/geo/optimizer.hpp"

namespace smc {

/// Canonical arrangement plus, per object, the source mesh path (when the
/// asset is in `index`) and the row-major 4x4 transform taking that mesh
/// file's coordinates to world: {"arrangement": {...}, "instances": [{id,
/// asset_id?, mesh_path?, transform[16]}]}.
nlohmann::json layout_to_json(const std::vector<PlacedMesh>& placed, const Arrangement& arrangement,
                              const AssetIndex* index);

/// Re-binds an arrangement written by generate: objects whose asset is in
/// `index` get its mesh (scaled when half_size differs from the mesh), the
/// rest are boxes.
std::vector<PlacedMesh> place_arrangement(const Arrangement& arrangement,
                                          const AssetIndex* index);

/// All placed meshes in world coordinates as one OBJ, one `o` group per
/// object id.
std::string merged_obj(const std::vector<PlacedMesh>& placed);

}  // namespace smc
