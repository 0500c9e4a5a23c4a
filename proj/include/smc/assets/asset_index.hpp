#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "smc/scene/types.hpp"

namespace smc {

struct AssetRecord {
  std::string asset_id;
  std::string label;
  std::optional<std::string> wnsynset;
  Vec3 full_size = Vec3::Ones();  // canonical pose, meters
  std::filesystem::path mesh_path;
};

/// Immutable view over the well-formed rows of an asset manifest.
///
/// Manifest: JSON Lines, one object per row:
///
///     {"asset_id": "book_01", "label": "book", "wnsynset": "book.n.01",
///      "full_size": [0.15, 0.03, 0.22], "mesh_path": "meshes/book_01.obj"}
///
/// Relative mesh paths resolve against the manifest's directory. Blank rows
/// are skipped; malformed rows become warnings.
class AssetIndex {
 public:
  AssetIndex() = default;

  /// Throws ErrorKind::Io when the manifest cannot be read.
  static AssetIndex build(const std::filesystem::path& manifest);
  static AssetIndex from_records(std::vector<AssetRecord> records);

  const std::vector<AssetRecord>& records() const { return records_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  std::size_t size() const { return records_.size(); }

  const AssetRecord* find(const std::string& asset_id) const;

  /// Records for a category. A known `wnsynset` takes precedence; otherwise
  /// labels match case-insensitively. Unknown categories yield nothing.
  std::vector<const AssetRecord*> lookup(const std::string& label,
                                         const std::optional<std::string>& wnsynset = {}) const;

  nlohmann::json to_json() const;

 private:
  void insert(AssetRecord record, std::size_t line);
  void rebuild_groups();

  std::vector<AssetRecord> records_;
  std::vector<std::string> warnings_;
  std::map<std::string, std::vector<std::size_t>> by_label_;
  std::map<std::string, std::vector<std::size_t>> by_synset_;
};

inline constexpr int kDefaultTopK = 5;

struct RankedCandidate {
  const AssetRecord* record = nullptr;
  Rotation orientation = Rotation::Identity();  // applied to the canonical mesh
  double score = 0;
};

/// The 24 proper rotations that map coordinate axes onto coordinate axes,
/// identity first.
const std::vector<Rotation>& axis_aligned_rotations();

/// Sum over axes of |oriented size - target| / target.
double dimension_score(const Vec3& oriented_size, const Vec3& target_full_size);

/// Candidates for `label` sorted by score, ties broken by asset_id. Each
/// candidate carries the best orientation (identity unless `allow_rotation`).
std::vector<RankedCandidate> rank_assets(const AssetIndex& index, const std::string& label,
                                         const Vec3& target_full_size, bool allow_rotation,
                                         const std::optional<std::string>& wnsynset = {});

/// Uniform pick among the first min(k, size) candidates. Throws
/// ErrorKind::NoAssetFound when `ranked` is empty.
const RankedCandidate& pick_asset(const std::vector<RankedCandidate>& ranked, int k,
                                  std::uint64_t rng_seed);

/// Per-object seed derived from a run seed.
std::uint64_t object_seed(std::uint64_t run_seed, std::size_t object_index);

}  // namespace smc
