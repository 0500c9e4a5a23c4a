#include "smc/assets/asset_index.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>

#include <fmt/core.h>

#include "smc/error.hpp"

namespace smc {

using nlohmann::json;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

AssetRecord parse_row(const json& row, const std::filesystem::path& base) {
  if (!row.is_object()) throw std::invalid_argument("row is not an object");
  AssetRecord r;
  const auto text = [&](const char* key) {
    if (!row.contains(key) || !row[key].is_string() || row[key].get<std::string>().empty()) {
      throw std::invalid_argument(fmt::format("missing or empty \"{}\"", key));
    }
    return row[key].get<std::string>();
  };
  r.asset_id = text("asset_id");
  r.label = text("label");
  if (row.contains("wnsynset") && !row["wnsynset"].is_null()) {
    if (!row["wnsynset"].is_string()) throw std::invalid_argument("\"wnsynset\" is not a string");
    r.wnsynset = row["wnsynset"].get<std::string>();
  }
  const json& size = row.value("full_size", json());
  if (!size.is_array() || size.size() != 3) {
    throw std::invalid_argument("\"full_size\" must be a 3-element array");
  }
  for (int i = 0; i < 3; ++i) {
    if (!size[i].is_number()) throw std::invalid_argument("\"full_size\" must be numeric");
    r.full_size[i] = size[i].get<double>();
  }
  if (!r.full_size.allFinite() || (r.full_size.array() <= 0).any()) {
    throw std::invalid_argument("\"full_size\" must be positive");
  }
  std::filesystem::path mesh = text("mesh_path");
  if (mesh.is_relative()) mesh = base / mesh;
  if (!std::filesystem::is_regular_file(mesh)) {
    throw std::invalid_argument(fmt::format("mesh file not found: {}", mesh.string()));
  }
  r.mesh_path = std::move(mesh);
  return r;
}

}  // namespace

AssetIndex AssetIndex::build(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorKind::Io, "cannot read asset manifest: " + manifest.string());
  const auto base = manifest.parent_path();
  AssetIndex index;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      index.insert(parse_row(json::parse(line), base), n);
    } catch (const std::exception& e) {
      index.warnings_.push_back(fmt::format("line {}: {}", n, e.what()));
    }
  }
  if (in.bad()) throw Error(ErrorKind::Io, "error reading asset manifest: " + manifest.string());
  index.rebuild_groups();
  return index;
}

AssetIndex AssetIndex::from_records(std::vector<AssetRecord> records) {
  AssetIndex index;
  std::size_t n = 0;
  for (auto& r : records) index.insert(std::move(r), ++n);
  index.rebuild_groups();
  return index;
}

void AssetIndex::insert(AssetRecord record, std::size_t line) {
  auto it = std::find_if(records_.begin(), records_.end(),
                         [&](const AssetRecord& r) { return r.asset_id == record.asset_id; });
  if (it != records_.end()) {
    warnings_.push_back(
        fmt::format("line {}: duplicate asset_id \"{}\" replaces the earlier row", line,
                    record.asset_id));
    *it = std::move(record);
    return;
  }
  records_.push_back(std::move(record));
}

void AssetIndex::rebuild_groups() {
  by_label_.clear();
  by_synset_.clear();
  for (std::size_t i = 0; i < records_.size(); ++i) {
    by_label_[lower(records_[i].label)].push_back(i);
    if (records_[i].wnsynset) by_synset_[*records_[i].wnsynset].push_back(i);
  }
}

const AssetRecord* AssetIndex::find(const std::string& asset_id) const {
  for (const auto& r : records_) {
    if (r.asset_id == asset_id) return &r;
  }
  return nullptr;
}

std::vector<const AssetRecord*> AssetIndex::lookup(
    const std::string& label, const std::optional<std::string>& wnsynset) const {
  const std::vector<std::size_t>* ids = nullptr;
  if (wnsynset) {
    if (auto it = by_synset_.find(*wnsynset); it != by_synset_.end()) ids = &it->second;
  }
  if (!ids) {
    if (auto it = by_label_.find(lower(label)); it != by_label_.end()) ids = &it->second;
  }
  std::vector<const AssetRecord*> out;
  if (ids) {
    for (std::size_t i : *ids) out.push_back(&records_[i]);
  }
  return out;
}

json AssetIndex::to_json() const {
  json records = json::array();
  for (const auto& r : records_) {
    json j = {{"asset_id", r.asset_id},
              {"label", r.label},
              {"full_size", {r.full_size.x(), r.full_size.y(), r.full_size.z()}},
              {"mesh_path", r.mesh_path.string()}};
    if (r.wnsynset) j["wnsynset"] = *r.wnsynset;
    records.push_back(std::move(j));
  }
  return {{"records", records}, {"warnings", warnings_}};
}

const std::vector<Rotation>& axis_aligned_rotations() {
  static const std::vector<Rotation> all = [] {
    std::vector<Rotation> out;
    // Signed permutation matrices with determinant +1; identity sorts first.
    const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (const auto& p : perms) {
      for (int signs = 0; signs < 8; ++signs) {
        Rotation m = Rotation::Zero();
        for (int row = 0; row < 3; ++row) m(row, p[row]) = (signs >> row) & 1 ? -1.0 : 1.0;
        if (m.determinant() > 0) out.push_back(m);
      }
    }
    return out;
  }();
  return all;
}

double dimension_score(const Vec3& oriented_size, const Vec3& target_full_size) {
  return ((oriented_size - target_full_size).cwiseAbs().array() / target_full_size.array()).sum();
}

std::vector<RankedCandidate> rank_assets(const AssetIndex& index, const std::string& label,
                                         const Vec3& target_full_size, bool allow_rotation,
                                         const std::optional<std::string>& wnsynset) {
  if (!target_full_size.allFinite() || (target_full_size.array() <= 0).any()) {
    throw Error(ErrorKind::InvalidArgument, "target size must be positive");
  }
  std::vector<RankedCandidate> out;
  for (const AssetRecord* rec : index.lookup(label, wnsynset)) {
    RankedCandidate best{rec, Rotation::Identity(), dimension_score(rec->full_size, target_full_size)};
    if (allow_rotation) {
      for (const Rotation& r : axis_aligned_rotations()) {
        const double s = dimension_score(r.cwiseAbs() * rec->full_size, target_full_size);
        if (s < best.score) best = {rec, r, s};
      }
    }
    out.push_back(best);
  }
  std::sort(out.begin(), out.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.score != b.score) return a.score < b.score;
    return a.record->asset_id < b.record->asset_id;
  });
  return out;
}

const RankedCandidate& pick_asset(const std::vector<RankedCandidate>& ranked, int k,
                                  std::uint64_t rng_seed) {
  if (ranked.empty()) throw Error(ErrorKind::NoAssetFound, "no candidate assets");
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be positive");
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());
  std::mt19937_64 rng(rng_seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  return ranked[pick(rng)];
}

std::uint64_t object_seed(std::uint64_t run_seed, std::size_t object_index) {
  // splitmix64 finalizer over the pair.
  std::uint64_t z = run_seed + 0x9E3779B97F4A7C15ull * (object_index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace smc
