#include "smc/program/library.hpp"

#include <fmt/format.h>

#include "smc/error.hpp"
#include "smc/io.hpp"

namespace smc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kMetaFile = "meta.py";
constexpr const char* kLockFile = ".smc.lock";

}  // namespace

ProgramLibrary ProgramLibrary::open(const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec || !fs::is_directory(root)) {
    throw Error(ErrorKind::Io, "cannot create library root " + root.string());
  }
  ProgramLibrary lib(root);
  lib.reload();
  return lib;
}

fs::path ProgramLibrary::type_dir(const MotifType& type) const { return root_ / type.name(); }

void ProgramLibrary::reload() {
  types_.clear();
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root_)) {
    if (e.is_directory() && fs::exists(e.path() / kManifest)) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) load_type_dir(d);
}

void ProgramLibrary::load_type_dir(const fs::path& dir) {
  const json manifest = read_json_file(dir / kManifest);
  const auto type_name = manifest.at("motif_type").get<std::string>();
  const auto type = MotifType::parse(type_name);
  if (!type) throw Error(ErrorKind::Parse, "unknown motif type in " + (dir / kManifest).string());

  TypeEntries entries;
  for (const auto& jp : manifest.value("motif_programs", json::array())) {
    const auto file = jp.at("file").get<std::string>();
    ProgramText p;
    p.source = read_text_file(dir / file);
    p.motif_type = *type;
    p.description = jp.value("description", "");
    p.provenance = Provenance::Motif;
    if (jp.contains("created_from") && !jp["created_from"].is_null()) {
      p.created_from = jp["created_from"].get<std::string>();
    }
    entries.programs.push_back({type->name() + "/" + jp.at("id").get<std::string>(), std::move(p)});
    entries.files.push_back(file);
  }
  if (manifest.contains("meta_program") && !manifest["meta_program"].is_null()) {
    const json& jm = manifest["meta_program"];
    MetaProgram m;
    m.source = read_text_file(dir / jm.value("file", kMetaFile));
    m.function_name = jm.at("function_name").get<std::string>();
    m.motif_type = *type;
    m.example_calls = jm.value("example_calls", std::vector<std::string>{});
    m.validated_against = jm.value("validated_against", std::vector<std::string>{});
    entries.meta = std::move(m);
  }
  types_[type->name()] = std::move(entries);
}

void ProgramLibrary::write_manifest(const MotifType& type, const TypeEntries& entries) const {
  json programs = json::array();
  for (std::size_t i = 0; i < entries.programs.size(); ++i) {
    const auto& e = entries.programs[i];
    const auto slash = e.id.find('/');
    programs.push_back({{"id", e.id.substr(slash + 1)},
                        {"file", entries.files[i]},
                        {"description", e.program.description},
                        {"created_from", e.program.created_from ? json(*e.program.created_from)
                                                                : json(nullptr)}});
  }
  json meta = nullptr;
  if (entries.meta) {
    meta = {{"file", kMetaFile},
            {"function_name", entries.meta->function_name},
            {"example_calls", entries.meta->example_calls},
            {"validated_against", entries.meta->validated_against}};
  }
  const json manifest = {{"motif_type", type.name()},
                         {"motif_programs", std::move(programs)},
                         {"meta_program", std::move(meta)}};
  write_file_atomic(type_dir(type) / kManifest, manifest.dump(2) + "\n");
}

std::string ProgramLibrary::store_motif_program(const ProgramText& program) {
  if (program.provenance != Provenance::Motif) {
    throw Error(ErrorKind::InvalidArgument, "only motif programs can be stored in the library");
  }
  if (!program.motif_type) {
    throw Error(ErrorKind::InvalidArgument, "motif program has no motif type");
  }
  if (program.source.empty()) {
    throw Error(ErrorKind::InvalidArgument, "motif program source is empty");
  }
  const FileLock lock(root_ / kLockFile);
  const MotifType& type = *program.motif_type;
  // Re-read this type so concurrent writers append rather than overwrite.
  if (fs::exists(type_dir(type) / kManifest)) load_type_dir(type_dir(type));
  TypeEntries& entries = types_[type.name()];

  const std::string stem = fmt::format("motif_{:03d}", entries.programs.size() + 1);
  const std::string file = stem + ".py";
  write_file_atomic(type_dir(type) / file, program.source);
  entries.programs.push_back({type.name() + "/" + stem, program});
  entries.files.push_back(file);
  write_manifest(type, entries);
  return entries.programs.back().id;
}

std::vector<ProgramLibrary::MotifEntry> ProgramLibrary::motif_entries(const MotifType& type) const {
  const auto it = types_.find(type.name());
  if (it == types_.end()) return {};
  return it->second.programs;
}

std::vector<ProgramText> ProgramLibrary::list_motif_programs(const MotifType& type) const {
  std::vector<ProgramText> out;
  for (auto& e : motif_entries(type)) out.push_back(std::move(e.program));
  return out;
}

void ProgramLibrary::store_meta_program(const MetaProgram& meta) {
  if (meta.source.empty() || meta.function_name.empty()) {
    throw Error(ErrorKind::InvalidArgument, "meta-program is incomplete");
  }
  const FileLock lock(root_ / kLockFile);
  if (fs::exists(type_dir(meta.motif_type) / kManifest)) load_type_dir(type_dir(meta.motif_type));
  TypeEntries& entries = types_[meta.motif_type.name()];
  write_file_atomic(type_dir(meta.motif_type) / kMetaFile, meta.source);
  entries.meta = meta;
  write_manifest(meta.motif_type, entries);
}

std::optional<MetaProgram> ProgramLibrary::fetch_meta_program(const MotifType& type) const {
  const auto it = types_.find(type.name());
  if (it == types_.end()) return std::nullopt;
  return it->second.meta;
}

std::vector<MotifType> ProgramLibrary::motif_types() const {
  std::vector<MotifType> out;
  for (const auto& [name, _] : types_) out.push_back(*MotifType::parse(name));
  return out;
}

}  // namespace smc
