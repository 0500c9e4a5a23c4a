#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smc/program/program.hpp"

namespace smc {

/// Motif-program and meta-program library on disk.
///
/// Layout under `root`:
///
///     <motif_type>/manifest.json    type, program entries, meta entry
///     <motif_type>/motif_001.py     motif programs, numbered in store order
///     <motif_type>/meta.py          the meta-program for the type
///     .smc.lock                     advisory write lock
///
/// One writer at a time (flock on .smc.lock); readers see the snapshot taken
/// at open() or the last reload().
class ProgramLibrary {
 public:
  struct MotifEntry {
    std::string id;  // e.g. "stack/motif_001"
    ProgramText program;
  };

  /// Opens (and creates) a library at `root`, loading every type directory.
  static ProgramLibrary open(const std::filesystem::path& root);

  const std::filesystem::path& root() const { return root_; }

  /// Appends a validated motif program under its motif type; durable on
  /// return. Returns the entry id. Throws InvalidArgument when the program is
  /// not a classified motif program, Io on storage failure.
  std::string store_motif_program(const ProgramText& program);

  /// Stored programs of `type` in insertion order (empty when none).
  std::vector<ProgramText> list_motif_programs(const MotifType& type) const;
  std::vector<MotifEntry> motif_entries(const MotifType& type) const;

  /// Replaces any prior meta-program of the same type.
  void store_meta_program(const MetaProgram& meta);
  std::optional<MetaProgram> fetch_meta_program(const MotifType& type) const;

  std::vector<MotifType> motif_types() const;

  void reload();

  std::filesystem::path type_dir(const MotifType& type) const;

 private:
  explicit ProgramLibrary(std::filesystem::path root) : root_(std::move(root)) {}

  struct TypeEntries {
    std::vector<MotifEntry> programs;
    std::vector<std::string> files;
    std::optional<MetaProgram> meta;
  };

  void load_type_dir(const std::filesystem::path& dir);
  void write_manifest(const MotifType& type, const TypeEntries& entries) const;

  std::filesystem::path root_;
  std::map<std::string, TypeEntries> types_;
};

}  // namespace smc
