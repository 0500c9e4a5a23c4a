#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace smc {

/// Whole-file read; throws ErrorKind::Io.
std::string read_text_file(const std::filesystem::path& path);

/// Parses a JSON document; unreadable → Io, malformed → Parse.
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Writes via a temporary sibling, fsync and rename so readers never observe
/// a partial file. Creates parent directories. Throws ErrorKind::Io.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// Lower-case hex SHA-256.
std::string sha256_hex(const std::string& data);

/// Exclusive advisory lock on `path` (created if missing), released on
/// destruction.
class FileLock {
 public:
  explicit FileLock(const std::filesystem::path& path);
  ~FileLock();
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace smc
