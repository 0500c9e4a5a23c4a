#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "smc/exec/trace.hpp"

namespace smc {

/// Runs DSL programs and meta-program calls. Implementations return program
/// failures as ExecError and throw smc::Error only for host-side problems.
class Executor {
 public:
  virtual ~Executor() = default;
  virtual ExecOutcome execute(const ExecRequest& req) = 0;
};

/// Digest identifying a request for fixture lookup: SHA-256 over the
/// normalized source, entry, call text and (when `with_seed`) the seed.
std::string request_digest(const ExecRequest& req, bool with_seed = true);

/// Serves recorded outcomes from a directory of JSON files
///     {"request": <wire request>, "response": <wire response>}
/// A fixture whose request has no limits.rng_seed matches any seed. Misses
/// are written to <dir>/missing/<digest>.request.json and raise
/// MissingFixture, so new fixtures can be produced by running the real
/// worker on the dumped requests.
class FixtureExecutor final : public Executor {
 public:
  FixtureExecutor() = default;
  explicit FixtureExecutor(std::filesystem::path dir);

  void add(const ExecRequest& req, const ExecOutcome& outcome, bool any_seed = false);
  ExecOutcome execute(const ExecRequest& req) override;

  std::size_t size() const { return exact_.size() + any_seed_.size(); }

 private:
  void load_file(const std::filesystem::path& file);

  std::filesystem::path dir_;
  std::map<std::string, nlohmann::json> exact_;
  std::map<std::string, nlohmann::json> any_seed_;
  std::mutex mu_;
};

/// Launches `argv` once per request (one-shot worker), writes the request
/// line to its stdin and reads one response line from its stdout. The host
/// kills the worker when it outlives the request timeout by `grace_s`.
class SubprocessExecutor final : public Executor {
 public:
  explicit SubprocessExecutor(std::vector<std::string> argv, double grace_s = 0.5);

  ExecOutcome execute(const ExecRequest& req) override;

 private:
  std::vector<std::string> argv_;
  double grace_s_;
};

}  // namespace smc
