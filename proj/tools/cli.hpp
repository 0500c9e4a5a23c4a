#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "smc/error.hpp"
#include "smc/llm/backend.hpp"
#include "smc/pipeline/pipeline.hpp"

namespace smc::cli {

enum ExitCode : int {
  kOk = 0,
  kOther = 1,
  kConfig = 2,
  kParse = 3,
  kLearning = 4,
  kIo = 5,
  kNoMeta = 6,
};

int exit_code(ErrorKind kind);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

struct RunConfig {
  std::filesystem::path library = "library";
  std::optional<std::filesystem::path> assets;
  std::string backend = "replay";
  std::optional<std::filesystem::path> fixtures;
  std::optional<std::filesystem::path> record;
  std::optional<std::filesystem::path> transcripts;
  std::vector<std::string> worker;
  HttpChatConfig http;
  double budget_usd = -1.0;
  PipelineConfig pipeline;

  /// Throws Config when the backend kind is unknown or its inputs are missing.
  void validate() const;
};

/// Applies a YAML config file on top of `cfg`.
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);
/// Applies SMC_* environment variables on top of `cfg`.
void apply_env(RunConfig& cfg, const EnvLookup& env);

/// A fresh pipeline for one job. Jobs share `ledger` so the budget covers the
/// whole run.
Pipeline make_pipeline(const RunConfig& cfg, std::shared_ptr<CostLedger> ledger,
                       const std::optional<std::filesystem::path>& transcripts);

/// Runs `smc` with argv-style arguments (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const EnvLookup& env = process_env());

}  // namespace smc::cli
