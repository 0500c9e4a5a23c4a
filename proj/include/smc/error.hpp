#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smc {

enum class ErrorKind {
  InvalidArgument,
  InvalidState,
  Io,
  Parse,
  Config,
  Transport,
  BudgetExceeded,
  MissingFixture,
  Classification,
  Observation,
  LearningFailed,
  InferenceFailed,
  NoMetaProgram,
  NoAssetFound,
  OptimizationFailed,
};

std::string_view to_string(ErrorKind kind);

/// Error carrying a machine-readable kind and, for pipeline failures, the
/// stage that raised it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string stage = {});

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }

  /// Same error re-tagged with a pipeline stage (keeps an existing tag).
  Error with_stage(std::string stage) const;

 private:
  ErrorKind kind_;
  std::string stage_;
};

}  // namespace smc
