#include "smc/error.hpp"

namespace smc {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::InvalidState: return "invalid-state";
    case ErrorKind::Io: return "io-error";
    case ErrorKind::Parse: return "parse-error";
    case ErrorKind::Config: return "config-error";
    case ErrorKind::Transport: return "transport-error";
    case ErrorKind::BudgetExceeded: return "budget-exceeded";
    case ErrorKind::MissingFixture: return "missing-fixture";
    case ErrorKind::Classification: return "classification-error";
    case ErrorKind::Observation: return "observation-error";
    case ErrorKind::LearningFailed: return "learning-failed";
    case ErrorKind::InferenceFailed: return "inference-failed";
    case ErrorKind::NoMetaProgram: return "no-meta-program-for-type";
    case ErrorKind::NoAssetFound: return "no-asset-found";
    case ErrorKind::OptimizationFailed: return "optimization-failed";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message, std::string stage)
    : std::runtime_error(message), kind_(kind), stage_(std::move(stage)) {}

Error Error::with_stage(std::string stage) const {
  if (!stage_.empty()) return *this;
  return Error(kind_, what(), std::move(stage));
}

}  // namespace smc
