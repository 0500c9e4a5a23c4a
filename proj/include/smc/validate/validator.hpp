#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "smc/exec/trace.hpp"
#include "smc/scene/geometry.hpp"

namespace smc {

inline constexpr double kObjectIouThreshold = 0.9;
inline constexpr double kHalfSizeRelTolerance = 1e-3;

namespace criterion {
inline constexpr const char* kHardcode = "hardcode";
inline constexpr const char* kCounts = "counts";
inline constexpr const char* kPlacements = "placements";
inline constexpr const char* kExtents = "extents";
inline constexpr const char* kDirections = "directions";
}  // namespace criterion

/// Expected vs actual values for one object (or object pair).
struct CriterionDetail {
  std::string subject;
  std::string expected;
  std::string actual;
};

struct CriterionResult {
  std::string criterion;
  bool passed = true;
  std::string feedback;  // empty when passed
  std::vector<CriterionDetail> details;
  std::optional<int> example;  // 1-based example ordinal in meta reports
};

enum class ReportTarget { Motif, Meta };

struct ValidationReport {
  ReportTarget target = ReportTarget::Motif;
  std::vector<CriterionResult> results;
  bool passed = true;

  /// First result for `criterion` (and `example` when given), or nullptr.
  const CriterionResult* find(std::string_view criterion,
                              std::optional<int> example = std::nullopt) const;
  /// Names of failed criteria in report order, without repeats.
  std::vector<std::string> failed_criteria() const;
};

nlohmann::json report_to_json(const ValidationReport& report);

struct ValidatorConfig {
  double iou_threshold = kObjectIouThreshold;
  double half_size_rel_tol = kHalfSizeRelTolerance;
  double dead_zone = kDefaultDeadZone;
};

/// (trace index, reference index) pairs: per label, the assignment that
/// minimises total centroid distance. Requires equal per-label counts.
std::vector<std::pair<std::size_t, std::size_t>> pair_objects(
    const std::vector<SceneObject>& actual, const std::vector<SceneObject>& expected);

/// Minimum-cost perfect assignment for a square cost matrix (row → column).
std::vector<std::size_t> min_cost_assignment(const std::vector<std::vector<double>>& cost);

CriterionResult check_counts(const ObjectTrace& trace, const Arrangement& reference);
CriterionResult check_placements(const ObjectTrace& trace, const Arrangement& reference,
                                 const ValidatorConfig& cfg = {});
CriterionResult check_extents(const ObjectTrace& trace, const Arrangement& reference,
                              const ValidatorConfig& cfg = {});
CriterionResult check_pairwise_directions(const ObjectTrace& trace,
                                          const ObjectTrace& reference_trace,
                                          const ValidatorConfig& cfg = {});

/// Criterion (2) verdict from the LLM judge.
CriterionResult hardcode_judgment(bool valid, const std::vector<std::string>& variable_names);

/// Criteria (2)-(5) in order. When counts fail, placements and extents are
/// reported as failed without evaluation.
ValidationReport validate_motif_program(const ObjectTrace& trace, const Arrangement& reference,
                                        const CriterionResult& hardcode,
                                        const ValidatorConfig& cfg = {});

/// Per example i (1-based): counts, then directions.
ValidationReport validate_meta_program(const std::vector<ObjectTrace>& call_traces,
                                       const std::vector<ObjectTrace>& motif_traces,
                                       const ValidatorConfig& cfg = {});

/// Feedback text for generalize_low_level_feedback: one "Example program i:"
/// block per failing example.
std::string meta_feedback(const ValidationReport& report);

}  // namespace smc
