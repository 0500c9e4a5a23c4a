#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "smc/assets/asset_index.hpp"
#include "smc/exec/executor.hpp"
#include "smc/geo/optimizer.hpp"
#include "smc/llm/reply.hpp"
#include "smc/llm/session.hpp"
#include "smc/program/library.hpp"
#include "smc/validate/validator.hpp"

namespace smc {

struct PipelineConfig {
  int rewrite_max_iters = 5;
  int meta_max_iters = 5;
  int call_max_iters = 3;
  ExecLimits exec_limits;
  ValidatorConfig validator;
  GeoConfig geo;
  /// Forces touch mode on or off instead of asking the LLM.
  std::optional<bool> touch_override;
  std::uint64_t seed = 0;
  int top_k = kDefaultTopK;
  bool rescale_assets = false;
  /// Ask the LLM to map labels onto the index's synset keys before retrieval.
  bool enrich_synsets = false;

  void validate() const;
};

/// Shared state of one pipeline run. Sessions keep a reference to `llm`, so
/// the pipeline must outlive them.
struct Pipeline {
  LlmContext llm;
  std::shared_ptr<Executor> executor;
  PipelineConfig config;
};

struct Observations {
  std::map<std::string, int> counts;
  std::string general_pattern;
  std::string xyz_pattern;
  std::string displacement_groups;
};

/// Classifies within an existing session (the learning session asks after
/// its observations). One re-ask on an unparseable reply, then
/// Classification error.
MotifType classify_description(ChatSession& session, const std::string& description);
/// Classification in a fresh session.
MotifType classify_description(const Pipeline& p, const std::string& description);

/// The four observation prompts in order. Throws InvalidArgument for an empty
/// program before any call, Observation when the counts stay unparseable.
Observations observe_arrangement(ChatSession& session, const ProgramText& naive,
                                 const std::string& description);

/// Criterion (2) verdict from a separate judge session.
CriterionResult judge_hardcoding(const Pipeline& p, const std::string& program);

struct RewriteResult {
  ProgramText program;
  ObjectTrace trace;
  ValidationReport report;
  int iterations = 0;
};

/// Rewrites the naive program into a motif program in `session` (which
/// already holds the observations). Throws LearningFailed once
/// rewrite_max_iters candidates have failed.
RewriteResult rewrite_to_motif(const Pipeline& p, ChatSession& session, const ProgramText& naive,
                               const Arrangement& reference);

struct MetaResult {
  MetaProgram meta;
  ValidationReport report;
  int iterations = 0;
};

/// Generalizes same-type motif programs into a documented meta-program.
/// `ids` name the programs for MetaProgram::validated_against.
MetaResult generalize_to_meta(const Pipeline& p, ChatSession& session,
                              const std::vector<ProgramText>& programs,
                              const std::vector<std::string>& ids,
                              const std::optional<MetaProgram>& prior);

/// "Program i:" blocks with each description and fenced source.
std::string format_all_programs(const std::vector<ProgramText>& programs);

struct CallResult {
  std::string call;
  ObjectTrace trace;
  int iterations = 0;
};

/// Asks for a call of `meta` matching `description` and executes it, feeding
/// executor errors back. Throws InferenceFailed after call_max_iters.
CallResult synthesize_call(const Pipeline& p, const MetaProgram& meta,
                           const std::string& description);

/// Per-label orientation verdict; defaulted (every label "correct") when the
/// reply stays unparseable.
CommonsenseVerdict ask_orientation_likelihood(const Pipeline& p, const std::string& description,
                                              const std::vector<std::string>& labels);
/// Rotation search is enabled for a label iff P(incorrect) > 0.5.
bool rotation_search_enabled(const CommonsenseVerdict& verdict, const std::string& label);

/// Touch verdict; defaulted to no_touch when the reply stays unparseable.
CommonsenseVerdict ask_touch_likelihood(const Pipeline& p, const std::string& description);
bool touch_enabled(const CommonsenseVerdict& verdict);

/// Best synset key per label from `keys`, or nullopt for "none". Returns all
/// nullopt when the reply stays unparseable.
std::vector<std::optional<std::string>> ask_synset_keys(const Pipeline& p,
                                                        const std::vector<std::string>& keys,
                                                        const std::vector<std::string>& labels);

struct LearnResult {
  MotifType motif_type{MotifKind::Stack};
  Observations observations;
  ProgramText naive;
  RewriteResult motif;
  std::string motif_id;
  MetaResult meta;
  int programs_generalized = 0;
  double cost_usd = 0.0;
};

/// Learning phase end to end. Stage errors carry the stage name.
LearnResult learn(const Pipeline& p, const std::string& description,
                  const Arrangement& arrangement, ProgramLibrary& lib);

struct ObjectBinding {
  std::string object_id;
  std::string label;
  std::optional<std::string> asset_id;
  Rotation orientation = Rotation::Identity();
  double score = 0.0;
  bool rotation_search = false;
};

struct GenerateResult {
  MotifType motif_type{MotifKind::Stack};
  std::string function_name;
  CallResult call;
  std::optional<CommonsenseVerdict> orientation;
  std::optional<CommonsenseVerdict> touch_verdict;
  bool touch = false;
  std::vector<ObjectBinding> bindings;
  std::vector<std::string> warnings;
  OptimizeResult optimized;
  Arrangement arrangement;
  std::vector<std::pair<std::string, double>> stage_seconds;
  double cost_usd = 0.0;
};

/// Inference phase end to end. Without an asset index every object is placed
/// as its box; labels with no matching asset fall back to boxes with a
/// warning. Throws NoMetaProgram when the classified type has not been
/// learned.
GenerateResult generate(const Pipeline& p, const std::string& description,
                        const ProgramLibrary& lib, const AssetIndex* assets);

}  // namespace smc
