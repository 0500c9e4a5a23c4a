#include "smc/pipeline/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include <fmt/format.h>

#include "smc/error.hpp"
#include "smc/geo/mesh.hpp"

namespace smc {

namespace {

template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw e.with_stage(stage);
  }
}

/// Asks once, and once more with invalid_response when `parse` rejects the
/// reply.
template <class Parse>
auto ask_parsed(ChatSession& s, const std::string& tmpl, const Bindings& b, Parse parse,
                const std::string& complaint) -> decltype(parse(std::string{})) {
  auto r = parse(s.ask(tmpl, b));
  if (r) return r;
  return parse(s.ask("invalid_response", {{"FEEDBACK", complaint}}));
}

ExecOutcome run(const Pipeline& p, const std::string& source) {
  ExecRequest req;
  req.source = source;
  req.limits = p.config.exec_limits;
  req.limits.rng_seed = static_cast<std::int64_t>(p.config.seed);
  return p.executor->execute(req);
}

ExecOutcome run_call(const Pipeline& p, const std::string& source, const std::string& call) {
  ExecRequest req;
  req.source = source;
  req.entry = EntryKind::Call;
  req.call_source = call;
  req.limits = p.config.exec_limits;
  req.limits.rng_seed = static_cast<std::int64_t>(p.config.seed);
  return p.executor->execute(req);
}

const char* feedback_template(const std::string& criterion) {
  if (criterion == criterion::kHardcode) return "optimize_lowlevel_feedback_naive_listing";
  if (criterion == criterion::kCounts) return "optimize_lowlevel_feedback_num_objs";
  if (criterion == criterion::kPlacements) return "optimize_lowlevel_feedback_centroids";
  return "optimize_lowlevel_feedback_bounding_boxes";
}

std::string report_summary(const ValidationReport& r) {
  std::string out;
  for (const auto& c : r.failed_criteria()) out += (out.empty() ? "" : ", ") + c;
  return out.empty() ? "none" : out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const char* kNoPriorMeta = "# None";

}  // namespace

void PipelineConfig::validate() const {
  if (rewrite_max_iters < 1 || meta_max_iters < 1 || call_max_iters < 1) {
    throw Error(ErrorKind::Config, "max_iters must be at least 1");
  }
  if (top_k < 1) throw Error(ErrorKind::Config, "top_k must be at least 1");
  geo.validate();
}

MotifType classify_description(ChatSession& session, const std::string& description) {
  auto type = ask_parsed(
      session, "classify", {{"DESCRIPTION", description}},
      [](const std::string& r) { return parse_motif_reply(r); },
      "The response is not one of the listed motif types.");
  if (!type) {
    throw Error(ErrorKind::Classification,
                fmt::format("no motif type in reply: {}", session.entries().back().reply),
                "classify");
  }
  return *type;
}

MotifType classify_description(const Pipeline& p, const std::string& description) {
  ChatSession s("classify", p.llm);
  return classify_description(s, description);
}

Observations observe_arrangement(ChatSession& session, const ProgramText& naive,
                                 const std::string& description) {
  if (naive.source.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error(ErrorKind::InvalidArgument, "empty program", "observe");
  }
  Observations obs;
  auto counts = ask_parsed(
      session, "optimize_highlevel_count",
      {{"DESCRIPTION", description}, {"PROGRAM", naive.source}},
      [](const std::string& r) { return parse_counts(r); },
      "The response does not map object types to non-negative integer counts.");
  if (!counts) {
    throw Error(ErrorKind::Observation,
                fmt::format("unparseable counts: {}", session.entries().back().reply), "observe");
  }
  obs.counts = std::move(*counts);
  obs.general_pattern =
      session.ask("optimize_highlevel_general_pattern", {{"DESCRIPTION", description}});
  obs.xyz_pattern = session.ask("optimize_highlevel_xyz_pattern");
  obs.displacement_groups = session.ask("optimize_highlevel_xyz_displacements");
  return obs;
}

CriterionResult judge_hardcoding(const Pipeline& p, const std::string& program) {
  ChatSession s("judge", p.llm);
  auto verdict = ask_parsed(
      s, "validate_naive_listing", {{"PROGRAM", program}},
      [](const std::string& r) { return parse_hardcode_verdict(r); },
      "The response does not contain the requested json structure.");
  // An unreadable verdict counts against the program.
  if (!verdict) return hardcode_judgment(false, {});
  return hardcode_judgment(verdict->valid, verdict->variable_names);
}

RewriteResult rewrite_to_motif(const Pipeline& p, ChatSession& session, const ProgramText& naive,
                               const Arrangement& reference) {
  std::string reply = session.ask("optimize_lowlevel");
  std::string last_failure;
  for (int iter = 1;; ++iter) {
    const std::string code = extract_code(reply);
    const ExecOutcome outcome = run(p, code);
    std::string tmpl;
    std::string feedback;
    if (const auto* err = std::get_if<ExecError>(&outcome)) {
      tmpl = "optimize_lowlevel_feedback_syntax";
      feedback = err->describe();
      last_failure = feedback;
    } else {
      const auto& trace = std::get<ObjectTrace>(outcome);
      const CriterionResult hardcode = judge_hardcoding(p, code);
      ValidationReport report =
          validate_motif_program(trace, reference, hardcode, p.config.validator);
      if (report.passed) {
        RewriteResult out;
        out.program.source = code;
        out.program.motif_type = naive.motif_type;
        out.program.description = naive.description;
        out.program.provenance = Provenance::Motif;
        out.trace = trace;
        out.report = std::move(report);
        out.iterations = iter;
        return out;
      }
      const std::string failed = report.failed_criteria().front();
      tmpl = feedback_template(failed);
      feedback = report.find(failed)->feedback;
      last_failure = fmt::format("failed criteria: {}", report_summary(report));
    }
    if (iter >= p.config.rewrite_max_iters) {
      throw Error(ErrorKind::LearningFailed,
                  fmt::format("no valid motif program after {} iterations; last: {}", iter,
                              last_failure),
                  "rewrite");
    }
    reply = session.ask(tmpl, {{"FEEDBACK", feedback}});
  }
}

std::string format_all_programs(const std::vector<ProgramText>& programs) {
  std::string out;
  for (std::size_t i = 0; i < programs.size(); ++i) {
    if (i) out += "\n";
    out += fmt::format("Program {}: \"{}\"\n```python\n{}\n```", i + 1, programs[i].description,
                       programs[i].source);
  }
  return out;
}

MetaResult generalize_to_meta(const Pipeline& p, ChatSession& session,
                              const std::vector<ProgramText>& programs,
                              const std::vector<std::string>& ids,
                              const std::optional<MetaProgram>& prior) {
  if (programs.empty()) throw Error(ErrorKind::InvalidArgument, "no programs to generalize");
  if (ids.size() != programs.size()) {
    throw Error(ErrorKind::InvalidArgument, "one id per program required");
  }
  const auto type = programs.front().motif_type;
  for (const auto& prog : programs) {
    if (!prog.motif_type || prog.motif_type != type) {
      throw Error(ErrorKind::InvalidArgument, "programs must share one classified motif type");
    }
  }
  const std::string type_name = type->name();
  const std::size_t n = programs.size();

  std::vector<ObjectTrace> motif_traces;
  for (std::size_t i = 0; i < n; ++i) {
    ExecOutcome o = run(p, programs[i].source);
    if (const auto* err = std::get_if<ExecError>(&o)) {
      throw Error(ErrorKind::LearningFailed,
                  fmt::format("stored program {} does not run: {}", ids[i], err->describe()));
    }
    motif_traces.push_back(std::get<ObjectTrace>(std::move(o)));
  }

  session.ask("generalize_high_level_commonalities",
              {{"NUM_PROGRAMS", std::to_string(n)},
               {"MOTIF_TYPE", type_name},
               {"ALL_PROGRAMS", format_all_programs(programs)}});
  session.ask("generalize_high_level_differences");
  session.ask("generalize_high_level_motif_reason", {{"MOTIF_TYPE", type_name}});
  session.ask("generalize_low_level_arguments", {{"MOTIF_TYPE", type_name}});
  session.ask("generalize_low_level_structure", {{"MOTIF_TYPE", type_name}});
  std::string reply = session.ask(
      "generalize_low_level",
      {{"MOTIF_TYPE", type_name},
       {"PAST_META_PROGRAM", prior ? prior->source : std::string(kNoPriorMeta)}});

  MetaResult out;
  std::string source;
  std::vector<std::string> calls;
  for (int iter = 1;; ++iter) {
    source = extract_code(reply);
    auto call_map = ask_parsed(
        session, "generalize_low_level_batch_recreate", {},
        [](const std::string& r) { return parse_call_map(r); },
        "The response does not map example program numbers to function calls.");
    if (!call_map) {
      throw Error(ErrorKind::Parse, "unparseable function call map", "generalize");
    }

    std::string feedback;
    calls.assign(n, {});
    std::vector<ObjectTrace> call_traces;
    for (std::size_t i = 0; i < n; ++i) {
      const int ordinal = static_cast<int>(i) + 1;
      auto it = call_map->find(ordinal);
      if (it == call_map->end()) {
        feedback += fmt::format("Example program {}:\nNo function call was given.\n", ordinal);
        continue;
      }
      calls[i] = it->second;
      ExecOutcome o = run_call(p, source, it->second);
      if (const auto* err = std::get_if<ExecError>(&o)) {
        feedback += fmt::format("Example program {}:\n{}\n", ordinal, err->describe());
        continue;
      }
      call_traces.push_back(std::get<ObjectTrace>(std::move(o)));
    }
    if (feedback.empty()) {
      out.report = validate_meta_program(call_traces, motif_traces, p.config.validator);
      if (out.report.passed) {
        out.iterations = iter;
        break;
      }
      feedback = meta_feedback(out.report);
    }
    if (iter >= p.config.meta_max_iters) {
      throw Error(ErrorKind::LearningFailed,
                  fmt::format("no valid meta-program after {} iterations; last feedback:\n{}",
                              iter, feedback),
                  "generalize");
    }
    // The template places <FEEDBACK> on its own line.
    while (!feedback.empty() && feedback.back() == '\n') feedback.pop_back();
    reply = session.ask("generalize_low_level_feedback", {{"FEEDBACK", feedback}});
  }

  auto make = [&](const std::string& reply_text) {
    return make_meta_program(extract_code(reply_text), *type, calls, ids);
  };
  std::string refined = session.ask("generalize_refine_comments", {{"MOTIF_TYPE", type_name}});
  try {
    out.meta = make(refined);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InvalidArgument) throw;
    refined = session.ask("invalid_response", {{"FEEDBACK", e.what()}});
    try {
      out.meta = make(refined);
    } catch (const Error& e2) {
      throw Error(ErrorKind::LearningFailed,
                  fmt::format("documented meta-program rejected: {}", e2.what()), "generalize");
    }
  }
  return out;
}

CallResult synthesize_call(const Pipeline& p, const MetaProgram& meta,
                           const std::string& description) {
  ChatSession s("inference", p.llm);
  std::string reply = s.ask("inference", {{"MOTIF_TYPE", meta.motif_type.name()},
                                          {"META_PROGRAM", meta.source},
                                          {"DESCRIPTION", description}});
  for (int iter = 1;; ++iter) {
    CallResult out;
    out.call = extract_code(reply);
    ExecOutcome o = run_call(p, meta.source, out.call);
    std::string feedback;
    if (const auto* err = std::get_if<ExecError>(&o)) {
      feedback = err->describe();
    } else if (std::get<ObjectTrace>(o).objects.empty()) {
      feedback = "The function call created no objects.";
    } else {
      out.trace = std::get<ObjectTrace>(std::move(o));
      out.iterations = iter;
      return out;
    }
    if (iter >= p.config.call_max_iters) {
      throw Error(ErrorKind::InferenceFailed,
                  fmt::format("no runnable call after {} iterations; last: {}", iter, feedback),
                  "synthesize");
    }
    reply = s.ask("inference_feedback", {{"FEEDBACK", feedback}});
  }
}

CommonsenseVerdict ask_orientation_likelihood(const Pipeline& p, const std::string& description,
                                              const std::vector<std::string>& labels) {
  if (labels.empty()) throw Error(ErrorKind::InvalidArgument, "no labels to ask about");
  std::string joined;
  for (const auto& l : labels) joined += (joined.empty() ? "" : ", ") + l;
  ChatSession s("orientation", p.llm);
  auto v = ask_parsed(
      s, "retrieval_mesh_rotations", {{"DESCRIPTION", description}, {"OBJECT_LABELS", joined}},
      [&](const std::string& r) { return parse_orientation_verdict(r, labels); },
      "Every object label needs \"correct\" and \"incorrect\" probabilities that sum to 1.");
  if (v) return *v;
  CommonsenseVerdict d;
  for (const auto& l : labels) d.probabilities[l] = {{"correct", 1.0}, {"incorrect", 0.0}};
  d.defaulted = true;
  return d;
}

bool rotation_search_enabled(const CommonsenseVerdict& verdict, const std::string& label) {
  auto it = verdict.probabilities.find(label);
  if (it == verdict.probabilities.end()) return false;
  auto p = it->second.find("incorrect");
  return p != it->second.end() && p->second > 0.5;
}

CommonsenseVerdict ask_touch_likelihood(const Pipeline& p, const std::string& description) {
  ChatSession s("touch", p.llm);
  auto v = ask_parsed(
      s, "spatial_optimization_touch", {{"DESCRIPTION", description}},
      [](const std::string& r) { return parse_touch_verdict(r); },
      "The response needs \"touch\" and \"no_touch\" probabilities that sum to 1.");
  if (v) return *v;
  CommonsenseVerdict d;
  d.probabilities["motif"] = {{"touch", 0.0}, {"no_touch", 1.0}};
  d.defaulted = true;
  return d;
}

bool touch_enabled(const CommonsenseVerdict& verdict) {
  auto it = verdict.probabilities.find("motif");
  if (it == verdict.probabilities.end()) return false;
  auto p = it->second.find("touch");
  return p != it->second.end() && p->second > 0.5;
}

std::vector<std::optional<std::string>> ask_synset_keys(const Pipeline& p,
                                                        const std::vector<std::string>& keys,
                                                        const std::vector<std::string>& labels) {
  std::vector<std::optional<std::string>> out(labels.size());
  if (labels.empty() || keys.empty()) return out;
  std::string key_text, label_text;
  for (const auto& k : keys) key_text += (key_text.empty() ? "" : "\n") + k;
  for (const auto& l : labels) label_text += (label_text.empty() ? "" : "\n") + l;
  const std::set<std::string> known(keys.begin(), keys.end());
  const auto parse = [&](const std::string& r) -> std::optional<std::vector<std::string>> {
    auto j = extract_json_object(r);
    if (!j || !j->contains("wnsynsetkeys") || !(*j)["wnsynsetkeys"].is_array()) return {};
    const auto& arr = (*j)["wnsynsetkeys"];
    if (arr.size() != labels.size()) return {};
    std::vector<std::string> v;
    for (const auto& e : arr) {
      if (!e.is_string()) return {};
      v.push_back(e.get<std::string>());
    }
    return v;
  };
  ChatSession s("synsets", p.llm);
  auto v = ask_parsed(s, "wnsynsetkeys",
                      {{"WNSYNSETKEYS", key_text}, {"OBJECT_LABELS", label_text}}, parse,
                      "The response needs one synset key (or \"none\") per object label.");
  if (!v) return out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (known.count((*v)[i])) out[i] = (*v)[i];
  }
  return out;
}

LearnResult learn(const Pipeline& p, const std::string& description,
                  const Arrangement& arrangement, ProgramLibrary& lib) {
  p.config.validate();
  LearnResult out;
  const double cost0 = p.llm.ledger->spent_usd();
  out.naive = staged("extract", [&] { return extract_naive_program(arrangement); });
  out.naive.description = description;

  ChatSession session("learn", p.llm);
  out.observations =
      staged("observe", [&] { return observe_arrangement(session, out.naive, description); });
  out.motif_type = staged("classify", [&] { return classify_description(session, description); });
  out.naive.motif_type = out.motif_type;

  out.motif = staged("rewrite",
                     [&] { return rewrite_to_motif(p, session, out.naive, arrangement); });
  out.motif_id = staged("store", [&] { return lib.store_motif_program(out.motif.program); });

  std::vector<ProgramText> programs;
  std::vector<std::string> ids;
  for (auto& e : lib.motif_entries(out.motif_type)) {
    programs.push_back(std::move(e.program));
    ids.push_back(std::move(e.id));
  }
  out.programs_generalized = static_cast<int>(programs.size());
  const auto prior = lib.fetch_meta_program(out.motif_type);

  ChatSession meta_session("generalize", p.llm);
  out.meta = staged("generalize", [&] {
    return generalize_to_meta(p, meta_session, programs, ids, prior);
  });
  staged("store", [&] {
    lib.store_meta_program(out.meta.meta);
    return 0;
  });
  out.cost_usd = p.llm.ledger->spent_usd() - cost0;
  return out;
}

GenerateResult generate(const Pipeline& p, const std::string& description,
                        const ProgramLibrary& lib, const AssetIndex* assets) {
  p.config.validate();
  GenerateResult out;
  const double cost0 = p.llm.ledger->spent_usd();
  auto timed = [&](const char* stage, auto&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto r = staged(stage, f);
    out.stage_seconds.emplace_back(stage, seconds_since(t0));
    return r;
  };

  out.motif_type = timed("classify", [&] { return classify_description(p, description); });
  const MetaProgram meta = timed("library", [&] {
    auto m = lib.fetch_meta_program(out.motif_type);
    if (!m) {
      throw Error(ErrorKind::NoMetaProgram,
                  fmt::format("no meta-program for motif type {}", out.motif_type.name()));
    }
    return *m;
  });
  out.function_name = meta.function_name;
  out.call = timed("synthesize", [&] { return synthesize_call(p, meta, description); });

  std::vector<SceneObject> objects = to_scene_objects(out.call.trace);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    objects[i].id = fmt::format("obj_{}", i + 1);
    if (std::find(labels.begin(), labels.end(), objects[i].label) == labels.end()) {
      labels.push_back(objects[i].label);
    }
  }

  std::vector<PlacedMesh> placed = timed("retrieve", [&] {
    std::vector<PlacedMesh> pm;
    if (!assets) {
      for (const auto& o : objects) {
        pm.push_back(box_placement(o));
        out.bindings.push_back({o.id, o.label, std::nullopt, Rotation::Identity(), 0.0, false});
      }
      return pm;
    }
    out.orientation = ask_orientation_likelihood(p, description, labels);
    std::map<std::string, std::optional<std::string>> synsets;
    if (p.config.enrich_synsets) {
      std::set<std::string> keys;
      for (const auto& r : assets->records()) {
        if (r.wnsynset) keys.insert(*r.wnsynset);
      }
      const auto picked =
          ask_synset_keys(p, std::vector<std::string>(keys.begin(), keys.end()), labels);
      for (std::size_t i = 0; i < labels.size(); ++i) synsets[labels[i]] = picked[i];
    }
    std::map<std::string, std::shared_ptr<const TriMesh>> meshes;
    for (std::size_t i = 0; i < objects.size(); ++i) {
      const auto& o = objects[i];
      const bool rotate = rotation_search_enabled(*out.orientation, o.label);
      const auto ranked =
          rank_assets(*assets, o.label, 2.0 * o.half_size, rotate, synsets[o.label]);
      if (ranked.empty()) {
        out.warnings.push_back(
            fmt::format("{}: no asset labelled '{}'; placed as a box", o.id, o.label));
        pm.push_back(box_placement(o));
        out.bindings.push_back({o.id, o.label, std::nullopt, Rotation::Identity(), 0.0, rotate});
        continue;
      }
      const RankedCandidate& pick = pick_asset(ranked, p.config.top_k, object_seed(p.config.seed, i));
      auto& mesh = meshes[pick.record->asset_id];
      if (!mesh) mesh = std::make_shared<const TriMesh>(load_obj(pick.record->mesh_path));
      PlacedMesh placed_mesh = bind_mesh(o, *mesh, pick.orientation, p.config.rescale_assets);
      placed_mesh.object.asset_id = pick.record->asset_id;
      pm.push_back(std::move(placed_mesh));
      out.bindings.push_back(
          {o.id, o.label, pick.record->asset_id, pick.orientation, pick.score, rotate});
    }
    return pm;
  });

  out.touch = timed("touch", [&] {
    if (p.config.touch_override) return *p.config.touch_override;
    out.touch_verdict = ask_touch_likelihood(p, description);
    return touch_enabled(*out.touch_verdict);
  });
  out.optimized = timed("optimize", [&] {
    return optimize_arrangement(std::move(placed), out.touch, p.config.geo);
  });
  for (const auto& f : out.optimized.failures) {
    out.warnings.push_back(fmt::format("{}: {}", f.object_id, f.message));
  }
  out.arrangement = out.optimized.arrangement(description);
  out.arrangement.motif_type = out.motif_type;
  out.cost_usd = p.llm.ledger->spent_usd() - cost0;
  return out;
}

}  // namespace smc
