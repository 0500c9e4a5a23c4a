#include "cli.hpp"

#include <cctype>
#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "smc/geo/export.hpp"
#include "smc/io.hpp"
#include "smc/scene/arrangement_io.hpp"

namespace smc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::InvalidArgument:
      return kConfig;
    case ErrorKind::Parse:
      return kParse;
    case ErrorKind::Io:
      return kIo;
    case ErrorKind::NoMetaProgram:
      return kNoMeta;
    case ErrorKind::Transport:
    case ErrorKind::BudgetExceeded:
    case ErrorKind::MissingFixture:
    case ErrorKind::Classification:
    case ErrorKind::Observation:
    case ErrorKind::LearningFailed:
    case ErrorKind::InferenceFailed:
    case ErrorKind::NoAssetFound:
    case ErrorKind::OptimizationFailed:
      return kLearning;
    case ErrorKind::InvalidState:
      return kOther;
  }
  return kOther;
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
  };
}

namespace {

template <class T>
T parse_number(const std::string& text, const std::string& what) {
  std::istringstream in(text);
  T v{};
  in >> v;
  if (in.fail() || !in.eof()) throw Error(ErrorKind::Config, fmt::format("{}: not a number: {}", what, text));
  return v;
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

template <class T>
void read_key(const YAML::Node& node, const char* key, T& into) {
  if (node[key]) into = node[key].as<T>();
}

void check_keys(const YAML::Node& node, const std::string& where,
                std::initializer_list<const char*> known) {
  if (!node.IsMap()) throw Error(ErrorKind::Config, where + " must be a mapping");
  for (const auto& kv : node) {
    const auto k = kv.first.as<std::string>();
    if (std::none_of(known.begin(), known.end(), [&](const char* n) { return k == n; })) {
      throw Error(ErrorKind::Config, fmt::format("unknown key '{}' in {}", k, where));
    }
  }
}

Arrangement load_arrangement(const fs::path& path) {
  try {
    return read_arrangement(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::Parse, e.what());
  }
}

std::optional<AssetIndex> load_assets(const RunConfig& cfg, std::ostream& err) {
  if (!cfg.assets) return std::nullopt;
  AssetIndex index = AssetIndex::build(*cfg.assets);
  for (const auto& w : index.warnings()) err << "warning: " << cfg.assets->string() << ": " << w << "\n";
  return index;
}

fs::path export_path(const fs::path& out, const std::string& kind) {
  fs::path p = out;
  return p.replace_extension(kind == "layout" ? ".layout.json" : ".obj");
}

void write_export(const std::string& kind, const fs::path& path,
                  const std::vector<PlacedMesh>& placed, const Arrangement& arrangement,
                  const AssetIndex* index) {
  if (kind == "layout") {
    write_file_atomic(path, layout_to_json(placed, arrangement, index).dump(2) + "\n");
  } else {
    write_file_atomic(path, merged_obj(placed));
  }
}

void report_error(std::ostream& err, const Error& e) {
  err << fmt::format("error: {}{}: {}\n", to_string(e.kind()),
                     e.stage().empty() ? "" : " [" + e.stage() + "]", e.what());
}

}  // namespace

void RunConfig::validate() const {
  if (backend != "live" && backend != "replay") {
    throw Error(ErrorKind::Config, "backend must be 'live' or 'replay', got '" + backend + "'");
  }
  if (backend == "replay" && !fixtures) {
    throw Error(ErrorKind::Config, "the replay backend needs a fixture directory (--fixtures)");
  }
  if (backend == "live" && http.endpoint.empty()) {
    throw Error(ErrorKind::Config, "the live backend needs an endpoint");
  }
  if (worker.empty() && !fixtures) {
    throw Error(ErrorKind::Config, "no executor: set a worker command or a fixture directory");
  }
  if (budget_usd == 0.0) throw Error(ErrorKind::Config, "budget must be positive");
  pipeline.validate();
}

void apply_config_file(RunConfig& cfg, const fs::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw Error(ErrorKind::Config, fmt::format("{}: {}", path.string(), e.what()));
  }
  if (root.IsNull()) return;
  const fs::path base = path.parent_path();
  auto rel = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
  try {
    check_keys(root, path.string(),
               {"library", "assets", "backend", "fixtures", "record", "transcripts", "worker",
                "budget_usd", "seed", "llm", "max_iters", "exec", "geo", "retrieval"});
    if (root["library"]) cfg.library = rel(root["library"].as<std::string>());
    if (root["assets"]) cfg.assets = rel(root["assets"].as<std::string>());
    if (root["fixtures"]) cfg.fixtures = rel(root["fixtures"].as<std::string>());
    if (root["record"]) cfg.record = rel(root["record"].as<std::string>());
    if (root["transcripts"]) cfg.transcripts = rel(root["transcripts"].as<std::string>());
    read_key(root, "backend", cfg.backend);
    if (const auto w = root["worker"]) {
      cfg.worker = w.IsSequence() ? w.as<std::vector<std::string>>() : split_words(w.as<std::string>());
    }
    read_key(root, "budget_usd", cfg.budget_usd);
    read_key(root, "seed", cfg.pipeline.seed);
    if (const auto n = root["llm"]) {
      check_keys(n, "llm",
                 {"endpoint", "model", "temperature", "timeout_s", "usd_per_1k_prompt",
                  "usd_per_1k_completion"});
      read_key(n, "endpoint", cfg.http.endpoint);
      read_key(n, "model", cfg.http.model);
      read_key(n, "temperature", cfg.http.temperature);
      read_key(n, "timeout_s", cfg.http.timeout_s);
      read_key(n, "usd_per_1k_prompt", cfg.http.usd_per_1k_prompt);
      read_key(n, "usd_per_1k_completion", cfg.http.usd_per_1k_completion);
    }
    if (const auto n = root["max_iters"]) {
      check_keys(n, "max_iters", {"rewrite", "meta", "call"});
      read_key(n, "rewrite", cfg.pipeline.rewrite_max_iters);
      read_key(n, "meta", cfg.pipeline.meta_max_iters);
      read_key(n, "call", cfg.pipeline.call_max_iters);
    }
    if (const auto n = root["exec"]) {
      check_keys(n, "exec", {"timeout_s", "max_objects"});
      read_key(n, "timeout_s", cfg.pipeline.exec_limits.timeout_s);
      read_key(n, "max_objects", cfg.pipeline.exec_limits.max_objects);
    }
    if (const auto n = root["geo"]) {
      auto& g = cfg.pipeline.geo;
      check_keys(n, "geo",
                 {"contact_eps", "margin", "max_contact_iters", "n_surface_rays",
                  "n_support_rays", "ground_y", "max_resolve_steps"});
      read_key(n, "contact_eps", g.contact_eps);
      read_key(n, "margin", g.margin);
      read_key(n, "max_contact_iters", g.max_contact_iters);
      read_key(n, "n_surface_rays", g.n_surface_rays);
      read_key(n, "n_support_rays", g.n_support_rays);
      read_key(n, "ground_y", g.ground_y);
      read_key(n, "max_resolve_steps", g.max_resolve_steps);
    }
    if (const auto n = root["retrieval"]) {
      check_keys(n, "retrieval", {"top_k", "rescale", "synset_enrichment"});
      read_key(n, "top_k", cfg.pipeline.top_k);
      read_key(n, "rescale", cfg.pipeline.rescale_assets);
      read_key(n, "synset_enrichment", cfg.pipeline.enrich_synsets);
    }
  } catch (const YAML::Exception& e) {
    throw Error(ErrorKind::Config, fmt::format("{}: {}", path.string(), e.what()));
  }
}

void apply_env(RunConfig& cfg, const EnvLookup& env) {
  if (auto v = env("SMC_BACKEND")) cfg.backend = *v;
  if (auto v = env("SMC_LLM_ENDPOINT")) cfg.http.endpoint = *v;
  if (auto v = env("SMC_LLM_MODEL")) cfg.http.model = *v;
  if (auto v = env("SMC_LLM_API_KEY")) cfg.http.api_key = *v;
  if (auto v = env("SMC_FIXTURES")) cfg.fixtures = *v;
  if (auto v = env("SMC_LIBRARY")) cfg.library = *v;
  if (auto v = env("SMC_ASSETS")) cfg.assets = *v;
  if (auto v = env("SMC_WORKER")) cfg.worker = split_words(*v);
  if (auto v = env("SMC_TRANSCRIPTS")) cfg.transcripts = *v;
  if (auto v = env("SMC_SEED")) cfg.pipeline.seed = parse_number<std::uint64_t>(*v, "SMC_SEED");
  if (auto v = env("SMC_BUDGET_USD")) cfg.budget_usd = parse_number<double>(*v, "SMC_BUDGET_USD");
}

Pipeline make_pipeline(const RunConfig& cfg, std::shared_ptr<CostLedger> ledger,
                       const std::optional<fs::path>& transcripts) {
  Pipeline p;
  p.config = cfg.pipeline;
  std::shared_ptr<LlmBackend> backend;
  if (cfg.backend == "replay") {
    backend = std::make_shared<ReplayBackend>(*cfg.fixtures / "replay");
  } else {
    backend = std::make_shared<HttpChatBackend>(cfg.http);
  }
  if (cfg.record) backend = std::make_shared<RecordingBackend>(backend, *cfg.record);
  p.llm.backend = std::move(backend);
  p.llm.ledger = std::move(ledger);
  if (transcripts) p.llm.transcripts = std::make_shared<TranscriptSink>(*transcripts);
  if (!cfg.worker.empty()) {
    p.executor = std::make_shared<SubprocessExecutor>(cfg.worker);
  } else {
    p.executor = std::make_shared<FixtureExecutor>(*cfg.fixtures / "exec");
  }
  return p;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const EnvLookup& env) {
  CLI::App app{"Learn object-arrangement motifs as programs and generate new arrangements.",
               "smc"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> config_path, library, assets, backend, fixtures, record, transcripts,
      worker;
  std::optional<std::uint64_t> seed;
  std::optional<double> budget;
  app.add_option("--config", config_path, "YAML config file (env SMC_CONFIG)");
  app.add_option("--library", library, "program library directory");
  app.add_option("--assets", assets, "asset manifest (JSONL)");
  app.add_option("--backend", backend, "LLM backend")->check(CLI::IsMember({"live", "replay"}));
  app.add_option("--fixtures", fixtures, "fixture root with replay/ and exec/");
  app.add_option("--record", record, "also store every LLM exchange as a replay fixture here");
  app.add_option("--transcripts", transcripts, "write one JSON transcript per chat session here");
  app.add_option("--worker", worker, "executor worker command line");
  app.add_option("--seed", seed, "run seed");
  app.add_option("--budget-usd", budget, "spend limit for the run");

  auto* learn_cmd = app.add_subcommand("learn", "learn a motif from an example arrangement");
  std::string arrangement_path;
  std::optional<std::string> description;
  learn_cmd->add_option("arrangement", arrangement_path, "arrangement JSON")->required();
  learn_cmd->add_option("--description", description, "overrides the file's description");

  auto* gen_cmd = app.add_subcommand("generate", "generate arrangements from descriptions");
  std::vector<std::string> descriptions;
  std::optional<std::string> out_path, export_kind;
  std::string touch = "auto";
  int jobs = 1;
  gen_cmd->add_option("descriptions", descriptions, "one or more descriptions")->required();
  gen_cmd->add_option("--out", out_path, "output file (directory for several descriptions)");
  gen_cmd->add_option("--export", export_kind, "also write an export")
      ->check(CLI::IsMember({"layout", "merged-mesh"}));
  gen_cmd->add_option("--touch", touch, "touch mode")->check(CLI::IsMember({"auto", "on", "off"}));
  gen_cmd->add_option("--jobs", jobs, "parallel jobs")->check(CLI::PositiveNumber);

  auto* classify_cmd = app.add_subcommand("classify", "print the motif type of a description");
  std::string classify_text;
  classify_cmd->add_option("description", classify_text)->required();

  auto* validate_cmd = app.add_subcommand("validate", "check a motif program against an arrangement");
  std::string program_path, reference_path;
  bool skip_judge = false;
  validate_cmd->add_option("program", program_path, "DSL program file")->required();
  validate_cmd->add_option("arrangement", reference_path, "reference arrangement")->required();
  validate_cmd->add_flag("--skip-judge", skip_judge, "do not ask the LLM about hard-coded lists");

  auto* assets_cmd = app.add_subcommand("assets", "asset index tools");
  assets_cmd->require_subcommand(1);
  auto* index_cmd = assets_cmd->add_subcommand("index", "build and cache the asset index");
  std::optional<std::string> manifest, cache_path;
  index_cmd->add_option("--manifest", manifest, "asset manifest (defaults to --assets)");
  index_cmd->add_option("--out", cache_path, "cache file (default <manifest>.index.json)");

  auto* export_cmd = app.add_subcommand("export", "export an arrangement written by generate");
  std::string export_input, export_out;
  std::string export_only;
  export_cmd->add_option("arrangement", export_input)->required();
  export_cmd->add_option("--export", export_only)
      ->required()
      ->check(CLI::IsMember({"layout", "merged-mesh"}));
  export_cmd->add_option("--out", export_out)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }

  try {
    RunConfig cfg;
    if (!config_path) config_path = env("SMC_CONFIG");
    if (config_path) apply_config_file(cfg, *config_path);
    apply_env(cfg, env);
    if (library) cfg.library = *library;
    if (assets) cfg.assets = *assets;
    if (backend) cfg.backend = *backend;
    if (fixtures) cfg.fixtures = *fixtures;
    if (record) cfg.record = *record;
    if (transcripts) cfg.transcripts = *transcripts;
    if (worker) cfg.worker = split_words(*worker);
    if (seed) cfg.pipeline.seed = *seed;
    if (budget) cfg.budget_usd = *budget;

    if (index_cmd->parsed()) {
      const fs::path m = manifest ? fs::path(*manifest) : cfg.assets.value_or(fs::path());
      if (m.empty()) throw Error(ErrorKind::Config, "no manifest: pass --manifest or --assets");
      const AssetIndex index = AssetIndex::build(m);
      for (const auto& w : index.warnings()) err << "warning: " << m.string() << ": " << w << "\n";
      const fs::path cache = cache_path ? fs::path(*cache_path) : fs::path(m).replace_extension(".index.json");
      write_file_atomic(cache, index.to_json().dump(2) + "\n");
      out << json{{"records", index.size()},
                  {"warnings", index.warnings().size()},
                  {"cache", cache.string()}}
                 .dump(2)
          << "\n";
      return kOk;
    }

    if (export_cmd->parsed()) {
      const Arrangement a = load_arrangement(export_input);
      const auto index = load_assets(cfg, err);
      const auto placed = place_arrangement(a, index ? &*index : nullptr);
      write_export(export_only, export_out, placed, a, index ? &*index : nullptr);
      out << json{{"objects", a.objects.size()}, {"out", export_out}}.dump(2) << "\n";
      return kOk;
    }

    cfg.validate();
    auto ledger = std::make_shared<CostLedger>(cfg.budget_usd);

    if (classify_cmd->parsed()) {
      Pipeline p = make_pipeline(cfg, ledger, cfg.transcripts);
      out << classify_description(p, classify_text).name() << "\n";
      return kOk;
    }

    if (validate_cmd->parsed()) {
      std::string source = read_text_file(program_path);
      while (!source.empty() && std::isspace(static_cast<unsigned char>(source.back()))) source.pop_back();
      const Arrangement reference = load_arrangement(reference_path);
      Pipeline p = make_pipeline(cfg, ledger, cfg.transcripts);
      ExecRequest req;
      req.source = source;
      req.limits = cfg.pipeline.exec_limits;
      req.limits.rng_seed = static_cast<std::int64_t>(cfg.pipeline.seed);
      const ExecOutcome o = p.executor->execute(req);
      if (const auto* e = std::get_if<ExecError>(&o)) {
        out << json{{"passed", false}, {"error", e->describe()}}.dump(2) << "\n";
        return kOther;
      }
      const CriterionResult hardcode =
          skip_judge ? hardcode_judgment(true, {}) : judge_hardcoding(p, source);
      const ValidationReport report = validate_motif_program(std::get<ObjectTrace>(o), reference,
                                                             hardcode, cfg.pipeline.validator);
      out << report_to_json(report).dump(2) << "\n";
      return report.passed ? kOk : kOther;
    }

    if (learn_cmd->parsed()) {
      const Arrangement a = load_arrangement(arrangement_path);
      const std::string desc = description.value_or(a.description);
      if (desc.empty()) throw Error(ErrorKind::InvalidArgument, "the arrangement has no description");
      auto lib = ProgramLibrary::open(cfg.library);
      Pipeline p = make_pipeline(cfg, ledger, cfg.transcripts);
      const LearnResult r = learn(p, desc, a, lib);
      const fs::path type_dir = lib.type_dir(r.motif_type);
      const std::string motif_file = r.motif_id.substr(r.motif_id.find('/') + 1) + ".py";
      err << fmt::format("motif type {}; rewrite {} iteration(s); meta {} iteration(s)\n",
                         r.motif_type.name(), r.motif.iterations, r.meta.iterations);
      out << json{{"motif_type", r.motif_type.name()},
                  {"motif_id", r.motif_id},
                  {"meta_function", r.meta.meta.function_name},
                  {"iterations", {{"rewrite", r.motif.iterations}, {"meta", r.meta.iterations}}},
                  {"programs_generalized", r.programs_generalized},
                  {"paths",
                   {{"motif", (type_dir / motif_file).string()},
                    {"meta", (type_dir / "meta.py").string()}}},
                  {"cost_usd", r.cost_usd}}
                 .dump(2)
          << "\n";
      return kOk;
    }

    // generate
    if (!fs::is_directory(cfg.library)) {
      throw Error(ErrorKind::Config, "program library not found: " + cfg.library.string());
    }
    const auto lib = ProgramLibrary::open(cfg.library);
    const auto index = load_assets(cfg, err);
    if (touch != "auto") cfg.pipeline.touch_override = touch == "on";
    const bool several = descriptions.size() > 1;
    std::vector<fs::path> outputs;
    for (std::size_t i = 0; i < descriptions.size(); ++i) {
      outputs.push_back(several ? fs::path(out_path.value_or("arrangements")) / fmt::format("{:03d}.json", i + 1)
                                : fs::path(out_path.value_or("arrangement.json")));
    }

    std::vector<json> summaries(descriptions.size());
    std::vector<std::string> logs(descriptions.size());
    std::vector<int> codes(descriptions.size(), kOk);
    std::atomic<std::size_t> next{0};
    auto worker_fn = [&] {
      for (std::size_t i = next++; i < descriptions.size(); i = next++) {
        std::ostringstream log;
        try {
          std::optional<fs::path> tdir = cfg.transcripts;
          if (tdir && several) tdir = *tdir / fmt::format("job_{:03d}", i + 1);
          Pipeline p = make_pipeline(cfg, ledger, tdir);
          const GenerateResult r = generate(p, descriptions[i], lib, index ? &*index : nullptr);
          write_arrangement(outputs[i], r.arrangement);
          json summary = {{"description", descriptions[i]},
                          {"motif_type", r.motif_type.name()},
                          {"call", r.call.call},
                          {"objects", r.arrangement.objects.size()},
                          {"touch", r.touch},
                          {"out", outputs[i].string()},
                          {"warnings", r.warnings}};
          if (export_kind) {
            const fs::path ep = export_path(outputs[i], *export_kind);
            write_export(*export_kind, ep, r.optimized.placed, r.arrangement,
                         index ? &*index : nullptr);
            summary["export"] = ep.string();
          }
          json timing = json::object();
          for (const auto& [stage, s] : r.stage_seconds) {
            timing[stage] = s;
            log << fmt::format("[{}] {} {:.3f} s\n", descriptions[i], stage, s);
          }
          summary["stage_seconds"] = timing;
          for (const auto& w : r.warnings) log << "warning: " << w << "\n";
          summaries[i] = std::move(summary);
        } catch (const Error& e) {
          report_error(log, e);
          codes[i] = exit_code(e.kind());
          summaries[i] = {{"description", descriptions[i]}, {"error", e.what()}};
        } catch (const std::exception& e) {
          log << "error: " << e.what() << "\n";
          codes[i] = kOther;
          summaries[i] = {{"description", descriptions[i]}, {"error", e.what()}};
        }
        logs[i] = log.str();
      }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(jobs, static_cast<int>(descriptions.size()));
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker_fn);
    worker_fn();
    for (auto& t : pool) t.join();
    for (const auto& l : logs) err << l;
    out << (several ? json(summaries) : summaries.front()).dump(2) << "\n";
    for (int c : codes) {
      if (c != kOk) return c;
    }
    return kOk;
  } catch (const Error& e) {
    report_error(err, e);
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kOther;
  }
}

}  // namespace smc::cli
