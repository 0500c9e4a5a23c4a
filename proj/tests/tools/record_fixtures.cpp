// Records replay fixtures by running a pipeline against a scripted backend.
//
//   record_fixtures learn <script> <replay_dir> <exec_dir> <library> <arrangement>
//   record_fixtures generate <script> <replay_dir> <exec_dir> <library> <manifest> <description>
//
// Executor misses are dumped to <exec_dir>/missing/ for the worker to answer.
#include <iostream>

#include <fmt/format.h>

#include "smc/error.hpp"
#include "smc/pipeline/pipeline.hpp"
#include "smc/scene/arrangement_io.hpp"

using namespace smc;

int main(int argc, char** argv) {
  if (argc < 7) {
    std::cerr << "usage: record_fixtures learn|generate <script> <replay_dir> <exec_dir> "
                 "<library> <arrangement|manifest> [description]\n";
    return 2;
  }
  const std::string mode = argv[1];
  try {
    Pipeline p;
    p.llm.backend = std::make_shared<RecordingBackend>(ScriptedBackend::from_file(argv[2]), argv[3]);
    p.executor = std::make_shared<FixtureExecutor>(argv[4]);
    auto lib = ProgramLibrary::open(argv[5]);
    if (mode == "learn") {
      const Arrangement a = read_arrangement(argv[6]);
      const auto r = learn(p, a.description, a, lib);
      fmt::print("learned {} ({} rewrite, {} meta iterations)\n", r.meta.meta.function_name,
                 r.motif.iterations, r.meta.iterations);
    } else {
      if (argc < 8) return 2;
      const AssetIndex index = AssetIndex::build(argv[6]);
      const auto r = generate(p, argv[7], lib, &index);
      fmt::print("generated {} objects\n", r.arrangement.objects.size());
    }
  } catch (const Error& e) {
    std::cerr << fmt::format("{} [{}]: {}\n", to_string(e.kind()), e.stage(), e.what());
    return 1;
  }
  return 0;
}
