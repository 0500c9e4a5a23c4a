#include "smc/validate/validator.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "smc/error.hpp"
#include "smc/program/program.hpp"

namespace smc {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxFeedbackLines = 20;

std::string vec_text(const Vec3& v) {
  return fmt::format("({}, {}, {})", format_number(v.x()), format_number(v.y()),
                     format_number(v.z()));
}

std::string sig_text(const DirectionSignature& s) {
  return fmt::format("({}, {}, {})", s.s[0], s.s[1], s.s[2]);
}

std::map<std::string, int> label_counts(const std::vector<SceneObject>& objs) {
  std::map<std::string, int> out;
  for (const auto& o : objs) ++out[o.label];
  return out;
}

bool counts_match(const std::vector<SceneObject>& a, const std::vector<SceneObject>& b) {
  return label_counts(a) == label_counts(b);
}

std::string object_name(const SceneObject& o) {
  return o.id.empty() ? o.label : fmt::format("{} ({})", o.id, o.label);
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  const std::size_t shown = std::min(lines.size(), kMaxFeedbackLines);
  for (std::size_t i = 0; i < shown; ++i) out += lines[i] + "\n";
  if (lines.size() > shown) out += fmt::format("... and {} more.\n", lines.size() - shown);
  if (!out.empty()) out.pop_back();
  return out;
}

CriterionResult not_evaluated(const char* name, const std::string& counts_feedback) {
  CriterionResult r;
  r.criterion = name;
  r.passed = false;
  r.feedback = "Not evaluated because the object counts differ. " + counts_feedback;
  return r;
}

CriterionResult counts_result(const std::vector<SceneObject>& actual,
                              const std::vector<SceneObject>& expected) {
  CriterionResult r;
  r.criterion = criterion::kCounts;
  const auto want = label_counts(expected);
  const auto got = label_counts(actual);
  std::map<std::string, std::pair<int, int>> merged;
  for (const auto& [label, n] : want) merged[label].first = n;
  for (const auto& [label, n] : got) merged[label].second = n;
  std::vector<std::string> lines;
  for (const auto& [label, pair] : merged) {
    if (pair.first == pair.second) continue;
    r.details.push_back({label, std::to_string(pair.first), std::to_string(pair.second)});
    lines.push_back(fmt::format("{}: expected {}, got {}", label, pair.first, pair.second));
  }
  r.passed = lines.empty();
  if (!r.passed) {
    r.feedback = fmt::format("Expected {} objects in total, got {}.\n", expected.size(),
                             actual.size()) +
                 join_lines(lines);
  }
  return r;
}

std::vector<std::size_t> label_sorted_order(const std::vector<SceneObject>& objs) {
  std::vector<std::size_t> idx(objs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return objs[a].label < objs[b].label; });
  return idx;
}

}  // namespace

const CriterionResult* ValidationReport::find(std::string_view name,
                                              std::optional<int> example) const {
  for (const auto& r : results) {
    if (r.criterion == name && (!example || r.example == example)) return &r;
  }
  return nullptr;
}

std::vector<std::string> ValidationReport::failed_criteria() const {
  std::vector<std::string> out;
  for (const auto& r : results) {
    if (!r.passed && std::find(out.begin(), out.end(), r.criterion) == out.end()) {
      out.push_back(r.criterion);
    }
  }
  return out;
}

json report_to_json(const ValidationReport& report) {
  json results = json::array();
  for (const auto& r : report.results) {
    json details = json::array();
    for (const auto& d : r.details) {
      details.push_back({{"subject", d.subject}, {"expected", d.expected}, {"actual", d.actual}});
    }
    json jr = {{"criterion", r.criterion},
               {"passed", r.passed},
               {"feedback", r.feedback},
               {"details", std::move(details)}};
    if (r.example) jr["example"] = *r.example;
    results.push_back(std::move(jr));
  }
  return {{"target", report.target == ReportTarget::Motif ? "motif" : "meta"},
          {"passed", report.passed},
          {"results", std::move(results)}};
}

std::vector<std::size_t> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
  // Hungarian algorithm with row/column potentials, O(n^3).
  const std::size_t n = cost.size();
  if (n == 0) return {};
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    if (cost[i - 1].size() != n) {
      throw Error(ErrorKind::InvalidArgument, "assignment cost matrix must be square");
    }
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

std::vector<std::pair<std::size_t, std::size_t>> pair_objects(
    const std::vector<SceneObject>& actual, const std::vector<SceneObject>& expected) {
  if (!counts_match(actual, expected)) {
    throw Error(ErrorKind::InvalidState, "cannot pair objects when label counts differ");
  }
  std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> groups;
  for (std::size_t i = 0; i < actual.size(); ++i) groups[actual[i].label].first.push_back(i);
  for (std::size_t i = 0; i < expected.size(); ++i) groups[expected[i].label].second.push_back(i);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& [label, g] : groups) {
    const auto& [ai, ei] = g;
    std::vector<std::vector<double>> cost(ai.size(), std::vector<double>(ei.size()));
    for (std::size_t r = 0; r < ai.size(); ++r) {
      for (std::size_t c = 0; c < ei.size(); ++c) {
        cost[r][c] = (actual[ai[r]].position - expected[ei[c]].position).norm();
      }
    }
    const auto assign = min_cost_assignment(cost);
    for (std::size_t r = 0; r < ai.size(); ++r) pairs.emplace_back(ai[r], ei[assign[r]]);
  }
  // Report in reference order.
  std::sort(pairs.begin(), pairs.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
  return pairs;
}

CriterionResult check_counts(const ObjectTrace& trace, const Arrangement& reference) {
  return counts_result(to_scene_objects(trace), reference.objects);
}

CriterionResult check_placements(const ObjectTrace& trace, const Arrangement& reference,
                                 const ValidatorConfig& cfg) {
  const auto actual = to_scene_objects(trace);
  const auto pairs = pair_objects(actual, reference.objects);
  CriterionResult r;
  r.criterion = criterion::kPlacements;
  std::vector<std::string> lines;
  for (const auto& [ai, ei] : pairs) {
    const SceneObject& a = actual[ai];
    const SceneObject& e = reference.objects[ei];
    const double iou = aabb_iou(world_aabb(a), world_aabb(e));
    if (iou >= cfg.iou_threshold) continue;
    r.details.push_back({e.id, vec_text(e.position), vec_text(a.position)});
    lines.push_back(fmt::format("Object {} is placed at {} but should be placed at {}.",
                                object_name(e), vec_text(a.position), vec_text(e.position)));
  }
  r.passed = lines.empty();
  if (!r.passed) r.feedback = join_lines(lines);
  return r;
}

CriterionResult check_extents(const ObjectTrace& trace, const Arrangement& reference,
                              const ValidatorConfig& cfg) {
  const auto actual = to_scene_objects(trace);
  const auto pairs = pair_objects(actual, reference.objects);
  CriterionResult r;
  r.criterion = criterion::kExtents;
  std::vector<std::string> lines;
  for (const auto& [ai, ei] : pairs) {
    const SceneObject& a = actual[ai];
    const SceneObject& e = reference.objects[ei];
    const Vec3 rel = (a.half_size - e.half_size).cwiseAbs().cwiseQuotient(e.half_size);
    const bool size_ok = (rel.array() <= cfg.half_size_rel_tol).all();
    // Compare box shapes independent of placement (placements are their own criterion).
    SceneObject a0 = a, e0 = e;
    a0.position.setZero();
    e0.position.setZero();
    const double iou = aabb_iou(world_aabb(a0), world_aabb(e0));
    if (size_ok && iou >= cfg.iou_threshold) continue;
    const Vec3 a_ext = world_aabb(a0).sizes();
    const Vec3 e_ext = world_aabb(e0).sizes();
    r.details.push_back({e.id,
                         fmt::format("half_size {} extents {}", vec_text(e.half_size),
                                     vec_text(e_ext)),
                         fmt::format("half_size {} extents {}", vec_text(a.half_size),
                                     vec_text(a_ext))});
    lines.push_back(fmt::format(
        "Object {} has half size {} and bounding box size {}, but should have half size {} and "
        "bounding box size {}.",
        object_name(e), vec_text(a.half_size), vec_text(a_ext), vec_text(e.half_size),
        vec_text(e_ext)));
  }
  r.passed = lines.empty();
  if (!r.passed) r.feedback = join_lines(lines);
  return r;
}

CriterionResult check_pairwise_directions(const ObjectTrace& trace,
                                          const ObjectTrace& reference_trace,
                                          const ValidatorConfig& cfg) {
  const auto actual = to_scene_objects(trace);
  const auto expected = to_scene_objects(reference_trace);
  if (actual.size() != expected.size()) {
    throw Error(ErrorKind::InvalidState, "direction check requires equal object counts");
  }
  const auto ao = label_sorted_order(actual);
  const auto eo = label_sorted_order(expected);
  CriterionResult r;
  r.criterion = criterion::kDirections;
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < ao.size(); ++i) {
    for (std::size_t j = 0; j < ao.size(); ++j) {
      if (i == j) continue;
      const auto got = relative_direction(actual[ao[i]], actual[ao[j]], cfg.dead_zone);
      const auto want = relative_direction(expected[eo[i]], expected[eo[j]], cfg.dead_zone);
      if (got == want) continue;
      const std::string subject = fmt::format("{}->{}", eo[i] + 1, eo[j] + 1);
      r.details.push_back({subject, sig_text(want), sig_text(got)});
      lines.push_back(fmt::format(
          "Direction from object {} ({}) to object {} ({}) is {} but should be {}.", eo[i] + 1,
          expected[eo[i]].label, eo[j] + 1, expected[eo[j]].label, sig_text(got),
          sig_text(want)));
    }
  }
  r.passed = lines.empty();
  if (!r.passed) {
    r.feedback = "Relative directions are given as the sign of the (x, y, z) displacement.\n" +
                 join_lines(lines);
  }
  return r;
}

CriterionResult hardcode_judgment(bool valid, const std::vector<std::string>& variable_names) {
  CriterionResult r;
  r.criterion = criterion::kHardcode;
  r.passed = valid;
  if (!valid) {
    std::string names;
    for (const auto& n : variable_names) {
      if (!names.empty()) names += ", ";
      names += n;
      r.details.push_back({n, "computed", "listed"});
    }
    r.feedback = names.empty()
                     ? "Some object attributes are listed explicitly."
                     : "These variables list attributes of individual objects: " + names + ".";
  }
  return r;
}

ValidationReport validate_motif_program(const ObjectTrace& trace, const Arrangement& reference,
                                        const CriterionResult& hardcode,
                                        const ValidatorConfig& cfg) {
  ValidationReport report;
  report.target = ReportTarget::Motif;
  report.results.push_back(hardcode);
  CriterionResult counts = check_counts(trace, reference);
  report.results.push_back(counts);
  if (counts.passed) {
    report.results.push_back(check_placements(trace, reference, cfg));
    report.results.push_back(check_extents(trace, reference, cfg));
  } else {
    report.results.push_back(not_evaluated(criterion::kPlacements, counts.feedback));
    report.results.push_back(not_evaluated(criterion::kExtents, counts.feedback));
  }
  report.passed = std::all_of(report.results.begin(), report.results.end(),
                              [](const auto& r) { return r.passed; });
  return report;
}

ValidationReport validate_meta_program(const std::vector<ObjectTrace>& call_traces,
                                       const std::vector<ObjectTrace>& motif_traces,
                                       const ValidatorConfig& cfg) {
  if (call_traces.size() != motif_traces.size()) {
    throw Error(ErrorKind::InvalidArgument,
                fmt::format("{} call traces for {} motif programs", call_traces.size(),
                            motif_traces.size()));
  }
  ValidationReport report;
  report.target = ReportTarget::Meta;
  for (std::size_t i = 0; i < call_traces.size(); ++i) {
    const int example = static_cast<int>(i) + 1;
    CriterionResult counts =
        counts_result(to_scene_objects(call_traces[i]), to_scene_objects(motif_traces[i]));
    counts.example = example;
    report.results.push_back(counts);
    CriterionResult dirs = counts.passed
                               ? check_pairwise_directions(call_traces[i], motif_traces[i], cfg)
                               : not_evaluated(criterion::kDirections, counts.feedback);
    dirs.example = example;
    report.results.push_back(std::move(dirs));
  }
  report.passed = std::all_of(report.results.begin(), report.results.end(),
                              [](const auto& r) { return r.passed; });
  return report;
}

std::string meta_feedback(const ValidationReport& report) {
  std::map<int, std::vector<const CriterionResult*>> by_example;
  for (const auto& r : report.results) {
    if (!r.passed) by_example[r.example.value_or(0)].push_back(&r);
  }
  std::string out;
  for (const auto& [example, results] : by_example) {
    out += fmt::format("Example program {}:\n", example);
    const bool counts_failed = std::any_of(results.begin(), results.end(), [](const auto* r) {
      return r->criterion == criterion::kCounts;
    });
    for (const auto* r : results) {
      if (counts_failed && r->criterion != criterion::kCounts) continue;
      if (r->criterion == criterion::kCounts) {
        out += "The number of objects does not match the example program.\n";
      } else {
        out += "The relative directions between objects do not match the example program.\n";
      }
      out += r->feedback + "\n";
    }
  }
  if (!out.empty()) out.pop_back();
  return out;
}

}  // namespace smc
