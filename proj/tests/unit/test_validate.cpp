#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "smc/error.hpp"
#include "smc/program/program.hpp"
#include "smc/validate/validator.hpp"
#include "support/naive_interpreter.hpp"
#include "support/oracles.hpp"

using namespace smc;

namespace {

ObjectTrace plates_trace() { return trace_from_arrangement(smc::testing::golden_plates()); }

const CriterionResult pass_judge = hardcode_judgment(true, {});

ObjectTrace stack_trace(int n, double dy, std::string label = "plate") {
  ObjectTrace t;
  for (int i = 0; i < n; ++i) {
    t.objects.push_back({label, Vec3(0.08909, 0.0143, 0.08853), Vec3(0, i * dy, 0),
                         Rotation::Identity()});
  }
  return t;
}

double brute_force_min_cost(const std::vector<std::vector<double>>& cost) {
  std::vector<std::size_t> perm(cost.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0;
    for (std::size_t i = 0; i < perm.size(); ++i) c += cost[i][perm[i]];
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("assignment matches brute force") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 7;
    std::vector<std::vector<double>> cost(n, std::vector<double>(n));
    for (auto& row : cost) {
      for (auto& c : row) c = trial % 3 == 0 ? std::round(u(rng)) : u(rng);
    }
    const auto assign = min_cost_assignment(cost);
    std::vector<std::size_t> sorted = assign;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n; ++i) CHECK(sorted[i] == i);
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) total += cost[i][assign[i]];
    CHECK(total == doctest::Approx(brute_force_min_cost(cost)).epsilon(1e-12));
  }
}

TEST_CASE("check_counts") {
  const Arrangement ref = smc::testing::golden_plates();
  CHECK(check_counts(plates_trace(), ref).passed);

  ObjectTrace six = plates_trace();
  six.objects.pop_back();
  const auto r = check_counts(six, ref);
  CHECK_FALSE(r.passed);
  CHECK(r.feedback.find("plate: expected 7, got 6") != std::string::npos);

  Arrangement mixed;
  for (const char* l : {"plate", "plate", "cup"}) {
    SceneObject o;
    o.id = std::string(l) + std::to_string(mixed.objects.size());
    o.label = l;
    mixed.objects.push_back(o);
  }
  ObjectTrace other;
  for (const char* l : {"plate", "cup", "cup"}) other.objects.push_back({l, Vec3::Ones(), Vec3::Zero(), Rotation::Identity()});
  const auto m = check_counts(other, mixed);
  CHECK_FALSE(m.passed);
  CHECK(m.details.size() == 2);
  CHECK(m.feedback.find("cup: expected 1, got 2") != std::string::npos);
  CHECK(m.feedback.find("plate: expected 2, got 1") != std::string::npos);
}

TEST_CASE("check_placements") {
  const Arrangement ref = smc::testing::golden_plates();
  const auto same = check_placements(plates_trace(), ref);
  CHECK(same.passed);
  CHECK(same.feedback.empty());

  ObjectTrace shifted = plates_trace();
  shifted.objects[1].position.x() += 0.1;
  const auto r = check_placements(shifted, ref);
  CHECK_FALSE(r.passed);
  REQUIRE(r.details.size() == 1);
  CHECK(r.details[0].subject == "obj_2");
  CHECK(r.feedback.find("obj_2") != std::string::npos);
  CHECK(r.feedback.find("(0.0, -0.00757, 0.0)") != std::string::npos);
  // Closed-form overlap: 0.1 shift along x of a 0.178 wide plate.
  const Vec3 h(0.08909, 0.0143, 0.08853);
  const Vec3 c(0, -0.00757, 0), s(0.1, -0.00757, 0);
  CHECK(smc::testing::closed_form_iou(c - h, c + h, s - h, s + h) < kObjectIouThreshold);

  ObjectTrace all = plates_trace();
  for (auto& o : all.objects) o.position.x() += 1.0;
  const auto a = check_placements(all, ref);
  CHECK_FALSE(a.passed);
  CHECK(a.details.size() == 7);

  ObjectTrace reversed = plates_trace();
  std::reverse(reversed.objects.begin(), reversed.objects.end());
  CHECK(check_placements(reversed, ref).passed);

  ObjectTrace short_trace = plates_trace();
  short_trace.objects.pop_back();
  CHECK_THROWS_AS(check_placements(short_trace, ref), Error);
}

TEST_CASE("IoU threshold boundary on both sides") {
  Arrangement ref;
  SceneObject o;
  o.id = "cube";
  o.label = "cube";
  o.half_size = Vec3::Constant(0.5);
  ref.objects.push_back(o);
  // Unit cube shifted by d along x: IoU = (1-d)/(1+d) = 0.9 at d = 1/19.
  const double d_boundary = 1.0 / 19.0;
  for (const auto& [d, expect] : {std::pair{d_boundary * 0.99, true}, {d_boundary * 1.01, false}}) {
    ObjectTrace t;
    t.objects.push_back({"cube", Vec3::Constant(0.5), Vec3(d, 0, 0), Rotation::Identity()});
    const double oracle = smc::testing::closed_form_iou(Vec3::Constant(-0.5), Vec3::Constant(0.5),
                                                        Vec3(d - 0.5, -0.5, -0.5),
                                                        Vec3(d + 0.5, 0.5, 0.5));
    CHECK((oracle >= 0.9) == expect);
    CHECK(check_placements(t, ref).passed == expect);
  }
}

TEST_CASE("check_extents") {
  const Arrangement ref = smc::testing::golden_plates();
  CHECK(check_extents(plates_trace(), ref).passed);

  ObjectTrace scaled = plates_trace();
  scaled.objects[2].half_size *= 2.0;
  const auto r = check_extents(scaled, ref);
  CHECK_FALSE(r.passed);
  CHECK(r.feedback.find("obj_3") != std::string::npos);
  CHECK(r.feedback.find("0.17818") != std::string::npos);

  ObjectTrace tiny = plates_trace();
  tiny.objects[0].half_size.x() *= 1.0005;
  CHECK(check_extents(tiny, ref).passed);
  tiny.objects[0].half_size.x() *= 1.002;
  CHECK_FALSE(check_extents(tiny, ref).passed);

  ObjectTrace rotated = plates_trace();
  rotated.objects[4].rotation = rotation_about(Axis::X, 90.0);
  CHECK_FALSE(check_extents(rotated, ref).passed);
  // Rotating a plate about its vertical axis keeps a near-identical box.
  ObjectTrace spun = plates_trace();
  spun.objects[4].rotation = rotation_about(Axis::Y, 90.0);
  CHECK(check_extents(spun, ref).passed);
}

TEST_CASE("check_pairwise_directions") {
  const ObjectTrace motif = stack_trace(7, -0.00757);
  CHECK(check_pairwise_directions(motif, motif).passed);
  CHECK(check_pairwise_directions(stack_trace(7, -0.00757), plates_trace()).passed);

  ObjectTrace row;
  for (int i = 0; i < 7; ++i) row.objects.push_back({"plate", Vec3::Ones(), Vec3(i * 0.2, 0, 0), Rotation::Identity()});
  const auto r = check_pairwise_directions(row, motif);
  CHECK_FALSE(r.passed);
  CHECK(r.details.size() == 42);

  CHECK(check_pairwise_directions(stack_trace(1, 0), stack_trace(1, 0)).passed);
  CHECK_THROWS_AS(check_pairwise_directions(stack_trace(2, 0.1), stack_trace(3, 0.1)), Error);
}

TEST_CASE("validate_motif_program") {
  const Arrangement ref = smc::testing::golden_plates();
  const auto ok = validate_motif_program(plates_trace(), ref, pass_judge);
  CHECK(ok.passed);
  REQUIRE(ok.results.size() == 4);
  CHECK(ok.results[0].criterion == criterion::kHardcode);
  CHECK(ok.results[3].criterion == criterion::kExtents);

  ObjectTrace shifted = plates_trace();
  shifted.objects[1].position.x() += 0.1;
  const auto s = validate_motif_program(shifted, ref, pass_judge);
  CHECK_FALSE(s.passed);
  CHECK(s.failed_criteria() == std::vector<std::string>{criterion::kPlacements});

  const auto j = validate_motif_program(plates_trace(), ref,
                                        hardcode_judgment(false, {"y_positions"}));
  CHECK(j.failed_criteria() == std::vector<std::string>{criterion::kHardcode});
  CHECK(j.find(criterion::kHardcode)->feedback.find("y_positions") != std::string::npos);

  ObjectTrace six = plates_trace();
  six.objects.pop_back();
  const auto c = validate_motif_program(six, ref, pass_judge);
  CHECK(c.failed_criteria() ==
        std::vector<std::string>{criterion::kCounts, criterion::kPlacements, criterion::kExtents});
  for (const auto& r : c.results) {
    if (!r.passed) CHECK_FALSE(r.feedback.empty());
  }
}

TEST_CASE("naive programs always validate against their source") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> pos(-1.0, 1.0), size(0.02, 0.3);
  std::uniform_int_distribution<int> quarter(0, 3);
  for (int trial = 0; trial < 30; ++trial) {
    Arrangement a;
    a.description = "random";
    for (int i = 0; i < 1 + trial % 6; ++i) {
      SceneObject o;
      o.id = "o" + std::to_string(i);
      o.label = i % 2 ? "cup" : "plate";
      o.half_size = Vec3(size(rng), size(rng), size(rng));
      o.position = Vec3(pos(rng), pos(rng), pos(rng));
      o.rotation = rotation_about(Axis::Y, 90.0 * quarter(rng));
      a.objects.push_back(o);
    }
    const ObjectTrace t = smc::testing::interpret_straight_line(extract_naive_program(a).source);
    CHECK(validate_motif_program(t, a, pass_judge).passed);
  }
}

TEST_CASE("validate_meta_program") {
  const ObjectTrace motif = plates_trace();
  const auto ok = validate_meta_program({stack_trace(7, -0.00757)}, {motif});
  CHECK(ok.passed);
  CHECK(ok.target == ReportTarget::Meta);

  const auto six = validate_meta_program({stack_trace(6, -0.00757)}, {motif});
  CHECK_FALSE(six.passed);
  const auto* counts = six.find(criterion::kCounts, 1);
  REQUIRE(counts);
  CHECK_FALSE(counts->passed);
  const std::string fb = meta_feedback(six);
  CHECK(fb.rfind("Example program 1:", 0) == 0);
  CHECK(fb.find("plate: expected 7, got 6") != std::string::npos);

  const auto two = validate_meta_program({stack_trace(7, -0.00757), stack_trace(3, 0.1)},
                                         {motif, stack_trace(3, -0.1)});
  CHECK_FALSE(two.passed);
  const std::string fb2 = meta_feedback(two);
  CHECK(fb2.find("Example program 1:") == std::string::npos);
  CHECK(fb2.find("Example program 2:") != std::string::npos);

  CHECK(validate_meta_program({}, {}).passed);
  CHECK_THROWS_AS(validate_meta_program({motif}, {}), Error);
}

TEST_CASE("report JSON") {
  const auto j = report_to_json(validate_meta_program({stack_trace(6, 0.1)}, {stack_trace(7, 0.1)}));
  CHECK(j["target"] == "meta");
  CHECK(j["passed"] == false);
  CHECK(j["results"][0]["example"] == 1);
}
