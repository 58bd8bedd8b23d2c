#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "densehmc/bench.hpp"
#include "densehmc/conformance.hpp"
#include "support/oracles.hpp"

using namespace densehmc;

namespace {

const ReferenceBackend kRef;

TimingRecord record(std::string backend, double mean, BenchOp op = BenchOp::GradEval) {
  TimingRecord r;
  r.n = 100;
  r.k = 2;
  r.p = 10;
  r.backend = std::move(backend);
  r.op = op;
  r.mean_s = mean;
  r.rep_s = {mean, mean};
  return r;
}

TEST(Grid, DefaultIsTheFullProduct) {
  const auto g = default_grid();
  EXPECT_EQ(g.combinations(), 224u);
  EXPECT_EQ(g.ns, (std::vector<std::size_t>{100, 1000, 5000, 10000}));
  EXPECT_EQ(g.ks.size(), 7u);
  EXPECT_EQ(g.ps.size(), 8u);
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> points;
  for (auto n : g.ns)
    for (auto k : g.ks)
      for (auto p : g.ps) points.emplace(n, k, p);
  EXPECT_EQ(points.size(), 224u);
  EXPECT_EQ(g.repetitions, 5);
  EXPECT_EQ(g.precision, Precision::F32);
}

TEST(Grid, ValidationNamesFields) {
  auto g = default_grid();
  g.ks = {1};
  try {
    g.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "k");
  }
}

TEST(Timing, SingleRepMeanEqualsMeasurement) {
  const auto g = time_gradient(100, 2, 10, kRef, 1);
  ASSERT_EQ(g.rep_s.size(), 1u);
  EXPECT_EQ(g.mean_s, g.rep_s[0]);
  EXPECT_GT(g.mean_s, 0.0);
  EXPECT_TRUE(std::isfinite(g.mean_s));
  const auto l = time_leapfrog(100, 2, 10, kRef, 1);
  EXPECT_EQ(l.mean_s, l.rep_s[0]);
  EXPECT_GT(l.mean_s, 0.0);
  EXPECT_EQ(l.op, BenchOp::LeapfrogUpdate);
}

TEST(Timing, MeanOfRepetitions) {
  const auto r = time_gradient(100, 3, 20, kRef, 5, Variant::Unmasked, Precision::F64);
  ASSERT_EQ(r.rep_s.size(), 5u);
  double sum = 0.0;
  for (double v : r.rep_s) sum += v;
  EXPECT_NEAR(r.mean_s, sum / 5.0, 1e-15);
  EXPECT_EQ(r.variant, Variant::Unmasked);
  EXPECT_EQ(r.precision, Precision::F64);
  EXPECT_EQ(r.backend, "reference");
}

TEST(Timing, LeapfrogContainsTwoGradients) {
  const auto g = time_gradient(1000, 5, 1000, kRef, 3);
  const auto l = time_leapfrog(1000, 5, 1000, kRef, 3);
  EXPECT_GE(l.mean_s, g.mean_s);
}

TEST(Timing, GrowsWithColumns) {
  // Asserted over three repeated measurements; the cost is O(NpK).
  for (int run = 0; run < 3; ++run) {
    const double small = time_gradient(1000, 5, 100, kRef, 3).mean_s;
    const double mid = time_gradient(1000, 5, 1000, kRef, 3).mean_s;
    const double large = time_gradient(1000, 5, 10000, kRef, 3).mean_s;
    EXPECT_LT(small, mid);
    EXPECT_LT(mid, large);
    EXPECT_GT(large / small, 10.0);
  }
}

TEST(Report, SingleRecordAndIdentityRatio) {
  std::vector<TimingRecord> one{record("reference", 0.5)};
  std::ostringstream csv;
  emit_report(one, csv);
  std::istringstream lines(csv.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) ++count;
  EXPECT_EQ(count, 2);

  std::vector<TimingRecord> pair{record("reference", 0.5), record("eigen", 0.5)};
  attach_speedups(pair);
  ASSERT_TRUE(pair[1].speedup.has_value());
  EXPECT_EQ(*pair[1].speedup, 1.0);
}

TEST(Report, SpeedupNeedsTwoBackends) {
  std::vector<TimingRecord> alone{record("reference", 0.5)};
  attach_speedups(alone);
  EXPECT_FALSE(alone[0].speedup.has_value());
  std::vector<TimingRecord> pair{record("reference", 0.6), record("eigen", 0.2)};
  attach_speedups(pair);
  EXPECT_NEAR(*pair[1].speedup, 3.0, 1e-12);
}

TEST(Report, RoundTripsEveryField) {
  std::vector<TimingRecord> records{record("reference", 0.125),
                                    record("eigen", 1.0 / 3.0, BenchOp::LeapfrogUpdate)};
  records[1].variant = Variant::Unmasked;
  records[1].precision = Precision::F64;
  records[1].speedup = 0.375;
  auto skipped = record("eigen", std::nan(""));
  skipped.rep_s.clear();
  skipped.status = "skipped:memory";
  records.push_back(skipped);

  std::stringstream csv;
  emit_report(records, csv);
  const auto back = parse_report(csv);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].key(), records[i].key());
    EXPECT_EQ(back[i].rep_s, records[i].rep_s);
    EXPECT_EQ(back[i].status, records[i].status);
  }
  EXPECT_EQ(back[0].mean_s, 0.125);
  EXPECT_EQ(back[1].mean_s, 1.0 / 3.0);
  EXPECT_EQ(*back[1].speedup, 0.375);
  EXPECT_TRUE(std::isnan(back[2].mean_s));
}

TEST(Report, RejectsForeignHeader) {
  std::istringstream csv("a,b,c\n1,2,3\n");
  EXPECT_THROW(parse_report(csv), std::runtime_error);
}

TEST(Sweep, ResumesWithoutDuplicates) {
  oracle::TempDir dir("sweep");
  SweepGrid g;
  g.ns = {50};
  g.ks = {2, 3};
  g.ps = {5};
  g.repetitions = 2;
  const auto backends = std::vector<std::shared_ptr<const Backend>>{
      select_backend("reference", g.precision), select_backend("eigen", g.precision)};
  const auto first = run_sweep(g, backends, dir / "b.csv");
  EXPECT_EQ(first.measured, 2u * 2u * 2u);
  g.ks = {2, 3, 4};
  const auto second = run_sweep(g, backends, dir / "b.csv");
  EXPECT_EQ(second.resumed, 8u);
  EXPECT_EQ(second.measured, 4u);

  std::ifstream in(dir / "b.csv");
  const auto rows = parse_report(in);
  ASSERT_EQ(rows.size(), 12u);
  std::set<std::string> keys;
  for (const auto& r : rows) keys.insert(r.key());
  EXPECT_EQ(keys.size(), 12u);
  for (const auto& r : rows)
    if (r.backend == "eigen") EXPECT_TRUE(r.speedup.has_value());
}

TEST(Sweep, RefusesMismatchedRepetitions) {
  oracle::TempDir dir("sweep");
  SweepGrid g;
  g.ns = {20};
  g.ks = {2};
  g.ps = {3};
  g.repetitions = 2;
  const std::vector<std::shared_ptr<const Backend>> be{select_backend("reference", g.precision)};
  run_sweep(g, be, dir / "b.csv");
  g.repetitions = 3;
  EXPECT_THROW(run_sweep(g, be, dir / "b.csv"), std::runtime_error);
}

TEST(Sweep, OverBudgetPointsAreSkippedNotFatal) {
  oracle::TempDir dir("sweep");
  SweepGrid g;
  g.ns = {10};
  g.ks = {2};
  g.ps = {4, 100000};
  g.repetitions = 1;
  g.memory_budget_bytes = estimated_bytes(10, 2, 4, g.precision);
  const std::vector<std::shared_ptr<const Backend>> be{select_backend("reference", g.precision)};
  const auto result = run_sweep(g, be, dir / "b.csv");
  EXPECT_EQ(result.skipped, 2u);
  EXPECT_EQ(result.measured, 2u);
  for (const auto& r : result.records)
    if (r.p == 100000) EXPECT_EQ(r.status.rfind("skipped:", 0), 0u);
}

TEST(Variants, UnmaskedGradientDiffersInFinalColumn) {
  std::mt19937_64 rng(5);
  const auto d = oracle::random_dataset(20, 3, 3, rng);
  const auto b = oracle::random_coefficients(3, 3, rng);
  const auto masked = grad_log_kernel(kRef, d, b, make_mask(3, 3));
  const auto free = grad_log_kernel_unmasked(kRef, d, b);
  EXPECT_GT(max_abs_diff(masked, free), 0.0);
}

TEST(Allocation, CountsAreReported) {
  const auto r = time_gradient(50, 3, 5, kRef, 2);
  EXPECT_GT(r.allocations_per_call, 0.0);
}

}  // namespace
