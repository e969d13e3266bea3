#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "samdyn/samdyn.hpp"

using namespace samdyn;

TEST(CounterRng, DeterministicPerStream) {
  CounterRng a(42, 3);
  CounterRng b(42, 3);
  CounterRng c(42, 4);
  std::set<std::uint64_t> seen;
  for (int k = 0; k < 100; ++k) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    seen.insert(x);
    seen.insert(c.next_u64());
  }
  EXPECT_EQ(seen.size(), 200u);
}

TEST(CounterRng, UniformAndNormalMoments) {
  CounterRng r(7, 0);
  const int n = 200000;
  double su = 0.0;
  double sn = 0.0;
  double sn2 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = r.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.02);
}

TEST(Init, DensityBounds) {
  InitSpec g;
  EXPECT_NEAR(density_bound(g, 2), 1.0 / (2.0 * std::numbers::pi), 1e-15);
  InitSpec b;
  b.distribution = InitDistribution::ball_uniform;
  b.ball_radius = 2.0;
  EXPECT_NEAR(density_bound(b, 2), 1.0 / (4.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(density_bound(b, 3), 3.0 / (4.0 * std::numbers::pi * 8.0), 1e-15);
}

TEST(Init, GaussianTailFrequency) {
  InitSpec spec;
  spec.seed = 5;
  spec.q = 0.25;
  const int n = 20000;
  int hits = 0;
  for (int k = 0; k < n; ++k) hits += sample_init(spec, k, Vec(3)).above_q ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(hits) / n, gaussian_first_coordinate_tail(1.0, 0.25), 0.015);
}

TEST(Init, BallDrawsStayInside) {
  InitSpec spec;
  spec.distribution = InitDistribution::ball_uniform;
  spec.ball_radius = 0.5;
  spec.R = 0.5;
  const Vec z{1.0, 2.0, 3.0, 4.0};
  for (int k = 0; k < 2000; ++k) {
    const auto d = sample_init(spec, k, z);
    EXPECT_LE(distance(d.w0, z), 0.5);
    EXPECT_TRUE(d.within_R);
  }
}

TEST(Init, SameTrialSameDraw) {
  InitSpec spec;
  spec.seed = 11;
  EXPECT_EQ(sample_init(spec, 9, Vec(4)).w0, sample_init(spec, 9, Vec(4)).w0);
  EXPECT_NE(sample_init(spec, 9, Vec(4)).w0, sample_init(spec, 10, Vec(4)).w0);
}

TEST(ParallelMap, KeepsIndexOrder) {
  const auto out = parallel_map(1000, 4, [](std::size_t i) { return static_cast<int>(i * i); });
  ASSERT_EQ(out.size(), 1000u);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], static_cast<int>(i * i));
  EXPECT_TRUE(parallel_map(0, 3, [](std::size_t) { return 1; }).empty());
}

TEST(ParallelMap, RethrowsFirstFailure) {
  auto fn = [](std::size_t i) -> int {
    if (i == 17 || i == 40) throw std::runtime_error("item " + std::to_string(i));
    return 0;
  };
  try {
    parallel_map(64, 3, fn);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "item 17");
  }
}

TEST(CycleExperiment, MostTrialsConverge) {
  CycleSettings s;
  s.init.trials = 100;
  s.init.seed = 1;
  s.workers = 2;
  const auto res = run_cycle_experiment(s);
  EXPECT_GE(res.converged(), 99u);
  EXPECT_TRUE(res.invariants_ok());
  EXPECT_TRUE(res.convergence_ok());
  ASSERT_TRUE(res.theorem3.has_value());
  EXPECT_EQ(res.within_bound(), res.converged());
}

TEST(CycleExperiment, WorkerCountDoesNotChangeResults) {
  CycleSettings s;
  s.init.trials = 12;
  s.init.seed = 3;
  s.steps = 800;
  s.workers = 1;
  std::ostringstream one;
  write_trials_csv(one, run_cycle_experiment(s));
  s.workers = 4;
  std::ostringstream four;
  write_trials_csv(four, run_cycle_experiment(s));
  EXPECT_EQ(one.str(), four.str());
}

TEST(PotentialCheck, AllRowsPass) {
  const auto rep = potential_check(Spectrum::positive({1.0, 0.6, 0.2}), {0.3, 0.1}, 200, 4);
  EXPECT_EQ(rep.rows.size(), 11u);
  for (const auto& row : rep.rows) EXPECT_TRUE(row.ok()) << row.name << " max error " << row.max_error;
}

TEST(Bounds, ReportWritesEveryRow) {
  const auto rep = compute_bounds(Spectrum::positive({1.0, 0.5}), {0.2, 0.1}, {});
  std::ostringstream os;
  write_bounds_csv(os, rep);
  const std::string text = os.str();
  EXPECT_NE(text.find("early_descent_time,40\n"), std::string::npos);
  EXPECT_NE(text.find("breakaway_bound_eps_0.5,"), std::string::npos);
  EXPECT_NE(text.find("theorem3_total,"), std::string::npos);
  EXPECT_EQ(fmt(0.1), "0.10000000000000001");
}
