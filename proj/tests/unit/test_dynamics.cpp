#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "samdyn/dynamics.hpp"

using namespace samdyn;

namespace {

const SamConfig kCfg{0.2, 0.1};

Vec cycle_point(const Spectrum& sp, const SamConfig& cfg, int s) {
  Vec w = sp.center();
  w[0] += s * cycle_amplitude(sp.lambda_max(), cfg);
  return w;
}

}  // namespace

TEST(Run, CyclePointAlternates) {
  const Spectrum sp = Spectrum::positive({1.0, 0.5}, Vec{0.3, -0.2});
  const auto traj = run(QuadraticLoss(sp), cycle_point(sp, kCfg, 1), kCfg, 2);
  EXPECT_LE(distance(traj[1].w, cycle_point(sp, kCfg, -1)), 1e-12);
  EXPECT_LE(distance(traj[2].w, cycle_point(sp, kCfg, 1)), 1e-12);
}

TEST(Run, CycleIsStableOverLongRuns) {
  const Spectrum sp = Spectrum::positive({1.0, 0.5, 0.1});
  const auto traj = run(QuadraticLoss(sp), cycle_point(sp, kCfg, -1), kCfg, 10000);
  EXPECT_LE(distance(traj.back().w, cycle_point(sp, kCfg, -1)), 1e-9);
  const auto rep = detect_cycle(traj);
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.t_conv, 0u);
  EXPECT_EQ(rep.sign_phase, -1);
}

TEST(Run, ZeroRhoIsGradientDescent) {
  const Spectrum sp = Spectrum::positive({1.0, 0.25});
  const SamConfig cfg{0.3, 0.0};
  const auto traj = run(QuadraticLoss(sp), Vec{1.0, -2.0}, cfg, 20);
  for (const auto& r : traj.records()) {
    const double t = static_cast<double>(r.t);
    EXPECT_NEAR(r.w[0], std::pow(0.7, t), 1e-14);
    EXPECT_NEAR(r.w[1], -2.0 * std::pow(1.0 - 0.3 * 0.25, t), 1e-14);
  }
}

TEST(Run, RecordsCarryGradientAndPotential) {
  const Spectrum sp = Spectrum::positive({1.0, 0.5});
  const PotentialSpec pot(sp, kCfg);
  const auto traj = run(QuadraticLoss(sp), Vec{0.7, 0.4}, kCfg, 5);
  for (const auto& r : traj.records()) {
    EXPECT_EQ(r.v, v_of(sp, r.w));
    EXPECT_DOUBLE_EQ(r.vnorm, norm(r.v));
    EXPECT_DOUBLE_EQ(r.J, potential_J(pot, r.w));
    EXPECT_EQ(r.s, sign_of(r.v[0]));
  }
  const auto cubic = run(CubicValleyLoss(Spectrum::with_null_directions({1.0, 0.5}), 0.3), Vec{0.1, 0.1}, kCfg, 3);
  EXPECT_TRUE(std::isnan(cubic.back().J));
}

TEST(Run, ZeroInitialGradientThrows) {
  EXPECT_THROW(run(QuadraticLoss(Spectrum::positive({1.0})), Vec{0.0}, kCfg, 5), SamUndefined);
}

TEST(Run, LandingOnTheMinimumHalts) {
  // w1 = w0(1 − ηλ) − ηλρ = 0 exactly
  const auto traj = run(QuadraticLoss(Spectrum::positive({1.0})), Vec{0.5}, {0.5, 0.5}, 10);
  ASSERT_TRUE(traj.halt().has_value());
  EXPECT_EQ(traj.halt()->t, 1u);
  EXPECT_EQ(traj.back().t, 1u);
  EXPECT_EQ(traj.back().w[0], 0.0);
}

TEST(Run, Thinning) {
  RunOptions opts;
  opts.dense_limit = 10;
  opts.thin_every = 7;
  const auto traj = run(QuadraticLoss(Spectrum::positive({1.0, 0.5})), Vec{1.0, 1.0}, kCfg, 50, opts);
  std::vector<std::uint64_t> ts;
  for (const auto& r : traj.records()) ts.push_back(r.t);
  const std::vector<std::uint64_t> expected{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 14, 21, 28, 35, 42, 49, 50};
  EXPECT_EQ(ts, expected);
}

TEST(Run, CsvLayout) {
  const auto traj = run(QuadraticLoss(Spectrum::positive({1.0, 0.5})), Vec{0.5, 0.25}, kCfg, 3);
  std::ostringstream os;
  write_csv(os, traj);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "t,w_1,w_2,vnorm,J,delta,s");
  std::getline(is, line);
  EXPECT_EQ(line.substr(0, 10), "0,0.5,0.25");
  int rows = 1;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 4);
}

TEST(Delta, StableFormMatchesDefinition) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 1000; ++k) {
    const Vec v{nd(gen), nd(gen), nd(gen)};
    EXPECT_NEAR(delta_of(v), 1.0 - std::abs(v[0]) / norm(v), 1e-14);
  }
  EXPECT_TRUE(std::isnan(delta_of(Vec(2))));
  EXPECT_EQ(delta_of(Vec{-3.0, 0.0}), 0.0);
}

TEST(Delta, UpperBoundExample) {
  const Vec v{1.0, 0.1};
  EXPECT_NEAR(delta_of(v), 1.0 - 1.0 / std::sqrt(1.01), 1e-15);
  EXPECT_NEAR(delta_upper_bound(v), 0.005, 1e-16);
  EXPECT_TRUE(delta_bound_holds(v));
}

TEST(Delta, UpperBoundOnRandomVectors) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd;
  int applicable = 0;
  for (int k = 0; k < 5000; ++k) {
    Vec v{1.0, 0.3 * nd(gen), 0.3 * nd(gen), 0.3 * nd(gen)};
    v *= std::exp(nd(gen));
    if (delta_upper_bound(v) <= 0.5) ++applicable;
    EXPECT_TRUE(delta_bound_holds(v));
  }
  EXPECT_GT(applicable, 1000);
}

TEST(DetectCycle, NoConvergenceWithoutLeadingComponent) {
  const Spectrum sp = Spectrum::positive({1.0, 0.5});
  const auto traj = run(QuadraticLoss(sp), Vec{0.0, 1.0}, kCfg, 2000);
  const auto rep = detect_cycle(traj);
  EXPECT_FALSE(rep.converged);
  EXPECT_GT(rep.amplitude_error, 1e-3);
}

TEST(DetectCycle, ConvergesFromGenericStart) {
  const Spectrum sp = Spectrum::positive({1.0, 0.5, 0.25});
  const SamConfig cfg{0.4, 0.1};
  const auto traj = run(QuadraticLoss(sp), Vec{0.8, -0.5, 0.3}, cfg, 3000);
  const auto rep = detect_cycle(traj, 1e-8);
  ASSERT_TRUE(rep.converged);
  EXPECT_GT(rep.t_conv, 0u);
  EXPECT_LE(rep.amplitude_error, 1e-8);
  EXPECT_NEAR(rep.amplitude, 0.04 / 1.6, 1e-16);
  // Window not yet covered: too short a run after entry.
  const auto tail = detect_cycle(traj, 1e-8, 5000);
  EXPECT_FALSE(tail.converged);
}

TEST(Drift, QuadraticStepIsPureOscillation) {
  const Spectrum sp = Spectrum::positive({1.0, 0.5}, Vec{0.2, 0.1});
  const auto rep = measure_drift(QuadraticLoss(sp), sp.center(), kCfg, 1);
  EXPECT_LE(norm(rep.measured_step - rep.predicted_oscillation), 1e-15);
  EXPECT_EQ(norm(rep.predicted_drift), 0.0);
  EXPECT_TRUE(rep.within_budget);
}

TEST(Drift, CubicStepMatchesHandComputation) {
  const double c = 0.3;
  const CubicValleyLoss loss(Spectrum::with_null_directions({1.0, 0.5}), c);
  for (int s : {1, -1}) {
    const auto rep = measure_drift(loss, Vec(2), kCfg, s);
    const double a = s * beta_i(1.0, kCfg);
    const double gx = a;
    const double gy = c * a * a;
    const double gn = std::hypot(gx, gy);
    const double x1 = a + kCfg.rho * gx / gn;
    const double x2 = kCfg.rho * gy / gn;
    const Vec step{-kCfg.eta * (x1 + 2.0 * c * x1 * x2), -kCfg.eta * (0.5 * x2 + c * x1 * x1)};
    EXPECT_LE(norm(rep.measured_step - step), 1e-16);
    EXPECT_NEAR(rep.grad_lambda_max[1], 2.0 * c, 1e-14);
    EXPECT_EQ(rep.remainder_budget, 0.0);
    // The ascent direction along ±q₁ reproduces oscillation plus drift.
    EXPECT_LE(rep.surrogate_residual, 1e-14);
  }
}

TEST(Drift, QuarticStepWithinBudget) {
  const QuarticValleyLoss loss(Spectrum::with_null_directions({1.0, 0.5}), 0.3, 0.5);
  for (int s : {1, -1}) {
    const auto rep = measure_drift(loss, Vec(2), kCfg, s);
    EXPECT_TRUE(rep.within_budget) << rep.residual_norm << " vs " << rep.remainder_budget;
    EXPECT_GT(rep.remainder_budget, 0.0);
  }
}

TEST(Drift, RequiresStationaryPoint) {
  const CubicValleyLoss loss(Spectrum::with_null_directions({1.0, 0.5}), 0.3);
  EXPECT_THROW(measure_drift(loss, Vec{0.1, 0.0}, kCfg, 1), DriftHypothesisViolated);
  EXPECT_THROW(measure_drift(QuadraticLoss(Spectrum::positive({1.0, 1.0})), Vec(2), kCfg, 1), DriftHypothesisViolated);
}

TEST(Excursions, BallEntryAndCounts) {
  const Spectrum sp = Spectrum::positive({1.0, 0.5});
  const auto c = constants(sp, kCfg);
  const auto traj = run(QuadraticLoss(sp), Vec{1.0, 0.5}, kCfg, 2000);
  const auto entry = first_ball_entry(traj, c.b);
  ASSERT_TRUE(entry.has_value());
  EXPECT_LE(*entry, early_descent_time(c, norm(Vec{1.0, 0.5})));
  for (double eps : {0.1, 0.5, 1.0}) {
    EXPECT_LE(static_cast<double>(excursion_count(traj, *entry, c.beta1(), eps)), breakaway_bound(c, eps));
  }
}

TEST(StepChecks, HoldAlongRandomTrajectories) {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> ud(0.05, 2.0);
  std::normal_distribution<double> nd;
  SweepTally first;
  for (int k = 0; k < 40; ++k) {
    const std::size_t d = 2 + k % 4;
    std::vector<double> lam(d);
    for (auto& l : lam) l = ud(gen);
    std::sort(lam.rbegin(), lam.rend());
    const Spectrum sp = Spectrum::positive(lam);
    const SamConfig cfg{0.45 / lam[0], 0.05 + 0.2 * ud(gen)};
    Vec w0(d);
    for (std::size_t i = 0; i < d; ++i) w0[i] = nd(gen);
    const auto traj = run(QuadraticLoss(sp), w0, cfg, 3000);
    const auto rep = lemma_sweeps(traj, constants(sp, cfg));
    EXPECT_TRUE(rep.ok()) << "trajectory " << k;
    EXPECT_GT(rep.ball.checked, 0u);
    EXPECT_GT(rep.descent.checked, 0u);
    first.checked += rep.first_component.checked;
    first.failed += rep.first_component.failed;
  }
  EXPECT_GT(first.checked, 0u);
  EXPECT_EQ(first.failed, 0u);
}

TEST(StepChecks, FirstComponentIdentityOnTheCycle) {
  const Spectrum sp = Spectrum::positive({1.0, 0.5, 0.2});
  const auto c = constants(sp, kCfg);
  const auto traj = run(QuadraticLoss(sp), Vec{0.5, 0.4, -0.3}, kCfg, 1000);
  const auto rep = lemma_sweeps(traj, c);
  EXPECT_GT(rep.first_component.checked, 100u);
  EXPECT_TRUE(rep.first_component.ok());
}

TEST(SweepTally, CountsOutcomes) {
  SweepTally t;
  t.add(true);
  t.add(std::nullopt);
  t.add(false);
  EXPECT_EQ(t.checked, 2u);
  EXPECT_EQ(t.skipped, 1u);
  EXPECT_EQ(t.failed, 1u);
  EXPECT_FALSE(t.ok());
}
