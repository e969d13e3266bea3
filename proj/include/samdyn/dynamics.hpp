#pragma once

// Trajectories of the SAM iteration and the diagnostics run over them:
// two-cycle detection, δ_t tracking, the per-step lemma sweeps on quadratics,
// and the single-step drift measurement at an oscillation point.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "samdyn/error.hpp"
#include "samdyn/losses.hpp"
#include "samdyn/numerics.hpp"
#include "samdyn/potential.hpp"
#include "samdyn/sam.hpp"
#include "samdyn/theory.hpp"

namespace samdyn {

/// δ = 1 − |v₁|/‖v‖, computed as Σ_{i≥2} v_i² / (‖v‖(‖v‖ + |v₁|)) to avoid
/// cancellation near the e₁ axis. NaN at v = 0.
inline double delta_of(const Vec& v) {
  const double n = norm(v);
  if (!(n > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  double tail = 0.0;
  for (std::size_t i = 1; i < v.dim(); ++i) tail += v[i] * v[i];
  return tail / (n * (n + std::abs(v[0])));
}

struct TrajectoryRecord {
  std::uint64_t t = 0;
  Vec w;
  Vec v;              // ∇ℓ(w_t); Λ(w_t − z) on a quadratic
  double vnorm = 0.0;
  double J = 0.0;     // J(u_t); NaN unless the loss is a quadratic with a valid potential
  double delta = 0.0;
  int s = 0;          // sign(v_{t,1})
};

struct TrajectoryHalt {
  std::uint64_t t = 0;
  std::string message;
};

struct RunOptions {
  std::uint64_t dense_limit = 1'000'000;  // every step up to here is recorded
  std::uint64_t thin_every = 1000;        // afterwards only every k-th step (and the last)
  std::uint64_t seed = 0;                 // metadata only
};

class Trajectory {
 public:
  Trajectory(std::optional<Spectrum> spectrum, SamConfig cfg, std::uint64_t seed)
      : spectrum_(std::move(spectrum)), cfg_(cfg), seed_(seed) {}

  const std::vector<TrajectoryRecord>& records() const noexcept { return records_; }
  std::vector<TrajectoryRecord>& records() noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  const TrajectoryRecord& operator[](std::size_t k) const { return records_[k]; }
  const TrajectoryRecord& back() const { return records_.back(); }

  const std::optional<Spectrum>& spectrum() const noexcept { return spectrum_; }
  const SamConfig& config() const noexcept { return cfg_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::optional<TrajectoryHalt>& halt() const noexcept { return halt_; }
  void set_halt(TrajectoryHalt h) { halt_ = std::move(h); }

  std::size_t dim() const { return records_.empty() ? 0 : records_.front().w.dim(); }

  const Spectrum& require_spectrum() const {
    if (!spectrum_) throw InvalidArgument("trajectory carries no spectrum");
    return *spectrum_;
  }

 private:
  std::optional<Spectrum> spectrum_;
  SamConfig cfg_;
  std::uint64_t seed_;
  std::vector<TrajectoryRecord> records_;
  std::optional<TrajectoryHalt> halt_;
};

namespace detail {

template <class L>
std::optional<Spectrum> spectrum_of(const L& loss) {
  if constexpr (requires { loss.spectrum(); }) {
    return loss.spectrum();
  } else {
    return std::nullopt;
  }
}

template <class L>
bool is_quadratic(const L& loss) {
  if constexpr (std::same_as<L, QuadraticLoss>) {
    return true;
  } else if constexpr (std::same_as<L, AnyLoss>) {
    return loss.family() == LossFamily::quadratic;
  } else {
    return false;
  }
}

inline std::optional<PotentialSpec> potential_for(const Spectrum& spectrum, const SamConfig& cfg) {
  if (!(cfg.rho > 0.0) || !spectrum.is_positive() || !(cfg.eta * spectrum.lambda_max() < 1.0)) return std::nullopt;
  return PotentialSpec(spectrum, cfg);
}

}  // namespace detail

/// Iterates the SAM step `steps` times from w0. A zero gradient after the
/// first step halts the run and is reported through Trajectory::halt().
template <LossOracle L>
Trajectory run(const L& loss, const Vec& w0, const SamConfig& cfg, std::uint64_t steps, const RunOptions& opts = {}) {
  cfg.validate();
  if (steps < 1) throw InvalidArgument("steps must be at least 1");
  if (opts.thin_every < 1) throw InvalidArgument("thin_every must be at least 1");
  if (w0.dim() != loss.dim()) throw DimError("w0 dimension does not match the loss");

  Trajectory traj(detail::spectrum_of(loss), cfg, opts.seed);
  std::optional<PotentialSpec> pot;
  if (detail::is_quadratic(loss)) pot = detail::potential_for(*traj.spectrum(), cfg);
  const Vec center = traj.spectrum() ? traj.spectrum()->center() : Vec(w0.dim());

  auto make_record = [&](std::uint64_t t, const Vec& w, Vec g) {
    TrajectoryRecord r;
    r.t = t;
    r.w = w;
    r.vnorm = norm(g);
    r.J = pot ? potential_J(*pot, w - center) : std::numeric_limits<double>::quiet_NaN();
    r.delta = delta_of(g);
    r.s = sign_of(g[0]);
    r.v = std::move(g);
    return r;
  };

  {
    Vec g0 = loss.gradient(w0);
    if (!(norm(g0) > cfg.grad_floor)) throw SamUndefined("zero gradient at t = 0");
  }

  auto& recs = traj.records();
  recs.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(steps, opts.dense_limit) + 2));
  Vec w = w0;
  Vec g = loss.gradient(w);
  recs.push_back(make_record(0, w, g));
  for (std::uint64_t t = 0; t < steps; ++t) {
    const double gnorm = norm(g);
    if (!(gnorm > cfg.grad_floor)) {
      traj.set_halt({t, "SAM step undefined: gradient norm " + std::to_string(gnorm) + " at or below the floor"});
      if (recs.back().t != t) recs.push_back(make_record(t, w, g));
      break;
    }
    w -= cfg.eta * loss.gradient(w + (cfg.rho / gnorm) * g);
    g = loss.gradient(w);
    const std::uint64_t next = t + 1;
    if (next <= opts.dense_limit || next % opts.thin_every == 0 || next == steps) {
      recs.push_back(make_record(next, w, g));
    }
  }
  return traj;
}

/// Header `t,w_1..w_d,vnorm,J,delta,s`, one row per record, reals as %.17g.
inline void write_csv(std::ostream& out, const Trajectory& traj) {
  const std::size_t d = traj.dim();
  out << 't';
  for (std::size_t i = 1; i <= d; ++i) out << ",w_" << i;
  out << ",vnorm,J,delta,s\n";
  char buf[32];
  auto real = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out << ',' << buf;
  };
  for (const auto& r : traj.records()) {
    out << r.t;
    for (std::size_t i = 0; i < d; ++i) real(r.w[i]);
    real(r.vnorm);
    real(r.J);
    real(r.delta);
    out << ',' << r.s << '\n';
  }
}

struct CycleReport {
  bool converged = false;
  std::optional<std::uint64_t> t_conv;
  double amplitude_error = 0.0;  // max over the verified suffix; closest approach otherwise
  int sign_phase = 0;            // s with w_t ≈ z + (−1)^{t−T} s·w*
  double amplitude = 0.0;        // ‖w*‖ = ηρλ₁/(2 − ηλ₁)
  std::size_t verified = 0;      // records in the verified suffix
};

/// Looks for the two-cycle z ± w*, w* = (ηρλ₁/(2 − ηλ₁))e₁. T_conv is the
/// first recorded t from which every later record satisfies
/// ‖w_t − z − (−1)^{t−T}s·w*‖ ≤ eps with one fixed s, and the run must
/// continue for at least `window` steps past T_conv.
inline CycleReport detect_cycle(const Trajectory& traj, double eps = 1e-8, std::size_t window = 16) {
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  if (window < 2) throw InvalidArgument("window must be at least 2");
  const Spectrum& spectrum = traj.require_spectrum();
  CycleReport rep;
  rep.amplitude = cycle_amplitude(spectrum.lambda_max(), traj.config());
  const auto& recs = traj.records();
  if (recs.empty()) return rep;

  // Distance to the cycle point of "absolute" phase p, where the target at t
  // is (−1)^t p·w*.
  auto dist = [&](const TrajectoryRecord& r, int p) {
    Vec x = r.w - spectrum.center();
    const int sign = (r.t % 2 == 0) ? p : -p;
    x[0] -= sign * rep.amplitude;
    return norm(x);
  };

  double closest = INFINITY;
  std::optional<std::size_t> start;
  int phase = 0;
  double worst = 0.0;
  for (std::size_t k = recs.size(); k-- > 0;) {
    const double dp = dist(recs[k], +1);
    const double dm = dist(recs[k], -1);
    closest = std::min({closest, dp, dm});
    const int p = dp <= eps ? +1 : (dm <= eps ? -1 : 0);
    if (p == 0 || (phase != 0 && p != phase)) break;
    phase = p;
    start = k;
    worst = std::max(worst, std::min(dp, dm));
  }

  if (start) {
    const std::uint64_t t0 = recs[*start].t;
    rep.verified = recs.size() - *start;
    if (recs.back().t - t0 >= window) {
      rep.converged = true;
      rep.t_conv = t0;
      rep.sign_phase = (t0 % 2 == 0) ? phase : -phase;
      rep.amplitude_error = worst;
      return rep;
    }
  }
  rep.amplitude_error = closest;
  return rep;
}

/// ½ Σ_{i≥2} v_i² / v₁²
inline double delta_upper_bound(const Vec& v) {
  double tail = 0.0;
  for (std::size_t i = 1; i < v.dim(); ++i) tail += v[i] * v[i];
  return 0.5 * tail / (v[0] * v[0]);
}

/// δ ≤ ½ Σ_{i≥2} v_i²/v₁² whenever the right side is at most ½ (vacuous otherwise).
inline bool delta_bound_holds(const Vec& v) {
  if (v[0] == 0.0) return true;
  const double bound = delta_upper_bound(v);
  if (bound > 0.5) return true;
  return delta_of(v) <= bound * (1.0 + 1e-12) + std::numeric_limits<double>::min();
}

/// The δ bound on every record with v_{t,1} ≠ 0.
inline bool delta_bound_check(const Trajectory& traj) {
  for (const auto& r : traj.records()) {
    if (!delta_bound_holds(r.v)) return false;
  }
  return true;
}

struct DriftReport {
  Vec oscillation_point;      // w_z + s(β₁/λ₁)q₁
  Vec measured_step;          // SAM(w_t) − w_t
  double oscillation_component = 0.0;  // ⟨measured_step, q₁⟩
  Vec orthogonal_component;   // measured_step − predicted oscillation
  Vec predicted_oscillation;
  Vec predicted_drift;
  double residual_norm = 0.0;  // ‖measured − oscillation − drift‖
  double remainder_budget = 0.0;
  bool within_budget = false;
  double lambda1 = 0.0;
  Vec leading_vector;
  Vec grad_lambda_max;
  double lipschitz_b = 0.0;
  // The step with the ascent point replaced by w_z + s(β₁/λ₁ + ρ)q₁, i.e. the
  // ascent direction taken as exactly ±q₁.
  Vec surrogate_step;
  double surrogate_residual = 0.0;
};

/// One SAM step from w_z + s(β₁/λ₁)q₁ compared against drift_prediction.
template <ThirdDerivativeOracle L>
DriftReport measure_drift(const L& loss, const Vec& w_z, const SamConfig& cfg, int s) {
  cfg.validate();
  if (s != 1 && s != -1) throw InvalidArgument("phase s must be +1 or -1");
  if (w_z.dim() != loss.dim()) throw DimError("w_z dimension does not match the loss");
  const double g0 = norm(loss.gradient(w_z));
  if (g0 > 1e-10) throw DriftHypothesisViolated("w_z is not stationary: gradient norm " + std::to_string(g0));
  const auto B = loss.lipschitz_b();
  if (!B) throw DriftHypothesisViolated("loss provides no third-derivative Lipschitz constant");

  LambdaMaxGradient glm;
  try {
    glm = grad_lambda_max(loss, w_z);
  } catch (const DegenerateLeadingEigenvalue& e) {
    throw DriftHypothesisViolated(e.what());
  }
  const Vec grad = glm.analytic ? *glm.analytic : glm.finite_difference;
  const double l1 = glm.lambda_max;
  const Vec& q1 = glm.leading_vector;
  const DriftPrediction pred = drift_prediction(l1, cfg, grad, s, *B, q1);

  DriftReport rep;
  rep.lambda1 = l1;
  rep.leading_vector = q1;
  rep.grad_lambda_max = grad;
  rep.lipschitz_b = *B;
  const double r = beta_i(l1, cfg) / l1;
  rep.oscillation_point = w_z + (s * r) * q1;
  rep.measured_step = sam_step(loss, rep.oscillation_point, cfg) - rep.oscillation_point;
  rep.oscillation_component = dot(rep.measured_step, q1);
  rep.predicted_oscillation = pred.oscillation;
  rep.predicted_drift = pred.drift;
  rep.orthogonal_component = rep.measured_step - pred.oscillation;
  rep.residual_norm = norm(rep.orthogonal_component - pred.drift);
  rep.remainder_budget = pred.remainder_budget;
  rep.within_budget = rep.residual_norm <= rep.remainder_budget + 1e-12;

  const Vec ascent = w_z + (s * (r + cfg.rho)) * q1;
  rep.surrogate_step = -cfg.eta * loss.gradient(ascent);
  rep.surrogate_residual = norm(rep.surrogate_step - pred.oscillation - pred.drift);
  return rep;
}

/// First recorded t with ‖v_t‖ ≤ b.
inline std::optional<std::uint64_t> first_ball_entry(const Trajectory& traj, double b) {
  for (const auto& r : traj.records()) {
    if (r.vnorm <= b) return r.t;
  }
  return std::nullopt;
}

/// |{t ≥ t0 : ‖v_t‖ ≥ (1 + eps)β₁}| over recorded steps.
inline std::uint64_t excursion_count(const Trajectory& traj, std::uint64_t t0, double beta1, double eps) {
  std::uint64_t n = 0;
  for (const auto& r : traj.records()) {
    if (r.t >= t0 && r.vnorm >= (1.0 + eps) * beta1) ++n;
  }
  return n;
}

struct SweepTally {
  std::uint64_t checked = 0;
  std::uint64_t skipped = 0;
  std::uint64_t failed = 0;
  bool ok() const noexcept { return failed == 0; }

  void add(std::optional<bool> outcome) {
    if (!outcome) {
      ++skipped;
    } else {
      ++checked;
      if (!*outcome) ++failed;
    }
  }
};

/// Per-step outcomes; nullopt means the step was not checkable (inside a
/// threshold margin, a zero component, or the hypothesis does not apply).
struct LemmaStep {
  std::uint64_t t = 0;
  std::optional<bool> ball;               // ‖v_t‖ ≤ b ⇒ ‖v_{t+1}‖ ≤ b
  std::optional<bool> contraction_iff;    // |v'_i| < |v_i| ⇔ ‖v‖ > β_i, all i
  std::optional<bool> ratio_iff;          // |v'_i/v'₁| < |v_i/v₁| ⇔ ‖v‖ < α_i, i ≥ 2
  std::optional<bool> ratio_contraction;  // all ratios shrink by (1+μ)² ⇔ ‖v‖/β₁ below the threshold
  std::optional<bool> first_component;    // v'₁ + sβ₁ = (1−ηλ₁)(v₁ − sβ₁ + sγ₁δ)
  std::optional<bool> descent;            // J step within the descent bound, J non-increasing
};

struct LemmaSweepReport {
  std::vector<LemmaStep> steps;
  SweepTally ball, contraction_iff, ratio_iff, ratio_contraction, first_component, descent;
  bool ok() const {
    return ball.ok() && contraction_iff.ok() && ratio_iff.ok() && ratio_contraction.ok() && first_component.ok() &&
           descent.ok();
  }
};

inline constexpr double threshold_margin = 1e-9;

namespace detail {

inline bool near(double x, double threshold) { return std::abs(x - threshold) <= threshold_margin * threshold; }

// Components this small have lost precision to gradual underflow; comparisons
// between them say nothing about the dynamics.
inline bool resolvable(double x) { return std::abs(x) >= 1e-290; }

}  // namespace detail

/// One step v → v' of the gradient recurrence checked against the one-step lemmas.
inline LemmaStep check_lemma_step(const TheoryConstants& c, const Vec& v, const Vec& vn,
                                  const std::optional<PotentialSpec>& pot = std::nullopt, const Vec* x = nullptr,
                                  const Vec* xn = nullptr) {
  LemmaStep out;
  const std::size_t d = v.dim();
  const double n = norm(v);
  const double nn = norm(vn);

  if (n <= c.b) out.ball = nn <= c.b * (1.0 + 1e-14);

  {
    bool any = false;
    bool all = true;
    for (std::size_t i = 0; i < d; ++i) {
      if (!detail::resolvable(v[i]) || detail::near(n, c.beta[i])) continue;
      any = true;
      all = all && ((std::abs(vn[i]) < std::abs(v[i])) == (n > c.beta[i]));
    }
    if (any) out.contraction_iff = all;
  }

  // Ratios |v_i/v₁| are compared directly; squaring them underflows long
  // before the components themselves do.
  if (!c.degenerate_gap && d > 1 && detail::resolvable(v[0]) && detail::resolvable(vn[0])) {
    auto ratio = [](const Vec& x, std::size_t i) { return std::abs(x[i]) / std::abs(x[0]); };
    bool any = false;
    bool all = true;
    for (std::size_t i = 1; i < d; ++i) {
      if (!detail::resolvable(v[i]) || !detail::resolvable(vn[i]) || detail::near(n, c.alpha[i])) continue;
      any = true;
      all = all && ((ratio(vn, i) < ratio(v, i)) == (n < c.alpha[i]));
    }
    if (any) out.ratio_iff = all;

    bool all_resolvable = true;
    for (std::size_t i = 1; i < d; ++i) {
      all_resolvable = all_resolvable && detail::resolvable(v[i]) && detail::resolvable(vn[i]);
    }
    const double thr = ratio_contraction_threshold(c);
    if (all_resolvable && !detail::near(n / c.beta1(), thr)) {
      bool shrink = true;
      for (std::size_t i = 1; i < d; ++i) shrink = shrink && (1.0 + c.mu) * ratio(vn, i) < ratio(v, i);
      out.ratio_contraction = shrink == (n / c.beta1() < thr);
    }
  }

  if (n > 0.0) {
    const int s = sign_of(v[0]);
    const double lhs = vn[0] + s * c.beta1();
    const double rhs = (1.0 - c.eta * c.lambda1()) * (v[0] - s * c.beta1() + s * c.gamma1() * delta_of(v));
    out.first_component = std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, n);
  }

  if (pot && x && xn && n > 0.0) {
    const DescentCheck dc = descent_check(*pot, *x, *xn);
    out.descent = dc.holds && dc.lhs <= 1e-12;
  }
  return out;
}

/// All one-step lemma checks over consecutive records of a quadratic trajectory.
inline LemmaSweepReport lemma_sweeps(const Trajectory& traj, const TheoryConstants& c) {
  const Spectrum& spectrum = traj.require_spectrum();
  const std::optional<PotentialSpec> pot = detail::potential_for(spectrum, traj.config());
  LemmaSweepReport rep;
  const auto& recs = traj.records();
  for (std::size_t k = 0; k + 1 < recs.size(); ++k) {
    if (recs[k + 1].t != recs[k].t + 1) continue;
    // u_t = (−1)ᵗ x_t and J is even, so the descent check may use x directly
    // provided consecutive signs alternate.
    const Vec x = recs[k].w - spectrum.center();
    const Vec xn = -(recs[k + 1].w - spectrum.center());
    LemmaStep st = check_lemma_step(c, recs[k].v, recs[k + 1].v, pot, &x, &xn);
    st.t = recs[k].t;
    rep.ball.add(st.ball);
    rep.contraction_iff.add(st.contraction_iff);
    rep.ratio_iff.add(st.ratio_iff);
    rep.ratio_contraction.add(st.ratio_contraction);
    rep.first_component.add(st.first_component);
    rep.descent.add(st.descent);
    rep.steps.push_back(std::move(st));
  }
  return rep;
}

}  // namespace samdyn
