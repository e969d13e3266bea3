#pragma once

// Experiment drivers behind the CLI subcommands. Each driver returns a plain
// result struct; the writers render it as CSV or as an aligned text summary.
// Output depends only on the inputs, never on thread scheduling.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "samdyn/dynamics.hpp"
#include "samdyn/error.hpp"
#include "samdyn/harness/init.hpp"
#include "samdyn/harness/parallel.hpp"
#include "samdyn/harness/rng.hpp"
#include "samdyn/losses.hpp"
#include "samdyn/potential.hpp"
#include "samdyn/sam.hpp"
#include "samdyn/theory.hpp"

namespace samdyn {

/// %.17g
inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

inline void finish_output(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

// ---------------------------------------------------------------- constants

inline constexpr std::array<double, 3> excursion_eps{0.1, 0.5, 1.0};

inline void write_constants_csv(std::ostream& out, const TheoryConstants& c,
                                const std::optional<Theorem3Bound>& bound, const std::string& bound_note) {
  out << "name,value\n";
  for (std::size_t i = 0; i < c.dim(); ++i) out << "lambda_" << i + 1 << ',' << fmt(c.lambdas[i]) << '\n';
  for (std::size_t i = 0; i < c.dim(); ++i) out << "gamma_" << i + 1 << ',' << fmt(c.gamma[i]) << '\n';
  for (std::size_t i = 0; i < c.dim(); ++i) out << "beta_" << i + 1 << ',' << fmt(c.beta[i]) << '\n';
  for (std::size_t i = 0; i < c.dim(); ++i) out << "alpha_" << i + 1 << ',' << fmt(c.alpha[i]) << '\n';
  out << "b," << fmt(c.b) << '\n';
  out << "mu," << fmt(c.mu) << '\n';
  out << "kappa," << fmt(c.kappa) << '\n';
  out << "fixed_point_radius," << fmt(c.fixed_point_radius) << '\n';
  out << "degenerate_gap," << (c.degenerate_gap ? 1 : 0) << '\n';
  out << "ordering_chain," << (ordering_chain_holds(c) ? 1 : 0) << '\n';
  if (bound) {
    for (std::size_t k = 0; k < bound->terms.size(); ++k) out << "theorem3_term_" << k + 1 << ',' << fmt(bound->terms[k]) << '\n';
    out << "theorem3_total," << fmt(bound->total) << '\n';
  } else {
    out << "theorem3_total,nan\n";
    out << "# theorem3: " << bound_note << '\n';
  }
}

// -------------------------------------------------------------------- bounds

struct BoundsReport {
  TheoryConstants constants;
  BoundInputs inputs;
  std::uint64_t early_descent = 0;
  std::array<double, 3> breakaway{};
  DeltaBound delta;
  double epsilon_ceiling = 0.0;
  Theorem3Bound theorem3;
};

inline BoundsReport compute_bounds(const Spectrum& spectrum, const SamConfig& cfg, const BoundInputs& in) {
  BoundsReport rep;
  rep.constants = constants(spectrum, cfg);
  rep.inputs = in;
  rep.early_descent = early_descent_time(rep.constants, in.R);
  for (std::size_t k = 0; k < excursion_eps.size(); ++k) rep.breakaway[k] = breakaway_bound(rep.constants, excursion_eps[k]);
  rep.delta = delta_lower_bound(rep.constants, in.R, in.A, in.delta);
  rep.epsilon_ceiling = epsilon_ceiling(rep.constants);
  rep.theorem3 = theorem3_bound(rep.constants, in);
  return rep;
}

inline void write_bounds_csv(std::ostream& out, const BoundsReport& r) {
  out << "name,value\n";
  out << "R," << fmt(r.inputs.R) << '\n';
  out << "q," << fmt(r.inputs.q) << '\n';
  out << "A," << fmt(r.inputs.A) << '\n';
  out << "delta," << fmt(r.inputs.delta) << '\n';
  out << "epsilon," << fmt(r.inputs.epsilon) << '\n';
  out << "epsilon_ceiling," << fmt(r.epsilon_ceiling) << '\n';
  out << "mu," << fmt(r.constants.mu) << '\n';
  out << "early_descent_time," << r.early_descent << '\n';
  for (std::size_t k = 0; k < excursion_eps.size(); ++k) {
    out << "breakaway_bound_eps_" << excursion_eps[k] << ',' << fmt(r.breakaway[k]) << '\n';
  }
  out << "delta_T0," << r.delta.t0 << '\n';
  out << "log_inv_Delta," << fmt(r.delta.log_inv_delta) << '\n';
  out << "log_inv_Delta_closed_form," << fmt(r.delta.log_inv_delta_closed) << '\n';
  out << "Delta," << fmt(r.delta.delta) << '\n';
  for (std::size_t k = 0; k < r.theorem3.terms.size(); ++k) {
    out << "theorem3_term_" << k + 1 << ',' << fmt(r.theorem3.terms[k]) << '\n';
  }
  out << "theorem3_total," << fmt(r.theorem3.total) << '\n';
}

// --------------------------------------------------------------------- cycle

struct CycleSettings {
  std::vector<double> lambdas{1.0, 0.5, 0.25};
  SamConfig cfg{0.4, 0.1};
  InitSpec init;
  double epsilon = 1e-8;
  std::size_t window = 16;
  std::uint64_t steps = 5000;
  double delta = 0.01;  // allowed failure probability; the pass condition tolerates 2δ
  std::size_t workers = 1;
  RunOptions run;
};

struct TrialSummary {
  std::uint64_t trial = 0;
  CycleReport cycle;
  std::optional<std::uint64_t> first_ball_entry;
  std::uint64_t early_descent_time = 0;
  std::array<std::uint64_t, 3> excursions{};
  std::array<double, 3> breakaway{};
  double theorem3 = 0.0;  // NaN when the bound is unavailable
  bool within_R = false;
  bool above_q = false;
  double A = 0.0;
  bool ball_entry_ok = true;   // entered by the early-descent time (only required when ‖x₀‖ ≤ R)
  bool excursions_ok = true;
  bool within_theorem3 = false;
  LemmaSweepReport sweeps;     // steps dropped after summarizing
  bool delta_bound_ok = true;
  std::optional<TrajectoryHalt> halt;

  bool invariants_ok() const { return ball_entry_ok && excursions_ok && sweeps.ok() && delta_bound_ok && !halt; }
};

struct CycleResult {
  CycleSettings settings;
  TheoryConstants constants;
  std::optional<Theorem3Bound> theorem3;
  std::string theorem3_note;
  std::vector<TrialSummary> trials;
  std::vector<Trajectory> trajectories;  // filled only when requested

  std::size_t converged() const {
    std::size_t n = 0;
    for (const auto& t : trials) n += t.cycle.converged ? 1 : 0;
    return n;
  }
  std::size_t within_bound() const {
    std::size_t n = 0;
    for (const auto& t : trials) n += t.within_theorem3 ? 1 : 0;
    return n;
  }
  bool invariants_ok() const {
    for (const auto& t : trials) {
      if (!t.invariants_ok()) return false;
    }
    return true;
  }
  bool convergence_ok() const {
    const double failed = static_cast<double>(trials.size() - converged());
    return failed <= 2.0 * settings.delta * static_cast<double>(trials.size()) + 1e-9;
  }
  bool ok() const { return invariants_ok() && convergence_ok(); }
};

inline TrialSummary summarize_trial(const Trajectory& traj, const TheoryConstants& c, const CycleSettings& s,
                                    const InitDraw& draw, std::uint64_t trial, double theorem3) {
  TrialSummary out;
  out.trial = trial;
  out.cycle = detect_cycle(traj, s.epsilon, s.window);
  out.first_ball_entry = first_ball_entry(traj, c.b);
  out.early_descent_time = early_descent_time(c, s.init.R);
  out.within_R = draw.within_R;
  out.above_q = draw.above_q;
  out.A = draw.A;
  if (draw.within_R) {
    out.ball_entry_ok = out.first_ball_entry && *out.first_ball_entry <= out.early_descent_time;
  }
  for (std::size_t k = 0; k < excursion_eps.size(); ++k) {
    out.breakaway[k] = breakaway_bound(c, excursion_eps[k]);
    if (out.first_ball_entry) {
      out.excursions[k] = excursion_count(traj, *out.first_ball_entry, c.beta1(), excursion_eps[k]);
      out.excursions_ok = out.excursions_ok && static_cast<double>(out.excursions[k]) <= out.breakaway[k];
    }
  }
  out.theorem3 = theorem3;
  out.within_theorem3 = out.cycle.converged && std::isfinite(theorem3) &&
                        static_cast<double>(*out.cycle.t_conv) <= theorem3;
  out.sweeps = lemma_sweeps(traj, c);
  out.sweeps.steps.clear();
  out.delta_bound_ok = delta_bound_check(traj);
  out.halt = traj.halt();
  return out;
}

inline CycleResult run_cycle_experiment(const CycleSettings& s, bool keep_trajectories = false) {
  const Spectrum spectrum = Spectrum::positive(s.lambdas);
  CycleResult res;
  res.settings = s;
  res.constants = constants(spectrum, s.cfg);
  s.init.validate();
  const double A = density_bound(s.init, spectrum.dim());
  try {
    res.theorem3 = theorem3_bound(res.constants, {s.init.R, s.init.q, A, s.delta, s.epsilon});
  } catch (const Error& e) {
    res.theorem3_note = e.what();
  }
  const double bound = res.theorem3 ? res.theorem3->total : std::nan("");
  const QuadraticLoss loss(spectrum);

  struct Item {
    TrialSummary summary;
    std::optional<Trajectory> traj;
  };
  auto items = parallel_map(static_cast<std::size_t>(s.init.trials), s.workers, [&](std::size_t k) {
    const InitDraw draw = sample_init(s.init, k, spectrum.center());
    RunOptions opts = s.run;
    opts.seed = s.init.seed;
    Trajectory traj = run(loss, draw.w0, s.cfg, s.steps, opts);
    Item item{summarize_trial(traj, res.constants, s, draw, k, bound), std::nullopt};
    if (keep_trajectories) item.traj = std::move(traj);
    return item;
  });
  for (auto& it : items) {
    res.trials.push_back(std::move(it.summary));
    if (it.traj) res.trajectories.push_back(std::move(*it.traj));
  }
  return res;
}

inline void write_trials_csv(std::ostream& out, const CycleResult& r) {
  out << "trial,converged,T_conv,amplitude_error,sign_phase,first_ball_entry,early_descent_time,"
         "excursions_0.1,excursions_0.5,excursions_1,breakaway_0.1,breakaway_0.5,breakaway_1,theorem3_bound,"
         "within_theorem3,within_R,above_q,ball,contraction_iff,ratio_iff,ratio_contraction,first_component,"
         "descent,delta_bound,halted\n";
  auto flag = [](bool b) { return b ? "1" : "0"; };
  for (const auto& t : r.trials) {
    out << t.trial << ',' << flag(t.cycle.converged) << ',';
    if (t.cycle.t_conv) out << *t.cycle.t_conv;
    out << ',' << fmt(t.cycle.amplitude_error) << ',' << t.cycle.sign_phase << ',';
    if (t.first_ball_entry) out << *t.first_ball_entry;
    out << ',' << t.early_descent_time;
    for (auto n : t.excursions) out << ',' << n;
    for (auto b : t.breakaway) out << ',' << fmt(b);
    out << ',' << fmt(t.theorem3) << ',' << flag(t.within_theorem3) << ',' << flag(t.within_R) << ','
        << flag(t.above_q) << ',' << flag(t.sweeps.ball.ok()) << ',' << flag(t.sweeps.contraction_iff.ok()) << ','
        << flag(t.sweeps.ratio_iff.ok()) << ',' << flag(t.sweeps.ratio_contraction.ok()) << ','
        << flag(t.sweeps.first_component.ok()) << ',' << flag(t.sweeps.descent.ok()) << ','
        << flag(t.delta_bound_ok) << ',' << flag(t.halt.has_value()) << '\n';
  }
}

inline void write_cycle_summary(std::ostream& out, const CycleResult& r) {
  const auto& s = r.settings;
  const std::size_t n = r.trials.size();
  std::size_t ball_fail = 0, exc_fail = 0, sweep_fail = 0, halted = 0;
  for (const auto& t : r.trials) {
    ball_fail += t.ball_entry_ok ? 0 : 1;
    exc_fail += t.excursions_ok ? 0 : 1;
    sweep_fail += (t.sweeps.ok() && t.delta_bound_ok) ? 0 : 1;
    halted += t.halt ? 1 : 0;
  }
  out << "trials              " << n << '\n';
  out << "steps               " << s.steps << '\n';
  out << "eta                 " << fmt(s.cfg.eta) << '\n';
  out << "rho                 " << fmt(s.cfg.rho) << '\n';
  out << "epsilon             " << fmt(s.epsilon) << '\n';
  out << "cycle amplitude     " << fmt(cycle_amplitude(r.constants.lambda1(), s.cfg)) << '\n';
  out << "converged           " << r.converged() << '/' << n << '\n';
  out << "allowed failures    " << fmt(2.0 * s.delta * static_cast<double>(n)) << '\n';
  if (r.theorem3) {
    out << "theorem3 bound      " << fmt(r.theorem3->total) << '\n';
    out << "within bound        " << r.within_bound() << '/' << n << '\n';
  } else {
    out << "theorem3 bound      unavailable (" << r.theorem3_note << ")\n";
  }
  out << "ball entry late     " << ball_fail << '\n';
  out << "excursion overruns  " << exc_fail << '\n';
  out << "sweep failures      " << sweep_fail << '\n';
  out << "halted              " << halted << '\n';
  out << "result              " << (r.ok() ? "PASS" : "FAIL") << '\n';
}

// --------------------------------------------------------------------- drift

inline void write_drift_csv(std::ostream& out, const DriftReport& r, LossFamily family) {
  const std::size_t d = r.measured_step.dim();
  out << "quantity";
  for (std::size_t i = 1; i <= d; ++i) out << ",e_" << i;
  out << '\n';
  auto row = [&](const char* name, const Vec& v) {
    out << name;
    for (std::size_t i = 0; i < d; ++i) out << ',' << fmt(v[i]);
    out << '\n';
  };
  row("oscillation_point", r.oscillation_point);
  row("measured_step", r.measured_step);
  row("predicted_oscillation", r.predicted_oscillation);
  row("orthogonal_component", r.orthogonal_component);
  row("predicted_drift", r.predicted_drift);
  row("grad_lambda_max", r.grad_lambda_max);
  row("surrogate_step", r.surrogate_step);
  out << "# loss " << to_string(family) << '\n';
  out << "# lambda1 " << fmt(r.lambda1) << '\n';
  out << "# B " << fmt(r.lipschitz_b) << '\n';
  out << "# residual_norm " << fmt(r.residual_norm) << '\n';
  out << "# remainder_budget " << fmt(r.remainder_budget) << '\n';
  out << "# surrogate_residual " << fmt(r.surrogate_residual) << '\n';
  out << "# within_budget " << (r.within_budget ? 1 : 0) << '\n';
}

// ----------------------------------------------------------- potential-check

struct CheckRow {
  std::string name;
  std::uint64_t checked = 0;
  std::uint64_t failed = 0;
  double max_error = 0.0;
  double tolerance = 0.0;

  void record(double err, bool pass) {
    ++checked;
    if (!pass) ++failed;
    if (std::isfinite(err)) max_error = std::max(max_error, err);
  }
  bool ok() const { return failed == 0; }
};

struct PotentialCheckReport {
  std::vector<CheckRow> rows;
  bool ok() const {
    for (const auto& r : rows) {
      if (!r.ok()) return false;
    }
    return true;
  }
};

// Second differences of J lose about ε·|J|/h² to rounding, too much at 1e-5.
inline constexpr double hessian_fd_step = 1e-4;

/// Cross-validates the potential against finite differences, its closed-form
/// stationary points and inertia, and the SAM step on random states.
inline PotentialCheckReport potential_check(const Spectrum& spectrum, const SamConfig& cfg, std::uint64_t samples,
                                            std::uint64_t seed) {
  const PotentialSpec spec(spectrum, cfg);
  const std::size_t d = spec.dim();
  const SymMat c = spec.c_matrix();
  const double c_max = lambda_max(c);
  const double fp = spec.beta()[0] / spec.lambda(0);
  CounterRng rng(seed, 0);
  auto random_u = [&](double scale) {
    Vec u(d);
    for (std::size_t i = 0; i < d; ++i) u[i] = scale * rng.normal();
    return u;
  };
  auto J = [&](const Vec& u) { return potential_J(spec, u); };

  CheckRow grad{"grad_J vs central differences", 0, 0, 0.0, 1e-6};
  CheckRow hess{"hess_J vs finite differences", 0, 0, 0.0, 1e-5};
  CheckRow forms{"J display vs matrix form", 0, 0, 0.0, 1e-12};
  CheckRow upper{"lambda_max(hess_J) <= lambda_max(C)", 0, 0, 0.0, 1e-12};
  CheckRow equiv{"SAM step == u - eta*rho*grad_J", 0, 0, 0.0, 1e-12};
  CheckRow descent{"J descent bound", 0, 0, 0.0, 1e-12};
  CheckRow breakaway{"J decrease above (1+eps)beta_1", 0, 0, 0.0, 0.0};
  for (std::uint64_t k = 0; k < samples; ++k) {
    const Vec u = random_u(1.0);
    const Vec g = grad_J(spec, u);
    const double eg = relative_error(fd_gradient(J, u), g);
    grad.record(eg, eg <= grad.tolerance);
    const SymMat h = hess_J(spec, u);
    const double eh = relative_error(fd_hessian(J, u, hessian_fd_step), h);
    hess.record(eh, eh <= hess.tolerance);
    const double ef = std::abs(potential_J_matrix_form(spec, u) - J(u)) / std::max(1.0, std::abs(J(u)));
    forms.record(ef, ef <= forms.tolerance);
    const double over = lambda_max(h) - c_max;
    upper.record(std::max(over, 0.0) / c_max, over <= upper.tolerance * c_max);

    // A state near the cycle scale so the nonlinear part of the step matters.
    const Vec x = random_u(fp * (0.5 + 2.0 * rng.uniform()));
    const Vec xn = sam_step_quadratic(spectrum, x + spectrum.center(), cfg) - spectrum.center();
    const Vec un = -xn;
    const double ee = norm(un - potential_step(spec, x)) / std::max(1.0, norm(x));
    equiv.record(ee, ee <= equiv.tolerance);
    const DescentCheck dc = descent_check(spec, x, un);
    descent.record(std::max(dc.lhs - dc.rhs, 0.0), dc.holds);
  }

  const TheoryConstants tc = (cfg.eta * spectrum.lambda_max() < 0.5) ? constants(spectrum, cfg) : TheoryConstants{};
  if (tc.dim() > 0) {
    for (double eps : {0.1, 0.5}) {
      const double lo = (1.0 + eps) * tc.beta1();
      if (!(lo < tc.b)) continue;
      for (std::uint64_t k = 0; k < samples; ++k) {
        Vec dir = random_u(1.0);
        dir /= norm(dir);
        const Vec v = (lo + (tc.b - lo) * rng.uniform()) * dir;
        const Vec x = w_of_v(spectrum, v) - spectrum.center();
        const Vec un = -(sam_step_quadratic(spectrum, x + spectrum.center(), cfg) - spectrum.center());
        const double need = breakaway_decrease(tc, eps);
        const double got = J(x) - J(un);
        breakaway.record(std::max(need - got, 0.0), got >= need * (1.0 - 1e-12));
      }
    }
  }

  CheckRow stationary{"catalog points stationary", 0, 0, 0.0, 1e-12};
  CheckRow inertia{"catalog inertia", 0, 0, 0.0, 0.0};
  CheckRow closed{"catalog hessian closed form", 0, 0, 0.0, 1e-10};
  CheckRow minimum{"J at global minima == -beta_1/2", 0, 0, 0.0, 1e-12};
  const double zero_tol = 1e-9 * c.frobenius_norm();
  for (const auto& p : stationary_catalog(spec)) {
    const double gs = norm(grad_J(spec, p.location)) / spec.gradient_scale();
    stationary.record(gs, gs <= stationary.tolerance);
    const SymMat h = hess_J(spec, p.location);
    inertia.record(0.0, measured_inertia(h, zero_tol) == p.inertia);
    const double ec = relative_error(h, stationary_hessian(spec, p.index));
    closed.record(ec, ec <= closed.tolerance);
    if (p.global_minimum) {
      const double em = std::abs(J(p.location) + 0.5 * spec.beta()[0]);
      minimum.record(em, em <= minimum.tolerance * std::max(1.0, spec.beta()[0]));
    }
  }

  PotentialCheckReport rep;
  rep.rows = {grad, hess, forms, upper, equiv, descent, breakaway, stationary, inertia, closed, minimum};
  return rep;
}

inline void write_potential_check_csv(std::ostream& out, const PotentialCheckReport& r) {
  out << "check,checked,failed,max_error,tolerance,result\n";
  for (const auto& row : r.rows) {
    out << row.name << ',' << row.checked << ',' << row.failed << ',' << fmt(row.max_error) << ','
        << fmt(row.tolerance) << ',' << (row.ok() ? "pass" : "FAIL") << '\n';
  }
}

}  // namespace samdyn
