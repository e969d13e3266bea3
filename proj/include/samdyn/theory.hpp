#pragma once

// Closed-form constants and bounds for SAM on ℓ(w) = ½(w−z)ᵀΛ(w−z), plus the
// one-step drift prediction at the oscillation point of a smooth minimum.
// The bounds are transcribed as stated; they are extremely loose, and the
// large ones are evaluated in log space.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>

#include "samdyn/error.hpp"
#include "samdyn/losses.hpp"
#include "samdyn/numerics.hpp"
#include "samdyn/sam.hpp"

namespace samdyn {

struct TheoryConstants {
  double eta = 0.0;
  double rho = 0.0;
  Vec lambdas;
  Vec gamma;  // ηρλ_i²/(1 − ηλ_i)
  Vec beta;   // ηρλ_i²/(2 − ηλ_i)
  Vec alpha;  // ((1−ηλ₁)γ₁ + (1−ηλ_i)γ_i) / ((1−ηλ₁) + (1−ηλ_i))
  double b = 0.0;      // ηρλ₁², radius of the absorbing gradient ball
  double mu = 0.0;     // min{ηλ_d, λ₁²/λ₂² − 1}; ηλ_d when λ₁ = λ₂
  double kappa = 0.0;  // λ₁/λ_d
  double fixed_point_radius = 0.0;  // β₁/λ₁ = ηρλ₁/(2 − ηλ₁)
  bool degenerate_gap = false;      // λ₁ = λ₂: the ratio term is dropped from μ

  std::size_t dim() const noexcept { return lambdas.dim(); }
  double lambda1() const { return lambdas[0]; }
  double lambda_d() const { return lambdas[dim() - 1]; }
  double beta1() const { return beta[0]; }
  double beta_d() const { return beta[dim() - 1]; }
  double gamma1() const { return gamma[0]; }
  SamConfig config() const { return {eta, rho}; }
};

inline TheoryConstants constants(const Spectrum& spectrum, const SamConfig& cfg) {
  require_theorem_step_size(cfg, spectrum.lambda_max());
  if (!spectrum.is_positive()) throw SingularSpectrum("constants need lambda_d > 0");

  const std::size_t d = spectrum.dim();
  const double eta = cfg.eta;
  TheoryConstants c;
  c.eta = eta;
  c.rho = cfg.rho;
  c.lambdas = spectrum.eigenvalues();
  c.gamma = Vec(d);
  c.beta = Vec(d);
  c.alpha = Vec(d);
  for (std::size_t i = 0; i < d; ++i) {
    c.gamma[i] = gamma_i(spectrum[i], cfg);
    c.beta[i] = beta_i(spectrum[i], cfg);
  }
  const double a1 = 1.0 - eta * spectrum[0];
  for (std::size_t i = 0; i < d; ++i) {
    const double ai = 1.0 - eta * spectrum[i];
    c.alpha[i] = (a1 * c.gamma[0] + ai * c.gamma[i]) / (a1 + ai);
  }
  c.b = eta * cfg.rho * spectrum[0] * spectrum[0];
  c.kappa = spectrum[0] / spectrum.lambda_min();
  c.fixed_point_radius = c.beta[0] / spectrum[0];
  c.degenerate_gap = !spectrum.has_gap();
  c.mu = eta * spectrum.lambda_min();
  if (!c.degenerate_gap && d > 1) c.mu = std::min(c.mu, spectrum[0] * spectrum[0] / (spectrum[1] * spectrum[1]) - 1.0);
  return c;
}

/// β_d ≤ … ≤ β₁ ≤ α_d ≤ … ≤ α₂ ≤ α₁ = γ₁, β₁ ≤ b, and β₁ < α_d.
inline bool ordering_chain_holds(const TheoryConstants& c) {
  constexpr double slack = 1e-14;
  auto le = [](double x, double y) { return x <= y + slack * std::max(std::abs(x), std::abs(y)); };
  const std::size_t d = c.dim();
  for (std::size_t i = 1; i < d; ++i) {
    if (!le(c.beta[i], c.beta[i - 1])) return false;
    if (!le(c.alpha[i], c.alpha[i - 1])) return false;
  }
  if (!le(c.beta[0], c.alpha[d - 1])) return false;
  if (std::abs(c.alpha[0] - c.gamma[0]) > 1e-12 * c.gamma[0]) return false;
  if (!le(c.beta[0], c.b)) return false;
  return c.beta[0] < c.alpha[d - 1];
}

/// Amplitude ηρλ₁/(2 − ηλ₁) of the limiting two-cycle in w-space.
inline double cycle_amplitude(double lambda1, const SamConfig& cfg) {
  return cfg.eta * cfg.rho * lambda1 / (2.0 - cfg.eta * lambda1);
}

inline double positive_part(double z) { return std::max(z, 0.0); }

/// ⌈[log(λ₁R/b)]₊/(ηλ_d)⌉ for a w-space radius R (so ‖v₀‖ ≤ λ₁R).
inline std::uint64_t early_descent_time(const TheoryConstants& c, double R) {
  if (!(R > 0.0)) throw InvalidArgument("R must be positive");
  const double t = positive_part(std::log(c.lambda1() * R / c.b)) / (c.eta * c.lambda_d());
  return static_cast<std::uint64_t>(std::ceil(t));
}

/// 3β₁/(η ε² λ₁ β_d): cap on the number of steps after entering the ball with ‖v_t‖ ≥ (1+ε)β₁.
inline double breakaway_bound(const TheoryConstants& c, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  return 3.0 * c.beta1() / (c.eta * eps * eps * c.lambda1() * c.beta_d());
}

/// (1/ηρ)-free J decrease guaranteed by a step with ‖v_t‖ ≥ (1+ε)β₁: ηε²λ₁β₁/2.
inline double breakaway_decrease(const TheoryConstants& c, double eps) {
  return c.eta * eps * eps * c.lambda1() * c.beta1() / 2.0;
}

/// Surface area of the unit (d−1)-sphere, 2π^{d/2}/Γ(d/2).
inline double sphere_surface_factor(std::size_t d) {
  const double half = 0.5 * static_cast<double>(d);
  return 2.0 * std::exp(half * std::log(std::numbers::pi) - std::lgamma(half));
}

struct DeltaBound {
  std::uint64_t t0 = 0;
  double log_inv_delta = 0.0;       // exact log(1/Δ) at this t0
  double delta = 0.0;               // exp(−log_inv_delta); may underflow to 0
  double log_inv_delta_closed = 0.0;  // upper bound with t0 replaced by [log(λ₁R/b)]₊/(ηλ_d)
};

/// Lower bound Δ on |‖v_t‖ − γ₁| holding with probability 1 − 2δ:
///   Δ = Γ(d/2)δ / (4π^{d/2}(2γ₁)^{d−1} T₀ A) · ((ηλ_d)^{d+3}γ₁³ / (9·6^{d+3}R_v³))^{T₀}
/// where R_v = λ₁R is the gradient-space radius and T₀ defaults to
/// early_descent_time(R). If T₀ = 0 the iterate starts inside the absorbing
/// ball, where ‖v_t‖ ≤ b = γ₁ − ηλ₁γ₁ forever, and Δ = γ₁ − b.
inline DeltaBound delta_lower_bound(const TheoryConstants& c, double R, double A, double delta,
                                    std::optional<std::uint64_t> t0 = std::nullopt) {
  if (!(R > 0.0) || !(A > 0.0) || !(delta > 0.0)) throw InvalidArgument("R, A and delta must be positive");
  const double d = static_cast<double>(c.dim());
  const double rv = c.lambda1() * R;
  const double eld = c.eta * c.lambda_d();
  const double g1 = c.gamma1();

  DeltaBound out;
  out.t0 = t0.value_or(early_descent_time(c, R));
  const double log_base = (d + 3.0) * std::log(eld) + 3.0 * std::log(g1) - std::log(9.0) -
                          (d + 3.0) * std::log(6.0) - 3.0 * std::log(rv);
  auto log_prefactor = [&](double t) {
    return std::lgamma(d / 2.0) + std::log(delta) - std::log(4.0) - (d / 2.0) * std::log(std::numbers::pi) -
           (d - 1.0) * std::log(2.0 * g1) - std::log(t) - std::log(A);
  };

  if (out.t0 == 0) {
    out.delta = g1 - c.b;
    out.log_inv_delta = -std::log(out.delta);
  } else {
    const double t = static_cast<double>(out.t0);
    out.log_inv_delta = -(log_prefactor(t) + t * log_base);
    out.delta = std::exp(-out.log_inv_delta);
  }

  const double t_cont = positive_part(std::log(rv / c.b)) / eld;
  out.log_inv_delta_closed = t_cont > 0.0 ? -(log_prefactor(t_cont) + t_cont * log_base) : out.log_inv_delta;
  return out;
}

/// The same Δ by direct floating-point evaluation (no logs); underflows for
/// realistic inputs. Used to cross-check the log-space route.
inline double delta_lower_bound_direct(const TheoryConstants& c, double R, double A, double delta,
                                       std::uint64_t t0) {
  const double d = static_cast<double>(c.dim());
  const double rv = c.lambda1() * R;
  const double eld = c.eta * c.lambda_d();
  const double g1 = c.gamma1();
  if (t0 == 0) return g1 - c.b;
  const double t = static_cast<double>(t0);
  const double prefactor = std::tgamma(d / 2.0) * delta /
                           (4.0 * std::pow(std::numbers::pi, d / 2.0) * std::pow(2.0 * g1, d - 1.0) * t * A);
  const double base = std::pow(eld, d + 3.0) * g1 * g1 * g1 / (9.0 * std::pow(6.0, d + 3.0) * rv * rv * rv);
  return prefactor * std::pow(base, t);
}

struct BoundInputs {
  double R = 1.0;        // ‖w₀‖ ≤ R with high probability
  double q = 0.01;       // w₀₁² ≥ q with high probability
  double A = 1.0;        // density bound of the initialization
  double delta = 0.1;    // failure probability
  double epsilon = 1e-4; // target accuracy in w-space
};

/// min{√(ηλ₁/2), 1/(2ρλ₁), ηρλ₁²/2}; ε must lie strictly below it.
inline double epsilon_ceiling(const TheoryConstants& c) {
  const double l1 = c.lambda1();
  return std::min({std::sqrt(c.eta * l1 / 2.0), 1.0 / (2.0 * c.rho * l1), c.eta * c.rho * l1 * l1 / 2.0});
}

struct Theorem3Bound {
  std::array<double, 4> terms{};
  double total = 0.0;
};

/// Iteration count after which SAM on a quadratic is within ε of the two-cycle,
/// with probability 1 − 2δ. The four reported terms are, in order: the
/// log(4/ηλ₁) transient, the accuracy/initialization logs, the early-descent
/// contribution, and the final one-dimensional contraction.
inline Theorem3Bound theorem3_bound(const TheoryConstants& c, const BoundInputs& in) {
  if (c.degenerate_gap) throw SpectralGapRequired("bound requires lambda1 > lambda2");
  if (!(in.R > 0.0) || !(in.q > 0.0) || !(in.A > 0.0) || !(in.delta > 0.0) || !(in.epsilon > 0.0)) {
    throw InvalidArgument("R, q, A, delta and epsilon must be positive");
  }
  const double ceiling = epsilon_ceiling(c);
  if (!(in.epsilon < ceiling)) {
    throw EpsilonOutOfRange("epsilon " + std::to_string(in.epsilon) + " must be below " + std::to_string(ceiling));
  }

  const double d = static_cast<double>(c.dim());
  const double eta = c.eta;
  const double rho = c.rho;
  const double l1 = c.lambda1();
  const double ld = c.lambda_d();
  const double mu = c.mu;
  const double eld = eta * ld;
  const double erl1 = eta * rho * l1;
  const double erl1sq = eta * rho * l1 * l1;

  Theorem3Bound out;
  out.terms[0] = 6.0 * std::pow(l1, 5) / (eta * std::pow(ld, 6) * mu) * std::log(4.0 / (eta * l1));
  out.terms[1] = (std::log(4.0 * (1.0 + erl1sq) * (1.0 + erl1sq) / (ld * ld * in.epsilon * in.epsilon)) +
                  std::log(in.R * in.R / in.q)) /
                 mu;

  const double L = positive_part(std::log(in.R / erl1));
  if (L > 0.0) {
    const double log_growth = std::log(9.0) + (d + 3.0) * std::log(6.0) + 3.0 * std::log(in.R) -
                              (d + 3.0) * std::log(eld) - 3.0 * std::log(erl1);
    const double log_density = std::log(4.0) + (d / 2.0) * std::log(std::numbers::pi) +
                               (d - 1.0) * std::log(4.0 * erl1sq) + std::log(L) + std::log(in.A) -
                               std::lgamma(d / 2.0) - std::log(in.delta) - std::log(eld);
    out.terms[2] = 2.0 * L / (eld * mu) * (std::log(2.0 * l1 * in.R) + L * log_growth / eld + log_density);
  }
  out.terms[3] = 6.0 / (eta * l1) * std::log(2.0 * (1.0 + erl1sq) / (ld * in.epsilon));
  out.total = out.terms[0] + out.terms[1] + out.terms[2] + out.terms[3];
  return out;
}

/// ‖v‖/β₁ threshold below which every non-leading component ratio shrinks by (1+μ)²:
/// (2−ηλ₁)/((2−ηλ₁) − (ηλ_d−μ) − ηλ_dμ) · (1 + (1+μ)λ_d²/λ₁²).
inline double ratio_contraction_threshold(const TheoryConstants& c) {
  const double two = 2.0 - c.eta * c.lambda1();
  const double eld = c.eta * c.lambda_d();
  const double ratio = c.lambda_d() / c.lambda1();
  return two / (two - (eld - c.mu) - eld * c.mu) * (1.0 + (1.0 + c.mu) * ratio * ratio);
}

/// (ηρ²/2)(1 + ηλ₁/(2 − ηλ₁))²
inline double drift_coefficient(double lambda1, const SamConfig& cfg) {
  const double f = 1.0 + cfg.eta * lambda1 / (2.0 - cfg.eta * lambda1);
  return 0.5 * cfg.eta * cfg.rho * cfg.rho * f * f;
}

/// (η/2)(β₁/λ₁ + ρ)², algebraically equal to drift_coefficient.
inline double drift_coefficient_from_beta(double lambda1, const SamConfig& cfg) {
  const double r = beta_i(lambda1, cfg) / lambda1 + cfg.rho;
  return 0.5 * cfg.eta * r * r;
}

struct DriftPrediction {
  Vec oscillation;          // −2ηρλ₁s/(2−ηλ₁) · q₁
  Vec drift;                // −coefficient · ∇λmax
  double remainder_budget;  // ηρ²((1+ηλ₁)³ρ/6 + 2(2λ₁+Bρ)η) B
};

/// Predicted SAM step from w_z + s(β₁/λ₁)q₁ at a minimum with leading Hessian
/// eigenpair (λ₁, q₁). Requires Bηρ ≤ 1 and ηλ₁ < 1/2.
inline DriftPrediction drift_prediction(double lambda1, const SamConfig& cfg, const Vec& grad_lmax, int s, double B,
                                        std::optional<Vec> leading_direction = std::nullopt) {
  cfg.validate();
  if (s != 1 && s != -1) throw InvalidArgument("phase s must be +1 or -1");
  if (!(B >= 0.0)) throw DriftHypothesisViolated("Lipschitz constant B must be known and non-negative");
  if (B * cfg.eta * cfg.rho > 1.0) throw DriftHypothesisViolated("B*eta*rho exceeds 1");
  if (!(lambda1 > 0.0) || !(cfg.eta * lambda1 < 0.5)) throw DriftHypothesisViolated("requires 0 < eta*lambda1 < 1/2");
  const Vec q1 = leading_direction.value_or(Vec::basis(grad_lmax.dim(), 0));
  if (q1.dim() != grad_lmax.dim()) throw DimError("leading direction and gradient dimensions differ");

  const double eta = cfg.eta;
  const double rho = cfg.rho;
  DriftPrediction out;
  out.oscillation = (-2.0 * s * cycle_amplitude(lambda1, cfg)) * q1;
  out.drift = -drift_coefficient(lambda1, cfg) * grad_lmax;
  const double one_plus = 1.0 + eta * lambda1;
  out.remainder_budget =
      eta * rho * rho * (one_plus * one_plus * one_plus * rho / 6.0 + 2.0 * (2.0 * lambda1 + B * rho) * eta) * B;
  return out;
}

}  // namespace samdyn
