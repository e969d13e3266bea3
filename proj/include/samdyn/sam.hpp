#pragma once

// The SAM update
//   w ← w − η ∇ℓ(w + ρ ∇ℓ(w)/‖∇ℓ(w)‖)
// for any loss oracle, its closed form on a quadratic, and the coordinate
// changes v = Λ(w − z) (the gradient) and u_t = (−1)ᵗ w_t.

#include <cmath>
#include <string>

#include "samdyn/error.hpp"
#include "samdyn/losses.hpp"
#include "samdyn/numerics.hpp"

namespace samdyn {

struct SamConfig {
  double eta = 0.1;           // step size
  double rho = 0.05;          // ascent radius
  double grad_floor = 1e-300; // gradient norms at or below this are treated as zero

  void validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("eta must be positive");
    if (!(rho >= 0.0) || !std::isfinite(rho)) throw InvalidArgument("rho must be non-negative");
    if (!(grad_floor >= 0.0)) throw InvalidArgument("grad_floor must be non-negative");
  }
};

/// The quadratic convergence results assume 0 < η < 1/(2λ₁) and ρ > 0.
inline void require_theorem_step_size(const SamConfig& cfg, double lambda1) {
  cfg.validate();
  if (!(cfg.rho > 0.0)) throw InvalidArgument("rho must be positive");
  if (!(cfg.eta * lambda1 < 0.5)) {
    throw StepSizeTooLarge("eta*lambda1 = " + std::to_string(cfg.eta * lambda1) + " must be below 1/2");
  }
}

struct SamState {
  Vec w;
  std::size_t t = 0;
};

/// sign(x) ∈ {−1, 0, +1}
inline int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

template <LossOracle L>
Vec sam_step(const L& loss, const Vec& w, const SamConfig& cfg) {
  const Vec g = loss.gradient(w);
  const double gnorm = norm(g);
  if (!(gnorm > cfg.grad_floor)) {
    throw SamUndefined("gradient norm " + std::to_string(gnorm) + " is at or below the floor");
  }
  return w - cfg.eta * loss.gradient(w + (cfg.rho / gnorm) * g);
}

template <LossOracle L>
SamState advance(const L& loss, const SamState& state, const SamConfig& cfg) {
  return {sam_step(loss, state.w, cfg), state.t + 1};
}

/// (I − ηΛ − (ηρ/‖Λx‖)Λ²) x with x = w − z.
inline Vec sam_step_quadratic(const Spectrum& spectrum, const Vec& w, const SamConfig& cfg) {
  spectrum.require_dim(w);
  Vec x = w - spectrum.center();
  const double vnorm = norm(spectrum.apply(x));
  if (!(vnorm > cfg.grad_floor)) {
    throw SamUndefined("gradient norm " + std::to_string(vnorm) + " is at or below the floor");
  }
  for (std::size_t i = 0; i < x.dim(); ++i) {
    const double lam = spectrum[i];
    x[i] *= 1.0 - cfg.eta * lam - cfg.eta * cfg.rho * lam * lam / vnorm;
  }
  return x + spectrum.center();
}

/// v = ∇ℓ(w) = Λ(w − z)
inline Vec v_of(const Spectrum& spectrum, const Vec& w) {
  spectrum.require_dim(w);
  return spectrum.apply(w - spectrum.center());
}

inline Vec w_of_v(const Spectrum& spectrum, const Vec& v) {
  spectrum.require_dim(v);
  if (!spectrum.is_positive()) throw SingularSpectrum("cannot invert a spectrum with a zero eigenvalue");
  Vec w = v;
  for (std::size_t i = 0; i < v.dim(); ++i) w[i] /= spectrum[i];
  return w + spectrum.center();
}

/// u_t = (−1)ᵗ w
inline Vec u_of(const Vec& w, std::size_t t) { return (t % 2 == 0) ? w : -w; }

/// γ_i = ηρλ_i²/(1 − ηλ_i)
inline double gamma_i(double lambda, const SamConfig& cfg) {
  return cfg.eta * cfg.rho * lambda * lambda / (1.0 - cfg.eta * lambda);
}

/// β_i = ηρλ_i²/(2 − ηλ_i)
inline double beta_i(double lambda, const SamConfig& cfg) {
  return cfg.eta * cfg.rho * lambda * lambda / (2.0 - cfg.eta * lambda);
}

/// The gradient-space recurrence v'_i = (1 − ηλ_i)(‖v‖ − γ_i) v_i / ‖v‖.
inline Vec v_recurrence_step(const Spectrum& spectrum, const Vec& v, const SamConfig& cfg) {
  spectrum.require_dim(v);
  const double vnorm = norm(v);
  if (!(vnorm > cfg.grad_floor)) throw SamUndefined("gradient norm is at or below the floor");
  Vec next(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) {
    const double lam = spectrum[i];
    next[i] = (1.0 - cfg.eta * lam) * (vnorm - gamma_i(lam, cfg)) * v[i] / vnorm;
  }
  return next;
}

}  // namespace samdyn
