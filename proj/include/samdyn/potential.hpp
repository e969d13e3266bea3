#pragma once

// The potential J(u) = ½ uᵀCu − ‖Λu‖ with C = (2I − ηΛ)/(ηρ) = diag(λ_i²/β_i).
// On a quadratic, the sign-alternated iterate u_t = (−1)ᵗ(w_t − z) follows
// plain gradient descent on J with step ηρ. All u arguments are displacements
// from the loss center.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "samdyn/error.hpp"
#include "samdyn/numerics.hpp"
#include "samdyn/sam.hpp"

namespace samdyn {

class PotentialSpec {
 public:
  PotentialSpec(Spectrum spectrum, SamConfig cfg) : spectrum_(std::move(spectrum)), cfg_(cfg) {
    cfg_.validate();
    if (!(cfg_.rho > 0.0)) throw InvalidArgument("rho must be positive");
    if (!spectrum_.is_positive()) throw SingularSpectrum("potential needs lambda_d > 0");
    if (!(cfg_.eta * spectrum_.lambda_max() < 1.0)) {
      throw StepSizeTooLarge("potential needs eta*lambda1 < 1");
    }
    const std::size_t d = spectrum_.dim();
    beta_ = Vec(d);
    c_diag_ = Vec(d);
    for (std::size_t i = 0; i < d; ++i) {
      beta_[i] = beta_i(spectrum_[i], cfg_);
      c_diag_[i] = spectrum_[i] * spectrum_[i] / beta_[i];
    }
  }

  const Spectrum& spectrum() const noexcept { return spectrum_; }
  const SamConfig& config() const noexcept { return cfg_; }
  std::size_t dim() const noexcept { return spectrum_.dim(); }
  double lambda(std::size_t i) const { return spectrum_[i]; }
  const Vec& beta() const noexcept { return beta_; }
  /// Diagonal of C, λ_i²/β_i.
  const Vec& c_diag() const noexcept { return c_diag_; }

  /// (2I − ηΛ)/(ηρ), computed from the defining expression rather than from β.
  SymMat c_matrix() const {
    SymMat c(dim());
    for (std::size_t i = 0; i < dim(); ++i) c(i, i) = (2.0 - cfg_.eta * spectrum_[i]) / (cfg_.eta * cfg_.rho);
    return c;
  }

  /// Scale for "is this gradient zero": λ₁²/β_d.
  double gradient_scale() const { return spectrum_.lambda_max() * spectrum_.lambda_max() / beta_[dim() - 1]; }

 private:
  Spectrum spectrum_;
  SamConfig cfg_;
  Vec beta_;
  Vec c_diag_;
};

inline double potential_J(const PotentialSpec& spec, const Vec& u) {
  spec.spectrum().require_dim(u);
  double quad = 0.0;
  double lam_u_sq = 0.0;
  for (std::size_t i = 0; i < u.dim(); ++i) {
    const double lu = spec.lambda(i) * u[i];
    quad += lu * lu / spec.beta()[i];
    lam_u_sq += lu * lu;
  }
  return 0.5 * quad - std::sqrt(lam_u_sq);
}

/// Same value through ½uᵀCu − ‖Λu‖ with C built from (2I − ηΛ)/(ηρ).
inline double potential_J_matrix_form(const PotentialSpec& spec, const Vec& u) {
  return 0.5 * quadratic_form(spec.c_matrix(), u) - norm(spec.spectrum().apply(u));
}

namespace detail {

inline double checked_lambda_u_norm(const PotentialSpec& spec, const Vec& u) {
  spec.spectrum().require_dim(u);
  const double n = norm(spec.spectrum().apply(u));
  if (!(n > 0.0)) throw PotentialSingular("gradient of J is undefined where Λu = 0");
  return n;
}

}  // namespace detail

/// ∇J(u) = Cu − Λ²u/‖Λu‖
inline Vec grad_J(const PotentialSpec& spec, const Vec& u) {
  const double lu = detail::checked_lambda_u_norm(spec, u);
  Vec g(u.dim());
  for (std::size_t i = 0; i < u.dim(); ++i) {
    const double lam = spec.lambda(i);
    g[i] = spec.c_diag()[i] * u[i] - lam * lam * u[i] / lu;
  }
  return g;
}

/// ∇²J(u) = C − ΛP⊥Λ/‖Λu‖,  P⊥ = I − Λu uᵀΛ/‖Λu‖²
inline SymMat hess_J(const PotentialSpec& spec, const Vec& u) {
  const double lu = detail::checked_lambda_u_norm(spec, u);
  const std::size_t d = u.dim();
  const Vec lam_u = spec.spectrum().apply(u);
  SymMat h(d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double p_perp = (i == j ? 1.0 : 0.0) - lam_u[i] * lam_u[j] / (lu * lu);
      h(i, j) = -spec.lambda(i) * p_perp * spec.lambda(j) / lu;
    }
    h(i, i) += spec.c_diag()[i];
  }
  return h;
}

/// One gradient step on J with step ηρ; equals the SAM step in u-coordinates.
inline Vec potential_step(const PotentialSpec& spec, const Vec& u) {
  return u - (spec.config().eta * spec.config().rho) * grad_J(spec, u);
}

inline bool is_stationary(const PotentialSpec& spec, const Vec& u) {
  return norm(grad_J(spec, u)) <= 1e-10 * spec.gradient_scale();
}

struct Inertia {
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::size_t zero = 0;

  friend bool operator==(const Inertia&, const Inertia&) = default;
};

struct StationaryPoint {
  Vec location;
  std::size_t index = 0;   // eigen-direction i (0-based)
  int sign = 1;
  Inertia inertia;         // predicted sign counts of ∇²J at the point
  bool global_minimum = false;
};

namespace detail {

inline bool same_beta(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

}  // namespace detail

/// Closed-form inertia at ±(β_i/λ_i)e_i:
/// (|{j: β_j < β_i}| + 1, |{j: β_j > β_i}|, |{j: β_j = β_i}| − 1).
inline Inertia predicted_inertia(const PotentialSpec& spec, std::size_t i) {
  Inertia in;
  const double bi = spec.beta()[i];
  for (std::size_t j = 0; j < spec.dim(); ++j) {
    const double bj = spec.beta()[j];
    if (detail::same_beta(bj, bi)) {
      ++in.zero;
    } else if (bj < bi) {
      ++in.positive;
    } else {
      ++in.negative;
    }
  }
  in.zero -= 1;  // i itself contributes the extra positive eigenvalue
  in.positive += 1;
  return in;
}

/// Sign counts of a symmetric matrix's eigenvalues, |λ| ≤ zero_tol counted as zero.
inline Inertia measured_inertia(const SymMat& m, double zero_tol) {
  Inertia in;
  for (double ev : sym_eig(m).values) {
    if (std::abs(ev) <= zero_tol) {
      ++in.zero;
    } else if (ev > 0.0) {
      ++in.positive;
    } else {
      ++in.negative;
    }
  }
  return in;
}

/// The 2d canonical stationary points ±(β_i/λ_i)e_i. When β values coincide
/// the stationary set is a continuum; only axis representatives are listed and
/// the degeneracy shows up as zero eigenvalues.
inline std::vector<StationaryPoint> stationary_catalog(const PotentialSpec& spec) {
  std::vector<StationaryPoint> out;
  const std::size_t d = spec.dim();
  out.reserve(2 * d);
  for (std::size_t i = 0; i < d; ++i) {
    const Inertia inertia = predicted_inertia(spec, i);
    const bool minimum = detail::same_beta(spec.beta()[i], spec.beta()[0]);
    for (int s : {+1, -1}) {
      Vec loc(d);
      loc[i] = s * spec.beta()[i] / spec.lambda(i);
      out.push_back({std::move(loc), i, s, inertia, minimum});
    }
  }
  return out;
}

/// Closed-form Hessian at a stationary point (β_i/λ_i)û:
/// Λ²(Σ_{j: β_j ≠ β_i} (1/β_j − 1/β_i) e_j e_jᵀ + (1/β_i) e_i e_iᵀ).
inline SymMat stationary_hessian(const PotentialSpec& spec, std::size_t i) {
  SymMat h(spec.dim());
  const double bi = spec.beta()[i];
  for (std::size_t j = 0; j < spec.dim(); ++j) {
    const double l2 = spec.lambda(j) * spec.lambda(j);
    if (j == i) {
      h(j, j) = l2 / bi;
    } else if (!detail::same_beta(spec.beta()[j], bi)) {
      h(j, j) = l2 * (1.0 / spec.beta()[j] - 1.0 / bi);
    }
  }
  return h;
}

/// −(1/2ρ) Σ u_i² (1 − β_i/‖Λu‖)² (2 − ηλ_i)² λ_i
inline double descent_bound(const PotentialSpec& spec, const Vec& u) {
  const double lu = detail::checked_lambda_u_norm(spec, u);
  const double eta = spec.config().eta;
  double acc = 0.0;
  for (std::size_t i = 0; i < u.dim(); ++i) {
    const double lam = spec.lambda(i);
    const double shrink = 1.0 - spec.beta()[i] / lu;
    const double two_minus = 2.0 - eta * lam;
    acc += u[i] * u[i] * shrink * shrink * two_minus * two_minus * lam;
  }
  return -acc / (2.0 * spec.config().rho);
}

struct DescentCheck {
  double lhs = 0.0;  // J(u_next) − J(u_t)
  double rhs = 0.0;  // descent bound at u_t
  bool holds = false;
};

inline DescentCheck descent_check(const PotentialSpec& spec, const Vec& u_t, const Vec& u_next) {
  DescentCheck out;
  out.lhs = potential_J(spec, u_next) - potential_J(spec, u_t);
  out.rhs = descent_bound(spec, u_t);
  out.holds = out.lhs <= out.rhs + 1e-12 * std::max(1.0, std::abs(out.rhs));
  return out;
}

}  // namespace samdyn
