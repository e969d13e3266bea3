#pragma once

// Loss oracles: a quadratic bowl and two polynomial valleys whose Hessian
// varies, so that the gradient of the leading Hessian eigenvalue is nonzero.
//
// The valleys are minimal constructions with an exact stationary point at the
// center and Hessian diag(λ) there:
//   cubic:   ℓ(w) = ½ Σ λ_i x_i² + c·x₁²·x₂                 (x = w − z)
//   quartic: ℓ(w) = ½ Σ λ_i x_i² + c·x₁²·x₂ + q4·x₁²·x₂²
// They are one concrete realization chosen for testing, not the only one.

#include <cmath>
#include <concepts>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "samdyn/config.hpp"
#include "samdyn/error.hpp"
#include "samdyn/numerics.hpp"

namespace samdyn {

/// Non-increasing eigenvalues λ₁ ≥ … ≥ λ_d of a diagonal Hessian plus the
/// center (minimizer) the Hessian is taken at.
class Spectrum {
 public:
  /// λ₁ ≥ … ≥ λ_d > 0, as the quadratic convergence results require.
  static Spectrum positive(std::vector<double> eigenvalues, Vec center = {}) {
    Spectrum s(std::move(eigenvalues), std::move(center));
    if (s.eigenvalues_[s.dim() - 1] <= 0.0) {
      throw SingularSpectrum("smallest eigenvalue must be positive");
    }
    return s;
  }

  /// λ₁ > 0 and trailing eigenvalues may vanish (flat directions of an
  /// overparameterized minimum).
  static Spectrum with_null_directions(std::vector<double> eigenvalues, Vec center = {}) {
    Spectrum s(std::move(eigenvalues), std::move(center));
    if (s.eigenvalues_[0] <= 0.0) throw InvalidArgument("leading eigenvalue must be positive");
    return s;
  }

  std::size_t dim() const noexcept { return eigenvalues_.dim(); }
  const Vec& eigenvalues() const noexcept { return eigenvalues_; }
  const Vec& center() const noexcept { return center_; }
  double operator[](std::size_t i) const { return eigenvalues_[i]; }
  double lambda_max() const { return eigenvalues_[0]; }
  double lambda_min() const { return eigenvalues_[dim() - 1]; }
  bool is_positive() const { return lambda_min() > 0.0; }

  /// λ₁ > λ₂ (vacuous when d = 1).
  bool has_gap() const { return dim() == 1 || eigenvalues_[0] > eigenvalues_[1]; }

  Vec apply(const Vec& x) const {  // Λx
    require_dim(x);
    Vec y = x;
    for (std::size_t i = 0; i < dim(); ++i) y[i] *= eigenvalues_[i];
    return y;
  }

  void require_dim(const Vec& x) const {
    if (x.dim() != dim()) {
      throw DimError("expected dimension " + std::to_string(dim()) + ", got " + std::to_string(x.dim()));
    }
  }

 private:
  Spectrum(std::vector<double> eigenvalues, Vec center)
      : eigenvalues_(std::move(eigenvalues)), center_(std::move(center)) {
    if (eigenvalues_.empty()) throw InvalidArgument("spectrum must be non-empty");
    if (!eigenvalues_.all_finite()) throw InvalidArgument("eigenvalues must be finite");
    for (std::size_t i = 0; i < dim(); ++i) {
      if (eigenvalues_[i] < 0.0) throw InvalidArgument("eigenvalues must be non-negative");
      if (i > 0 && eigenvalues_[i] > eigenvalues_[i - 1]) {
        throw InvalidArgument("eigenvalues must be sorted in non-increasing order");
      }
    }
    if (center_.empty()) center_ = Vec(dim());
    if (center_.dim() != dim()) throw DimError("center dimension does not match the spectrum");
    if (!center_.all_finite()) throw InvalidArgument("center must be finite");
  }

  Vec eigenvalues_;
  Vec center_;
};

template <class L>
concept LossOracle = requires(const L& loss, const Vec& w) {
  { loss.dim() } -> std::convertible_to<std::size_t>;
  { loss.value(w) } -> std::convertible_to<double>;
  { loss.gradient(w) } -> std::same_as<Vec>;
  { loss.lipschitz_b() } -> std::same_as<std::optional<double>>;
};

template <class L>
concept HessianOracle = LossOracle<L> && requires(const L& loss, const Vec& w) {
  { loss.hessian(w) } -> std::same_as<SymMat>;
};

/// D³ℓ(w)(dir,·,·) as a matrix.
template <class L>
concept ThirdDerivativeOracle = HessianOracle<L> && requires(const L& loss, const Vec& w, const Vec& dir) {
  { loss.third_contraction(w, dir) } -> std::same_as<SymMat>;
};

class QuadraticLoss {
 public:
  explicit QuadraticLoss(Spectrum spectrum) : spectrum_(std::move(spectrum)) {}

  const Spectrum& spectrum() const noexcept { return spectrum_; }
  const Vec& center() const noexcept { return spectrum_.center(); }
  std::size_t dim() const noexcept { return spectrum_.dim(); }

  double value(const Vec& w) const {
    const Vec x = displacement(w);
    return 0.5 * dot(x, spectrum_.apply(x));
  }

  Vec gradient(const Vec& w) const { return spectrum_.apply(displacement(w)); }

  SymMat hessian(const Vec& w) const {
    spectrum_.require_dim(w);
    return SymMat::diagonal(spectrum_.eigenvalues());
  }

  SymMat third_contraction(const Vec& w, const Vec& dir) const {
    spectrum_.require_dim(w);
    spectrum_.require_dim(dir);
    return SymMat(dim());
  }

  std::optional<double> lipschitz_b() const { return 0.0; }

  Vec displacement(const Vec& w) const {
    spectrum_.require_dim(w);
    return w - spectrum_.center();
  }

 private:
  Spectrum spectrum_;
};

class CubicValleyLoss {
 public:
  CubicValleyLoss(Spectrum spectrum, double coupling) : base_(std::move(spectrum)), c_(coupling) {
    if (base_.dim() < 2) throw InvalidArgument("cubic valley needs at least two dimensions");
    if (!std::isfinite(c_)) throw InvalidArgument("coupling must be finite");
  }

  const Spectrum& spectrum() const noexcept { return base_.spectrum(); }
  const Vec& center() const noexcept { return base_.center(); }
  std::size_t dim() const noexcept { return base_.dim(); }
  double coupling() const noexcept { return c_; }

  double value(const Vec& w) const {
    const Vec x = base_.displacement(w);
    return base_.value(w) + c_ * x[0] * x[0] * x[1];
  }

  Vec gradient(const Vec& w) const {
    const Vec x = base_.displacement(w);
    Vec g = base_.gradient(w);
    g[0] += 2.0 * c_ * x[0] * x[1];
    g[1] += c_ * x[0] * x[0];
    return g;
  }

  SymMat hessian(const Vec& w) const {
    const Vec x = base_.displacement(w);
    SymMat h = base_.hessian(w);
    h(0, 0) += 2.0 * c_ * x[1];
    h(0, 1) += 2.0 * c_ * x[0];
    h(1, 0) += 2.0 * c_ * x[0];
    return h;
  }

  // The only nonzero third derivatives are ∂³ℓ/∂x₁∂x₁∂x₂ = 2c (all orderings),
  // independent of w.
  SymMat third_contraction(const Vec& w, const Vec& dir) const {
    spectrum().require_dim(w);
    spectrum().require_dim(dir);
    SymMat m(dim());
    m(0, 0) = 2.0 * c_ * dir[1];
    m(0, 1) = 2.0 * c_ * dir[0];
    m(1, 0) = m(0, 1);
    return m;
  }

  std::optional<double> lipschitz_b() const { return 0.0; }

 private:
  QuadraticLoss base_;
  double c_;
};

class QuarticValleyLoss {
 public:
  QuarticValleyLoss(Spectrum spectrum, double coupling, double q4)
      : cubic_(std::move(spectrum), coupling), q4_(q4) {
    if (!std::isfinite(q4_)) throw InvalidArgument("quartic coefficient must be finite");
  }

  const Spectrum& spectrum() const noexcept { return cubic_.spectrum(); }
  const Vec& center() const noexcept { return cubic_.center(); }
  std::size_t dim() const noexcept { return cubic_.dim(); }
  double coupling() const noexcept { return cubic_.coupling(); }
  double q4() const noexcept { return q4_; }

  double value(const Vec& w) const {
    const Vec x = w - center();
    return cubic_.value(w) + q4_ * x[0] * x[0] * x[1] * x[1];
  }

  Vec gradient(const Vec& w) const {
    Vec g = cubic_.gradient(w);
    const Vec x = w - center();
    g[0] += 2.0 * q4_ * x[0] * x[1] * x[1];
    g[1] += 2.0 * q4_ * x[0] * x[0] * x[1];
    return g;
  }

  SymMat hessian(const Vec& w) const {
    SymMat h = cubic_.hessian(w);
    const Vec x = w - center();
    h(0, 0) += 2.0 * q4_ * x[1] * x[1];
    h(1, 1) += 2.0 * q4_ * x[0] * x[0];
    h(0, 1) += 4.0 * q4_ * x[0] * x[1];
    h(1, 0) = h(0, 1);
    return h;
  }

  // Quartic part: T₁₁₂ = 4q4·x₂, T₁₂₂ = 4q4·x₁ (and permutations); T₁₁₁ = T₂₂₂ = 0.
  SymMat third_contraction(const Vec& w, const Vec& dir) const {
    SymMat m = cubic_.third_contraction(w, dir);
    const Vec x = w - center();
    const double t112 = 4.0 * q4_ * x[1];
    const double t122 = 4.0 * q4_ * x[0];
    m(0, 0) += dir[1] * t112;
    m(0, 1) += dir[0] * t112 + dir[1] * t122;
    m(1, 0) = m(0, 1);
    m(1, 1) += dir[0] * t122;
    return m;
  }

  // D³ℓ is affine in w, so its Lipschitz constant is the operator norm of the
  // constant fourth derivative of q4·x₁²x₂². For a symmetric 4-form the norm is
  // attained on the diagonal: D⁴(h,h,h,h) = 24·q4·h₁²h₂², whose maximum over
  // unit h is 24|q4|/4 (h₁² = h₂² = ½). Hence B = 6|q4|.
  std::optional<double> lipschitz_b() const { return 6.0 * std::abs(q4_); }

 private:
  CubicValleyLoss cubic_;
  double q4_;
};

static_assert(ThirdDerivativeOracle<QuadraticLoss>);
static_assert(ThirdDerivativeOracle<CubicValleyLoss>);
static_assert(ThirdDerivativeOracle<QuarticValleyLoss>);

enum class LossFamily { quadratic, cubic, quartic };

inline std::string to_string(LossFamily f) {
  switch (f) {
    case LossFamily::quadratic: return "quadratic";
    case LossFamily::cubic: return "cubic";
    case LossFamily::quartic: return "quartic";
  }
  return "unknown";
}

/// Type-erased loss over the three concrete families.
class AnyLoss {
 public:
  using Variant = std::variant<QuadraticLoss, CubicValleyLoss, QuarticValleyLoss>;

  AnyLoss(QuadraticLoss l) : loss_(std::move(l)) {}
  AnyLoss(CubicValleyLoss l) : loss_(std::move(l)) {}
  AnyLoss(QuarticValleyLoss l) : loss_(std::move(l)) {}

  LossFamily family() const {
    return static_cast<LossFamily>(loss_.index());
  }
  const Variant& variant() const noexcept { return loss_; }

  template <class F>
  decltype(auto) visit(F&& f) const {
    return std::visit(std::forward<F>(f), loss_);
  }

  std::size_t dim() const { return visit([](const auto& l) { return l.dim(); }); }
  const Spectrum& spectrum() const {
    return visit([](const auto& l) -> const Spectrum& { return l.spectrum(); });
  }
  const Vec& center() const { return spectrum().center(); }
  double value(const Vec& w) const { return visit([&](const auto& l) { return l.value(w); }); }
  Vec gradient(const Vec& w) const { return visit([&](const auto& l) { return l.gradient(w); }); }
  SymMat hessian(const Vec& w) const { return visit([&](const auto& l) { return l.hessian(w); }); }
  SymMat third_contraction(const Vec& w, const Vec& dir) const {
    return visit([&](const auto& l) { return l.third_contraction(w, dir); });
  }
  std::optional<double> lipschitz_b() const { return visit([](const auto& l) { return l.lipschitz_b(); }); }

 private:
  Variant loss_;
};

static_assert(ThirdDerivativeOracle<AnyLoss>);

struct LossSpec {
  LossFamily family = LossFamily::quadratic;
  std::vector<double> lambdas;
  double c = 0.0;
  double q4 = 0.0;
  std::vector<double> center;  // empty means the origin
};

inline LossFamily parse_loss_family(const std::string& key, const std::string& name) {
  if (name == "quadratic") return LossFamily::quadratic;
  if (name == "cubic") return LossFamily::cubic;
  if (name == "quartic") return LossFamily::quartic;
  throw ConfigError(key, "unknown loss family '" + name + "' (expected quadratic, cubic or quartic)");
}

/// Reads keys `loss` (family), `lambdas`, `c`, `q4`, `center`.
inline LossSpec loss_spec_from_config(const KeyValueConfig& cfg) {
  LossSpec spec;
  if (auto v = cfg.get("loss")) spec.family = parse_loss_family("loss", *v);
  const auto lambdas = cfg.get("lambdas");
  if (!lambdas) throw ConfigError("lambdas", "missing eigenvalue list");
  spec.lambdas = parse_double_list("lambdas", *lambdas);
  if (auto v = cfg.get("c")) spec.c = parse_double("c", *v);
  if (auto v = cfg.get("q4")) spec.q4 = parse_double("q4", *v);
  if (auto v = cfg.get("center")) spec.center = parse_double_list("center", *v);
  return spec;
}

/// Quadratic losses need a positive spectrum; the valleys admit flat directions.
inline AnyLoss make_loss(const LossSpec& spec) {
  try {
    Vec center(spec.center);
    switch (spec.family) {
      case LossFamily::quadratic:
        return QuadraticLoss(Spectrum::positive(spec.lambdas, center));
      case LossFamily::cubic:
        return CubicValleyLoss(Spectrum::with_null_directions(spec.lambdas, center), spec.c);
      case LossFamily::quartic:
        return QuarticValleyLoss(Spectrum::with_null_directions(spec.lambdas, center), spec.c, spec.q4);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const DimError& e) {
    throw ConfigError("center", e.what());
  } catch (const Error& e) {
    throw ConfigError("lambdas", e.what());
  }
  throw ConfigError("loss", "unsupported family");
}

struct LambdaMaxGradient {
  double lambda_max = 0.0;
  double gap = 0.0;                  // λ₁ − λ₂ of ∇²ℓ(w)
  Vec leading_vector;                // unit q₁
  std::optional<Vec> analytic;       // D³ℓ(w)(q₁,q₁,e_i), when available
  Vec finite_difference;             // central differences of w ↦ λmax(∇²ℓ(w))
};

inline constexpr double eigen_gap_threshold = 1e-8;

/// Gradient of w ↦ λmax(∇²ℓ(w)) by two independent routes.
template <HessianOracle L>
LambdaMaxGradient grad_lambda_max(const L& loss, const Vec& w, double h = default_fd_step) {
  const auto eig = sym_eig(loss.hessian(w));
  LambdaMaxGradient out;
  out.lambda_max = eig.values[0];
  out.gap = eig.dim() > 1 ? eig.values[0] - eig.values[1] : INFINITY;
  if (out.gap < eigen_gap_threshold) {
    throw DegenerateLeadingEigenvalue("leading eigenvalue gap " + std::to_string(out.gap) +
                                      " is below " + std::to_string(eigen_gap_threshold));
  }
  out.leading_vector = eig.vectors[0];

  if constexpr (ThirdDerivativeOracle<L>) {
    Vec g(w.dim());
    for (std::size_t i = 0; i < w.dim(); ++i) {
      const SymMat t = loss.third_contraction(w, Vec::basis(w.dim(), i));
      g[i] = quadratic_form(t, out.leading_vector);
    }
    out.analytic = std::move(g);
  }
  out.finite_difference = fd_gradient([&](const Vec& x) { return lambda_max(loss.hessian(x)); }, w, h);
  return out;
}

}  // namespace samdyn
