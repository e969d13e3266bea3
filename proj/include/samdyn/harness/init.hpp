#pragma once

// Random initializations w₀ = z + x with x drawn from a centered Gaussian or
// uniformly from a ball, together with the density bound A and the two events
// ‖x‖ ≤ R and x₁² ≥ q that the convergence-time bound is conditioned on.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "samdyn/error.hpp"
#include "samdyn/harness/rng.hpp"
#include "samdyn/numerics.hpp"

namespace samdyn {

enum class InitDistribution { gaussian, ball_uniform };

inline std::string to_string(InitDistribution d) {
  return d == InitDistribution::gaussian ? "gaussian" : "ball";
}

struct InitSpec {
  InitDistribution distribution = InitDistribution::gaussian;
  double sigma = 1.0;        // gaussian scale
  double ball_radius = 1.0;  // ball_uniform radius
  double R = 3.0;            // radius of the bounded event
  double q = 0.01;           // floor for the first coordinate squared
  std::uint64_t seed = 0;
  std::uint64_t trials = 1;

  void validate() const {
    if (!(sigma > 0.0) || !(ball_radius > 0.0) || !(R > 0.0) || !(q > 0.0)) {
      throw InvalidArgument("sigma, ball radius, R and q must be positive");
    }
  }
};

struct InitDraw {
  Vec w0;
  double A = 0.0;  // supremum of the sampling density
  bool within_R = false;
  bool above_q = false;
};

/// Supremum of the initialization density in dimension d:
/// (2πσ²)^{−d/2} for the Gaussian, 1/vol(B_r) = Γ(d/2+1)/(π^{d/2} r^d) for the ball.
inline double density_bound(const InitSpec& spec, std::size_t d) {
  const double h = 0.5 * static_cast<double>(d);
  if (spec.distribution == InitDistribution::gaussian) {
    return std::exp(-h * std::log(2.0 * std::numbers::pi * spec.sigma * spec.sigma));
  }
  return std::exp(std::lgamma(h + 1.0) - h * std::log(std::numbers::pi) -
                  static_cast<double>(d) * std::log(spec.ball_radius));
}

/// P(x₁² ≥ q) for x₁ ~ N(0, σ²).
inline double gaussian_first_coordinate_tail(double sigma, double q) {
  return std::erfc(std::sqrt(q) / (sigma * std::numbers::sqrt2));
}

inline InitDraw sample_init(const InitSpec& spec, std::uint64_t trial, const Vec& center) {
  spec.validate();
  const std::size_t d = center.dim();
  CounterRng rng(spec.seed, trial);
  Vec x(d);
  for (std::size_t i = 0; i < d; ++i) x[i] = rng.normal();
  if (spec.distribution == InitDistribution::gaussian) {
    x *= spec.sigma;
  } else {
    const double n = norm(x);
    x *= spec.ball_radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d)) / n;
  }
  InitDraw out;
  out.A = density_bound(spec, d);
  out.within_R = norm(x) <= spec.R;
  out.above_q = x[0] * x[0] >= spec.q;
  out.w0 = x + center;
  return out;
}

}  // namespace samdyn
