#pragma once

// Dense vector/matrix kernels for desk-scale problems (d <= 32): a value-type
// vector, a dense symmetric matrix, cyclic Jacobi eigendecomposition and
// central finite-difference oracles.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "samdyn/error.hpp"

namespace samdyn {

class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t dim, double fill = 0.0) : data_(dim, fill) {}
  Vec(std::initializer_list<double> values) : data_(values) {}
  explicit Vec(std::vector<double> values) : data_(std::move(values)) {}

  static Vec basis(std::size_t dim, std::size_t index) {
    Vec e(dim);
    e[index] = 1.0;
    return e;
  }

  std::size_t dim() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& raw() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
  }

  Vec& operator+=(const Vec& o) {
    require_same_dim(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    require_same_dim(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (double& x : data_) x *= s;
    return *this;
  }
  Vec& operator/=(double s) {
    for (double& x : data_) x /= s;
    return *this;
  }

  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(Vec a, double s) { return a *= s; }
  friend Vec operator*(double s, Vec a) { return a *= s; }
  friend Vec operator/(Vec a, double s) { return a /= s; }
  friend Vec operator-(Vec a) { return a *= -1.0; }

  friend bool operator==(const Vec&, const Vec&) = default;

 private:
  void require_same_dim(const Vec& o) const {
    if (o.dim() != dim()) {
      throw DimError("vector dimensions " + std::to_string(dim()) + " and " +
                     std::to_string(o.dim()) + " differ");
    }
  }

  std::vector<double> data_;
};

inline double dot(const Vec& a, const Vec& b) {
  if (a.dim() != b.dim()) throw DimError("dot of mismatched dimensions");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double distance(const Vec& a, const Vec& b) { return norm(a - b); }

/// Dense symmetric matrix stored row-major. Symmetry is the caller's contract;
/// `symmetrized()` and `is_symmetric()` help enforce it.
class SymMat {
 public:
  SymMat() = default;
  explicit SymMat(std::size_t dim, double fill = 0.0) : dim_(dim), data_(dim * dim, fill) {}

  static SymMat identity(std::size_t dim) {
    SymMat m(dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }

  static SymMat diagonal(const Vec& d) {
    SymMat m(d.dim());
    for (std::size_t i = 0; i < d.dim(); ++i) m(i, i) = d[i];
    return m;
  }

  static SymMat from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    SymMat m(rows.size());
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != m.dim_) throw DimError("matrix rows must be square");
      std::size_t j = 0;
      for (double x : row) m(i, j++) = x;
      ++i;
    }
    return m;
  }

  std::size_t dim() const noexcept { return dim_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * dim_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }

  Vec diag() const {
    Vec d(dim_);
    for (std::size_t i = 0; i < dim_; ++i) d[i] = (*this)(i, i);
    return d;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
  }

  double frobenius_norm() const {
    return std::sqrt(std::inner_product(data_.begin(), data_.end(), data_.begin(), 0.0));
  }

  bool is_symmetric(double rel_tol = 1e-12) const {
    const double scale = std::max(frobenius_norm(), 1e-300);
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = i + 1; j < dim_; ++j)
        if (std::abs((*this)(i, j) - (*this)(j, i)) > rel_tol * scale) return false;
    return true;
  }

  SymMat symmetrized() const {
    SymMat s(dim_);
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j)
        s(i, j) = 0.5 * ((*this)(i, j) + (*this)(j, i));
    return s;
  }

  Vec operator*(const Vec& x) const {
    if (x.dim() != dim_) throw DimError("matrix-vector dimension mismatch");
    Vec y(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < dim_; ++j) acc += (*this)(i, j) * x[j];
      y[i] = acc;
    }
    return y;
  }

  SymMat& operator+=(const SymMat& o) {
    require_same_dim(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  SymMat& operator-=(const SymMat& o) {
    require_same_dim(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  SymMat& operator*=(double s) {
    for (double& x : data_) x *= s;
    return *this;
  }

  friend SymMat operator+(SymMat a, const SymMat& b) { return a += b; }
  friend SymMat operator-(SymMat a, const SymMat& b) { return a -= b; }
  friend SymMat operator*(SymMat a, double s) { return a *= s; }
  friend SymMat operator*(double s, SymMat a) { return a *= s; }

 private:
  void require_same_dim(const SymMat& o) const {
    if (o.dim_ != dim_) throw DimError("matrix dimensions differ");
  }

  std::size_t dim_ = 0;
  std::vector<double> data_;
};

/// a aᵀ
inline SymMat outer(const Vec& a) {
  SymMat m(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j) m(i, j) = a[i] * a[j];
  return m;
}

inline double quadratic_form(const SymMat& m, const Vec& x) { return dot(x, m * x); }

struct EigenDecomposition {
  Vec values;                 // descending
  std::vector<Vec> vectors;   // vectors[k] pairs with values[k]

  std::size_t dim() const noexcept { return values.dim(); }

  SymMat reconstruct() const {
    SymMat m(dim());
    for (std::size_t k = 0; k < dim(); ++k) m += values[k] * outer(vectors[k]);
    return m;
  }
};

namespace detail {

inline double off_diagonal_norm(const SymMat& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j)
      if (i != j) acc += a(i, j) * a(i, j);
  return std::sqrt(acc);
}

// Flip so that the largest-magnitude entry is positive; ties go to the lowest index.
inline void canonicalize_sign(Vec& v) {
  std::size_t pivot = 0;
  for (std::size_t i = 1; i < v.dim(); ++i)
    if (std::abs(v[i]) > std::abs(v[pivot])) pivot = i;
  if (v[pivot] < 0.0) v *= -1.0;
}

}  // namespace detail

/// Cyclic Jacobi eigendecomposition. Sweeps until the off-diagonal Frobenius
/// norm falls to 1e-14·‖m‖_F.
inline EigenDecomposition sym_eig(const SymMat& m) {
  if (!m.all_finite()) throw InvalidMatrix("non-finite entry");
  if (!m.is_symmetric()) throw InvalidMatrix("matrix is not symmetric");
  const std::size_t n = m.dim();
  SymMat a = m.symmetrized();
  SymMat q = SymMat::identity(n);
  const double threshold = 1e-14 * m.frobenius_norm();

  constexpr int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps && detail::off_diagonal_norm(a) > threshold; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t r = p + 1; r < n; ++r) {
        const double apr = a(p, r);
        if (apr == 0.0) continue;
        const double theta = (a(r, r) - a(p, p)) / (2.0 * apr);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akr = a(k, r);
          a(k, p) = c * akp - s * akr;
          a(k, r) = s * akp + c * akr;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double ark = a(r, k);
          a(p, k) = c * apk - s * ark;
          a(r, k) = s * apk + c * ark;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double qkp = q(k, p);
          const double qkr = q(k, r);
          q(k, p) = c * qkp - s * qkr;
          q(k, r) = s * qkp + c * qkr;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenDecomposition out{Vec(n), {}};
  out.vectors.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t col = order[k];
    out.values[k] = a(col, col);
    Vec v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = q(i, col);
    detail::canonicalize_sign(v);
    out.vectors.push_back(std::move(v));
  }
  return out;
}

inline double lambda_max(const SymMat& m) { return sym_eig(m).values[0]; }

template <class F>
concept ScalarField = std::invocable<const F&, const Vec&> &&
                      std::convertible_to<std::invoke_result_t<const F&, const Vec&>, double>;

inline constexpr double default_fd_step = 1e-5;

namespace detail {

template <ScalarField F>
double checked_eval(const F& f, const Vec& x) {
  const double y = f(x);
  if (!std::isfinite(y)) throw OracleFailure("scalar field returned a non-finite value");
  return y;
}

}  // namespace detail

/// Central-difference gradient, component i = (f(x+h e_i) - f(x-h e_i)) / 2h.
template <ScalarField F>
Vec fd_gradient(const F& f, const Vec& x, double h = default_fd_step) {
  if (!(h > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  Vec g(x.dim());
  Vec probe = x;
  for (std::size_t i = 0; i < x.dim(); ++i) {
    probe[i] = x[i] + h;
    const double up = detail::checked_eval(f, probe);
    probe[i] = x[i] - h;
    const double down = detail::checked_eval(f, probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Second-order central stencil Hessian; the output is symmetric by construction.
template <ScalarField F>
SymMat fd_hessian(const F& f, const Vec& x, double h = default_fd_step) {
  if (!(h > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  const std::size_t n = x.dim();
  SymMat hess(n);
  const double center = detail::checked_eval(f, x);
  Vec probe = x;
  for (std::size_t i = 0; i < n; ++i) {
    probe[i] = x[i] + h;
    const double up = detail::checked_eval(f, probe);
    probe[i] = x[i] - h;
    const double down = detail::checked_eval(f, probe);
    probe[i] = x[i];
    hess(i, i) = (up - 2.0 * center + down) / (h * h);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      auto at = [&](double si, double sj) {
        probe[i] = x[i] + si * h;
        probe[j] = x[j] + sj * h;
        const double y = detail::checked_eval(f, probe);
        probe[i] = x[i];
        probe[j] = x[j];
        return y;
      };
      const double hij = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h * h);
      hess(i, j) = hij;
      hess(j, i) = hij;
    }
  }
  return hess;
}

/// ‖a - b‖ / max(‖b‖, floor): the relative error convention used by the checks.
inline double relative_error(const Vec& a, const Vec& b, double floor = 1e-300) {
  return distance(a, b) / std::max(norm(b), floor);
}

inline double relative_error(const SymMat& a, const SymMat& b, double floor = 1e-300) {
  return (a - b).frobenius_norm() / std::max(b.frobenius_norm(), floor);
}

inline double relative_error(double a, double b, double floor = 1e-300) {
  return std::abs(a - b) / std::max(std::abs(b), floor);
}

}  // namespace samdyn
