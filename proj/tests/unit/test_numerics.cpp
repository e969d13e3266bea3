#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "samdyn/numerics.hpp"

using namespace samdyn;

namespace {

SymMat random_symmetric(std::mt19937_64& gen, std::size_t n) {
  std::normal_distribution<double> nd;
  SymMat m(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double x = nd(gen);
      m(i, j) = x;
      m(j, i) = x;
    }
  }
  return m;
}

double orthonormality_defect(const EigenDecomposition& e) {
  double worst = 0.0;
  for (std::size_t i = 0; i < e.dim(); ++i) {
    for (std::size_t j = 0; j < e.dim(); ++j) {
      worst = std::max(worst, std::abs(dot(e.vectors[i], e.vectors[j]) - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

}  // namespace

TEST(Vec, ArithmeticAndNorms) {
  Vec a{1.0, 2.0, 2.0};
  EXPECT_DOUBLE_EQ(norm(a), 3.0);
  EXPECT_EQ(a + a, (Vec{2.0, 4.0, 4.0}));
  EXPECT_EQ(-a, (Vec{-1.0, -2.0, -2.0}));
  EXPECT_EQ(Vec::basis(3, 1), (Vec{0.0, 1.0, 0.0}));
  EXPECT_DOUBLE_EQ(distance(a, Vec(3)), 3.0);
}

TEST(Vec, DimensionMismatchThrows) {
  Vec a{1.0, 2.0};
  Vec b{1.0, 2.0, 3.0};
  EXPECT_THROW(a += b, DimError);
  EXPECT_THROW(dot(a, b), DimError);
}

TEST(SymEig, DiagonalMatrix) {
  const auto e = sym_eig(SymMat::diagonal(Vec{2.0, 1.0}));
  EXPECT_DOUBLE_EQ(e.values[0], 2.0);
  EXPECT_DOUBLE_EQ(e.values[1], 1.0);
  EXPECT_NEAR(std::abs(e.vectors[0][0]), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(e.vectors[1][1]), 1.0, 1e-15);
}

TEST(SymEig, UnsortedDiagonalComesBackSorted) {
  const auto e = sym_eig(SymMat::diagonal(Vec{0.3, 4.0, -1.0, 2.5}));
  const Vec expected{4.0, 2.5, 0.3, -1.0};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(e.values[i], expected[i], 1e-12);
}

TEST(SymEig, SwapMatrix) {
  const auto e = sym_eig(SymMat::from_rows({{0.0, 1.0}, {1.0, 0.0}}));
  EXPECT_NEAR(e.values[0], 1.0, 1e-14);
  EXPECT_NEAR(e.values[1], -1.0, 1e-14);
}

TEST(SymEig, RandomReconstructionAndOrthonormality) {
  std::mt19937_64 gen(11);
  for (std::size_t n : {2u, 3u, 5u, 8u, 16u}) {
    for (int rep = 0; rep < 20; ++rep) {
      const SymMat m = random_symmetric(gen, n);
      const auto e = sym_eig(m);
      EXPECT_LE((m - e.reconstruct()).frobenius_norm(), 1e-10 * m.frobenius_norm());
      EXPECT_LE(orthonormality_defect(e), 1e-10);
      for (std::size_t i = 1; i < n; ++i) EXPECT_GE(e.values[i - 1], e.values[i]);
    }
  }
}

TEST(SymEig, SignConventionLargestComponentPositive) {
  std::mt19937_64 gen(3);
  const auto e = sym_eig(random_symmetric(gen, 6));
  for (const auto& v : e.vectors) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < v.dim(); ++i) {
      if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
    }
    EXPECT_GT(v[arg], 0.0);
  }
}

TEST(SymEig, RejectsNonFiniteAndAsymmetric) {
  SymMat m = SymMat::identity(2);
  m(0, 1) = NAN;
  m(1, 0) = NAN;
  EXPECT_THROW(sym_eig(m), InvalidMatrix);
  SymMat a = SymMat::identity(2);
  a(0, 1) = 1.0;
  EXPECT_THROW(sym_eig(a), InvalidMatrix);
}

TEST(FiniteDifferences, SquareAtThree) {
  const Vec g = fd_gradient([](const Vec& x) { return x[0] * x[0]; }, Vec{3.0}, 1e-5);
  EXPECT_NEAR(g[0], 6.0, 1e-8);
}

TEST(FiniteDifferences, ConstantFieldHasZeroGradient) {
  const Vec g = fd_gradient([](const Vec&) { return 4.2; }, Vec{1.0, -2.0, 0.5});
  EXPECT_EQ(g, Vec(3));
}

TEST(FiniteDifferences, QuadraticFormGradient) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    SymMat a(4);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = i; j < 4; ++j) a(i, j) = a(j, i) = 2.5 * u(gen);
    }
    Vec x(4);
    for (std::size_t i = 0; i < 4; ++i) x[i] = 10.0 * u(gen) / 2.0;
    const Vec g = fd_gradient([&](const Vec& y) { return 0.5 * quadratic_form(a, y); }, x, 1e-5);
    EXPECT_LE(relative_error(g, a * x), 1e-7);
  }
}

TEST(FiniteDifferences, HessianOfQuadraticAndLinear) {
  const SymMat h = fd_hessian([](const Vec& x) { return 0.5 * (2.0 * x[0] * x[0] + x[1] * x[1]); }, Vec{0.3, -0.7});
  EXPECT_NEAR(h(0, 0), 2.0, 1e-6);
  EXPECT_NEAR(h(1, 1), 1.0, 1e-6);
  EXPECT_NEAR(h(0, 1), 0.0, 1e-6);
  const SymMat z = fd_hessian([](const Vec& x) { return 3.0 * x[0] - x[1]; }, Vec{1.0, 2.0}, 1e-4);
  EXPECT_LE(z.frobenius_norm(), 1e-6);
  EXPECT_TRUE(z.is_symmetric());
}

TEST(FiniteDifferences, NonFiniteValueIsOracleFailure) {
  EXPECT_THROW(fd_gradient([](const Vec& x) { return std::log(x[0]); }, Vec{0.0}), OracleFailure);
  EXPECT_THROW(fd_gradient([](const Vec& x) { return x[0]; }, Vec{0.0}, 0.0), InvalidArgument);
}
