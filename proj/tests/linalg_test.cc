// Copyright 2026 The icreg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "icreg/linalg.h"
#include "icreg/rng.h"

namespace icreg {
namespace {

Matrix random_matrix(std::size_t r, std::size_t c, SeededRng& rng) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.uniform(-1.0, 1.0);
  return m;
}

// Triple-loop product.
Matrix naive_product(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// Number of eigenvalues of symmetric s greater than lambda, from the signs
// of the pivots of s - lambda·I (Sylvester inertia).
int eigen_count_above(const Matrix& s, double lambda) {
  const std::size_t n = s.rows();
  Matrix a = s;
  for (std::size_t i = 0; i < n; ++i) a(i, i) -= lambda;
  int count = 0;
  for (std::size_t k = 0; k < n; ++k) {
    double p = a(k, k);
    if (p == 0.0) p = 1e-300;
    if (p > 0) ++count;
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / p;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
    }
  }
  return count;
}

double top_eigenvalue_by_bisection(const Matrix& s) {
  double hi = 0.0;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < s.cols(); ++j) r += std::abs(s(i, j));
    hi = std::max(hi, r);
  }
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (eigen_count_above(s, mid) >= 1 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

TEST(Matmul, IdentityLeavesMatrix) {
  const Matrix b{{1, 2}, {3, 4}};
  EXPECT_EQ(matmul(Matrix::identity(2), b), b);
}

TEST(Matmul, Annihilation) {
  const Matrix a{{1, 0}, {0, 0}};
  const Matrix b{{0}, {5}};
  EXPECT_EQ(matmul(a, b), (Matrix{{0}, {0}}));
}

TEST(Matmul, MatchesTripleLoop) {
  SeededRng rng(11);
  const Matrix a = random_matrix(3, 4, rng);
  const Matrix b = random_matrix(4, 2, rng);
  EXPECT_LE(max_abs_diff(matmul(a, b), naive_product(a, b)), 1e-12);
}

TEST(Matmul, TransposedVariantsMatch) {
  SeededRng rng(12);
  const Matrix a = random_matrix(5, 3, rng);
  const Matrix b = random_matrix(5, 4, rng);
  const Matrix c = random_matrix(4, 3, rng);
  EXPECT_LE(max_abs_diff(matmul_tn(a, b), naive_product(transpose(a), b)), 1e-12);
  EXPECT_LE(max_abs_diff(matmul_nt(a, c), naive_product(a, transpose(c))), 1e-12);
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  try {
    matmul(Matrix(2, 3), Matrix(4, 2));
    FAIL() << "no error";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("4x2"), std::string::npos) << msg;
  }
}

TEST(Matmul, Associative) {
  SeededRng rng(13);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = random_matrix(3, 5, rng);
    const Matrix b = random_matrix(5, 4, rng);
    const Matrix c = random_matrix(4, 2, rng);
    const Matrix l = matmul(matmul(a, b), c);
    const Matrix r = matmul(a, matmul(b, c));
    EXPECT_LE(max_abs_diff(l, r), 1e-9 * std::max(1.0, max_norm(l)));
  }
}

TEST(Invert, Diagonal) {
  const double d[] = {2.0, 4.0};
  const double inv[] = {0.5, 0.25};
  EXPECT_EQ(invert(Matrix::diagonal(d)), Matrix::diagonal(inv));
}

TEST(Invert, Identity) { EXPECT_EQ(invert(Matrix::identity(5)), Matrix::identity(5)); }

TEST(Invert, RandomSpdResidual) {
  SeededRng rng(21);
  const Matrix b = random_matrix(4, 4, rng);
  Matrix a = matmul_tn(b, b);
  for (std::size_t i = 0; i < 4; ++i) a(i, i) += 0.5;
  EXPECT_LE(max_abs_diff(matmul(invert(a), a), Matrix::identity(4)), 1e-9);
  EXPECT_LE(max_abs_diff(matmul(a, invert(a)), Matrix::identity(4)), 1e-8);
}

TEST(Invert, DoubleInverseReturnsInput) {
  SeededRng rng(22);
  for (int t = 0; t < 20; ++t) {
    Matrix a = random_matrix(4, 4, rng);
    for (std::size_t i = 0; i < 4; ++i) a(i, i) += 4.0;
    EXPECT_LE(max_abs_diff(invert(invert(a)), a), 1e-7);
  }
}

TEST(Invert, SingularCarriesPivotIndex) {
  const Matrix a{{1, 2}, {2, 4}};
  try {
    invert(a);
    FAIL() << "no error";
  } catch (const SingularMatrixError& e) {
    EXPECT_EQ(e.pivot_index(), 1u);
    EXPECT_LT(e.pivot_magnitude(), kSingularPivot);
  }
}

TEST(Invert, NonSquareRejected) { EXPECT_THROW(invert(Matrix(2, 3)), DimensionError); }

TEST(Solve, MatchesInverse) {
  SeededRng rng(23);
  Matrix a = random_matrix(5, 5, rng);
  for (std::size_t i = 0; i < 5; ++i) a(i, i) += 3.0;
  const std::vector<double> b{1, -2, 0.5, 3, -1};
  const std::vector<double> x = solve(a, b);
  const std::vector<double> y = matvec(invert(a), b);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(x[i], y[i], 1e-12);
}

TEST(SpectralNorm, Diagonal) {
  const double d[] = {3.0, 1.0};
  EXPECT_NEAR(spectral_norm(Matrix::diagonal(d)), 3.0, 3e-6);
}

TEST(SpectralNorm, Zero) { EXPECT_EQ(spectral_norm(Matrix(3, 3)), 0.0); }

TEST(SpectralNorm, MatchesBisectionOracle) {
  SeededRng rng(31);
  for (int t = 0; t < 10; ++t) {
    const Matrix a = random_matrix(5, 5, rng);
    const double want = std::sqrt(top_eigenvalue_by_bisection(matmul_tn(a, a)));
    EXPECT_NEAR(spectral_norm(a), want, 1e-5 * want);
  }
}

TEST(SpectralNorm, TransposeInvariant) {
  SeededRng rng(32);
  for (int t = 0; t < 10; ++t) {
    const Matrix a = random_matrix(4, 6, rng);
    const double s = spectral_norm(a);
    EXPECT_NEAR(spectral_norm(transpose(a)), s, 1e-8 * s);
  }
}

TEST(MaxNorm, Examples) {
  EXPECT_EQ(max_norm(Matrix{{-7, 2}, {0, 3}}), 7.0);
  EXPECT_EQ(max_norm(Matrix(2, 2)), 0.0);
  EXPECT_EQ(max_norm(Matrix()), 0.0);
}

TEST(MaxNorm, MatchesScanAndScales) {
  SeededRng rng(41);
  const Matrix a = random_matrix(6, 7, rng);
  double scan = 0.0;
  for (double v : a.data()) scan = std::max(scan, std::abs(v));
  EXPECT_EQ(max_norm(a), scan);
  for (double c : {-2.0, 0.5, 8.0, -0.25}) EXPECT_EQ(max_norm(c * a), std::abs(c) * scan);
}

}  // namespace
}  // namespace icreg
