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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "icreg/linalg.h"

namespace icreg {

// Equally spaced knots t_j = a + (j-1)h on [a, b] with h = (b-a)/m, so that
// t_1 = a and t_{m+1} = b. Indices outside 1..m+1 are ghost knots. The
// degree-q basis is B_q((x - t_j)/h) for j = 1-q..m, giving m+q functions.
struct KnotGrid {
  double a = -1.0;
  double b = 1.0;
  std::size_t m = 5;
  int q = 1;

  double h() const { return (b - a) / static_cast<double>(m); }
  double knot(long j) const;
  long first_index() const { return 1 - q; }
  std::size_t basis_count() const { return m + static_cast<std::size_t>(q); }
  void validate() const;
  bool operator==(const KnotGrid&) const = default;
};

struct FeatureSpec {
  enum class Kind { kMonomial, kSpline };
  Kind kind = Kind::kMonomial;
  std::size_t degree = 0;  // monomial degree d
  KnotGrid grid;           // spline grid

  static FeatureSpec monomial(std::size_t d) { return {Kind::kMonomial, d, {}}; }
  static FeatureSpec spline(const KnotGrid& g) { return {Kind::kSpline, 0, g}; }
  std::size_t dim() const { return kind == Kind::kMonomial ? degree + 1 : grid.basis_count(); }
  std::vector<double> features(double x) const;
  std::string describe() const;
};

// [1, x, ..., x^d] by repeated multiplication.
std::vector<double> monomial_features(double x, std::size_t d);

// (1/q!) Σ_{i=0}^{q+1} (-1)^i C(q+1, i) ReLU(u - i)^q, and exactly 0 outside
// the support (0, q+1).
double cardinal_bspline(double u, int q);
std::vector<double> bspline_basis(double x, const KnotGrid& grid);

// Σ c_k P_k(x) with the three-term Legendre recurrence.
double legendre_eval(std::span<const double> coeffs, double x);

// E[φ(x)φ(x)ᵀ] for x ~ U[a, b]; monomial features only.
Matrix sigma_closed_form(const FeatureSpec& spec, double a, double b);

// (1/n) Σ φ(x_i)φ(x_i)ᵀ.
Matrix sigma_empirical(std::span<const double> xs, const FeatureSpec& spec);

// Population Σ for x ~ U[a, b]: closed form for monomials, and for splines
// the empirical Σ of kSplineSigmaSamples fixed-seed draws, cached per grid.
inline constexpr std::size_t kSplineSigmaSamples = 1'000'000;
inline constexpr std::uint64_t kSplineSigmaSeed = 20240607;
Matrix population_sigma(const FeatureSpec& spec, double a, double b);

// ((1/n) Σ y_i φ(x_i)ᵀ) Σ⁻¹ φ(query).
double reference_predict(std::span<const double> xs, std::span<const double> ys, double query,
                         const FeatureSpec& spec, const Matrix& sigma_inv);

// Coordinatewise reference_predict for an n × D output matrix.
std::vector<double> reference_predict_vector(std::span<const double> xs, const Matrix& ys,
                                             double query, const FeatureSpec& spec,
                                             const Matrix& sigma_inv);

class RankDeficiencyError : public Error {
 public:
  using Error::Error;
};

// Σ_n⁻¹ (1/n) Σ y_i φ(x_i).
std::vector<double> ols_solve(std::span<const double> xs, std::span<const double> ys,
                              const FeatureSpec& spec);

// sup over [a, b] of ‖φ(x)‖₂.
double feature_norm_bound(const FeatureSpec& spec, double a, double b);

struct BernsteinReport {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::size_t trials = 0;
  double mean_norm = 0.0;
  double max_norm = 0.0;
  double bound = 0.0;       // expectation bound
  double tail_freq = 0.0;   // fraction of trials with ‖Y‖ ≥ bound
  double tail_bound = 0.0;  // probability bound at t = bound
  double tau_estimate = 0.0;
  std::vector<double> norms;  // per trial
};

// Y = Σ_n − Σ over independent trials of n uniform draws on [a, b].
BernsteinReport bernstein_diagnostic(std::size_t n, const FeatureSpec& spec, double a, double b,
                                     std::size_t trials, std::uint64_t seed);

std::string bernstein_csv_header();
std::string bernstein_csv_row(const BernsteinReport& r, std::size_t degree);

}  // namespace icreg
