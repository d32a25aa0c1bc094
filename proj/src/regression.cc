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

#include "icreg/regression.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

#include "icreg/rng.h"

namespace icreg {

double KnotGrid::knot(long j) const {
  return a + static_cast<double>(j - 1) * (b - a) / static_cast<double>(m);
}

void KnotGrid::validate() const {
  if (m == 0) throw InvalidArgument("knot grid needs at least one bin");
  if (!(b > a)) throw InvalidArgument("knot grid needs a < b");
  if (q != 1 && q != 2) throw InvalidArgument("spline degree must be 1 or 2");
}

std::vector<double> FeatureSpec::features(double x) const {
  return kind == Kind::kMonomial ? monomial_features(x, degree) : bspline_basis(x, grid);
}

std::string FeatureSpec::describe() const {
  std::ostringstream os;
  if (kind == Kind::kMonomial) {
    os << "monomial(d=" << degree << ")";
  } else {
    os << "spline(q=" << grid.q << ",m=" << grid.m << ",a=" << grid.a << ",b=" << grid.b << ")";
  }
  return os.str();
}

std::vector<double> monomial_features(double x, std::size_t d) {
  std::vector<double> v(d + 1);
  v[0] = 1.0;
  for (std::size_t k = 1; k <= d; ++k) v[k] = v[k - 1] * x;
  return v;
}

double cardinal_bspline(double u, int q) {
  if (q < 0) throw InvalidArgument("cardinal_bspline: negative degree");
  if (!(u > 0.0) || !(u < static_cast<double>(q + 1))) return 0.0;
  double binom = 1.0;
  double fact = 1.0;
  for (int i = 2; i <= q; ++i) fact *= i;
  double sum = 0.0;
  for (int i = 0; i <= q + 1; ++i) {
    const double r = u - i;
    if (r > 0.0) {
      const double sign = (i % 2 == 0) ? 1.0 : -1.0;
      sum += sign * binom * std::pow(r, q);
    }
    binom = binom * (q + 1 - i) / (i + 1);
  }
  return sum / fact;
}

std::vector<double> bspline_basis(double x, const KnotGrid& grid) {
  grid.validate();
  std::vector<double> out(grid.basis_count());
  const double h = grid.h();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const long j = grid.first_index() + static_cast<long>(i);
    out[i] = cardinal_bspline((x - grid.knot(j)) / h, grid.q);
  }
  return out;
}

double legendre_eval(std::span<const double> coeffs, double x) {
  if (coeffs.empty()) return 0.0;
  double prev = 1.0;  // P_0
  double sum = coeffs[0];
  if (coeffs.size() == 1) return sum;
  double cur = x;  // P_1
  sum += coeffs[1] * cur;
  for (std::size_t k = 1; k + 1 < coeffs.size(); ++k) {
    const double kk = static_cast<double>(k);
    const double next = ((2.0 * kk + 1.0) * x * cur - kk * prev) / (kk + 1.0);
    prev = cur;
    cur = next;
    sum += coeffs[k + 1] * cur;
  }
  return sum;
}

Matrix sigma_closed_form(const FeatureSpec& spec, double a, double b) {
  if (spec.kind != FeatureSpec::Kind::kMonomial) {
    throw InvalidArgument("sigma_closed_form: only monomial features have a closed form");
  }
  if (!(b > a)) throw InvalidArgument("sigma_closed_form: needs a < b");
  const std::size_t w = spec.dim();
  Matrix s(w, w);
  for (std::size_t i = 0; i < w; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      const int p = static_cast<int>(i + j + 1);
      s(i, j) = (std::pow(b, p) - std::pow(a, p)) / (p * (b - a));
    }
  }
  return s;
}

Matrix sigma_empirical(std::span<const double> xs, const FeatureSpec& spec) {
  if (xs.empty()) throw InvalidArgument("sigma_empirical: no samples");
  const std::size_t w = spec.dim();
  Matrix s(w, w);
  for (double x : xs) {
    const std::vector<double> f = spec.features(x);
    for (std::size_t i = 0; i < w; ++i) {
      if (f[i] == 0.0) continue;
      for (std::size_t j = i; j < w; ++j) s(i, j) += f[i] * f[j];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(xs.size());
  for (std::size_t i = 0; i < w; ++i) {
    for (std::size_t j = i; j < w; ++j) {
      s(i, j) *= inv_n;
      s(j, i) = s(i, j);
    }
  }
  return s;
}

Matrix population_sigma(const FeatureSpec& spec, double a, double b) {
  if (spec.kind == FeatureSpec::Kind::kMonomial) return sigma_closed_form(spec, a, b);
  using Key = std::tuple<double, double, std::size_t, int, double, double>;
  static std::mutex mu;
  static std::map<Key, Matrix> cache;
  const Key key{spec.grid.a, spec.grid.b, spec.grid.m, spec.grid.q, a, b};
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  SeededRng rng(kSplineSigmaSeed);
  std::vector<double> xs(kSplineSigmaSamples);
  for (double& x : xs) x = rng.uniform(a, b);
  Matrix s = sigma_empirical(xs, spec);
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(key, s);
  return s;
}

namespace {

// (1/n) Σ y_i φ(x_i) for one output coordinate.
std::vector<double> moment_vector(std::span<const double> xs, std::span<const double> ys,
                                  const FeatureSpec& spec) {
  if (xs.empty()) throw InvalidArgument("empty context");
  if (xs.size() != ys.size()) {
    throw DimensionError(std::to_string(xs.size()) + " inputs but " +
                         std::to_string(ys.size()) + " outputs");
  }
  std::vector<double> m(spec.dim(), 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::vector<double> f = spec.features(xs[i]);
    for (std::size_t k = 0; k < f.size(); ++k) m[k] += ys[i] * f[k];
  }
  for (double& v : m) v /= static_cast<double>(xs.size());
  return m;
}

void check_sigma_inv(const Matrix& sigma_inv, const FeatureSpec& spec) {
  if (sigma_inv.rows() != spec.dim() || sigma_inv.cols() != spec.dim()) {
    throw DimensionError("sigma_inv is " + sigma_inv.shape_string() + " but features have " +
                         std::to_string(spec.dim()) + " entries");
  }
}

}  // namespace

double reference_predict(std::span<const double> xs, std::span<const double> ys, double query,
                         const FeatureSpec& spec, const Matrix& sigma_inv) {
  check_sigma_inv(sigma_inv, spec);
  const std::vector<double> m = moment_vector(xs, ys, spec);
  const std::vector<double> fq = spec.features(query);
  return dot(m, matvec(sigma_inv, fq));
}

std::vector<double> reference_predict_vector(std::span<const double> xs, const Matrix& ys,
                                             double query, const FeatureSpec& spec,
                                             const Matrix& sigma_inv) {
  if (ys.rows() != xs.size()) {
    throw DimensionError("output matrix has " + std::to_string(ys.rows()) + " rows for " +
                         std::to_string(xs.size()) + " inputs");
  }
  std::vector<double> out(ys.cols());
  for (std::size_t j = 0; j < ys.cols(); ++j) {
    const std::vector<double> col = ys.column(j);
    out[j] = reference_predict(xs, col, query, spec, sigma_inv);
  }
  return out;
}

std::vector<double> ols_solve(std::span<const double> xs, std::span<const double> ys,
                              const FeatureSpec& spec) {
  if (xs.size() < spec.dim()) {
    throw RankDeficiencyError("ols_solve: " + std::to_string(xs.size()) + " samples for " +
                              std::to_string(spec.dim()) + " features");
  }
  const Matrix sn = sigma_empirical(xs, spec);
  const std::vector<double> m = moment_vector(xs, ys, spec);
  try {
    return solve(sn, m);
  } catch (const SingularMatrixError& e) {
    throw RankDeficiencyError(std::string("ols_solve: empirical covariance is rank deficient (") +
                              e.what() + ")");
  }
}

double feature_norm_bound(const FeatureSpec& spec, double a, double b) {
  if (spec.kind == FeatureSpec::Kind::kSpline) {
    // Nonnegative basis summing to at most one: ‖b‖₂ ≤ ‖b‖₁ ≤ 1.
    return 1.0;
  }
  const double r = std::max(std::abs(a), std::abs(b));
  double sq = 0.0;
  double p = 1.0;
  for (std::size_t k = 0; k <= spec.degree; ++k) {
    sq += p;
    p *= r * r;
  }
  return std::sqrt(sq);
}

BernsteinReport bernstein_diagnostic(std::size_t n, const FeatureSpec& spec, double a, double b,
                                     std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw InvalidArgument("bernstein_diagnostic: trials must be at least 1");
  if (n == 0) throw InvalidArgument("bernstein_diagnostic: n must be at least 1");
  const Matrix sigma = population_sigma(spec, a, b);
  BernsteinReport r;
  r.n = n;
  r.dim = spec.dim();
  r.trials = trials;
  const double rv = feature_norm_bound(spec, a, b);
  const double rv2 = rv * rv;
  const double logd = std::log(2.0 * static_cast<double>(r.dim));
  const double nn = static_cast<double>(n);
  r.bound = std::sqrt(2.0 * rv2 * rv2 * logd / nn) + 2.0 * rv2 * logd / (3.0 * nn);
  const double variance = rv2 * rv2 / nn;
  const double uniform_bound = 2.0 * rv2 / nn;
  const double t = r.bound;
  r.tail_bound = 2.0 * static_cast<double>(r.dim) *
                 std::exp(-(t * t / 2.0) / (variance + uniform_bound * t / 3.0));
  try {
    r.tau_estimate = spectral_norm(invert(sigma));
  } catch (const SingularMatrixError&) {
    r.tau_estimate = INFINITY;
  }

  std::size_t exceed = 0;
  double sum = 0.0;
  std::vector<double> xs(n);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    SeededRng rng(seed, Stream::kDiagnostic, trial);
    for (double& x : xs) x = rng.uniform(a, b);
    Matrix y = sigma_empirical(xs, spec);
    y -= sigma;
    const double norm = spectral_norm(y);
    r.norms.push_back(norm);
    sum += norm;
    r.max_norm = std::max(r.max_norm, norm);
    if (norm >= t) ++exceed;
  }
  r.mean_norm = sum / static_cast<double>(trials);
  r.tail_freq = static_cast<double>(exceed) / static_cast<double>(trials);
  return r;
}

std::string bernstein_csv_header() { return "n,d,mean_norm,bound,tail_freq,tail_bound"; }

std::string bernstein_csv_row(const BernsteinReport& r, std::size_t degree) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g,%.17g,%.17g,%.17g", r.n, degree, r.mean_norm,
                r.bound, r.tail_freq, r.tail_bound);
  return buf;
}

}  // namespace icreg
