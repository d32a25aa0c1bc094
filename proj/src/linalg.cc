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

#include "icreg/linalg.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace icreg {

SingularMatrixError::SingularMatrixError(std::size_t pivot_index,
                                         double pivot_magnitude)
    : Error("singular matrix: pivot " + std::to_string(pivot_index) +
            " has magnitude " + std::to_string(pivot_magnitude)),
      pivot_index_(pivot_index),
      pivot_magnitude_(pivot_magnitude) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string());
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

std::string Matrix::shape_string() const {
  std::ostringstream os;
  os << rows_ << "x" << cols_;
  return os.str();
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shapes " + a.shape_string() +
                         " and " + b.shape_string() + " differ");
  }
}

}  // namespace

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "add");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "subtract");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: cannot multiply " + a.shape_string() + " by " +
                         b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* o = out.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += aik * brow[j];
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: cannot multiply transpose of " +
                         a.shape_string() + " by " + b.shape_string());
  }
  Matrix out(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* brow = b.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      double* o = out.row(i).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += aki * brow[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: cannot multiply " + a.shape_string() +
                         " by transpose of " + b.shape_string());
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      out(i, j) = dot(a.row(i), b.row(j));
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  }
  return out;
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) {
    throw DimensionError("matvec: matrix " + a.shape_string() +
                         " with vector of length " + std::to_string(x.size()));
  }
  std::vector<double> out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.row(i), x);
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("dot: lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

namespace {

void require_square(const Matrix& a, const char* op) {
  if (a.rows() != a.cols()) {
    throw DimensionError(std::string(op) + ": matrix " + a.shape_string() +
                         " is not square");
  }
}

// Row-reduces [a | rhs] in place so that a becomes the identity.
void gauss_jordan(Matrix& a, Matrix& rhs) {
  const std::size_t n = a.rows();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double best = std::abs(a(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > best) {
        best = std::abs(a(r, col));
        pivot = r;
      }
    }
    if (!(best >= kSingularPivot)) throw SingularMatrixError(col, best);
    if (pivot != col) {
      std::swap_ranges(a.row(col).begin(), a.row(col).end(), a.row(pivot).begin());
      std::swap_ranges(rhs.row(col).begin(), rhs.row(col).end(),
                       rhs.row(pivot).begin());
    }
    const double inv = 1.0 / a(col, col);
    for (double& v : a.row(col)) v *= inv;
    for (double& v : rhs.row(col)) v *= inv;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a(r, col);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) a(r, c) -= f * a(col, c);
      for (std::size_t c = 0; c < rhs.cols(); ++c) rhs(r, c) -= f * rhs(col, c);
    }
  }
}

}  // namespace

Matrix invert(const Matrix& a) {
  require_square(a, "invert");
  Matrix work = a;
  Matrix inv = Matrix::identity(a.rows());
  gauss_jordan(work, inv);
  return inv;
}

std::vector<double> solve(const Matrix& a, std::span<const double> b) {
  require_square(a, "solve");
  if (b.size() != a.rows()) {
    throw DimensionError("solve: matrix " + a.shape_string() +
                         " with right-hand side of length " +
                         std::to_string(b.size()));
  }
  Matrix work = a;
  Matrix rhs(b.size(), 1, std::vector<double>(b.begin(), b.end()));
  gauss_jordan(work, rhs);
  return rhs.column(0);
}

double spectral_norm(const Matrix& a) {
  if (a.empty()) return 0.0;
  const std::size_t n = a.cols();
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  const Matrix gram = matmul_tn(a, a);

  double estimate = 0.0;
  double gap = 0.0;
  for (int iter = 0; iter < 10000; ++iter) {
    std::vector<double> w = matvec(gram, v);
    const double norm = std::sqrt(dot(w, w));
    if (norm == 0.0) {
      if (iter == 0 && max_norm(a) != 0.0) {
        // The all-ones start is in the null space; restart on the column of
        // largest norm.
        std::size_t best = 0;
        double best_norm = -1.0;
        for (std::size_t c = 0; c < n; ++c) {
          const double g = gram(c, c);
          if (g > best_norm) {
            best_norm = g;
            best = c;
          }
        }
        std::fill(v.begin(), v.end(), 0.0);
        v[best] = 1.0;
        continue;
      }
      return 0.0;
    }
    // Rayleigh quotient of the gram matrix at the normalized iterate.
    const double next = std::sqrt(dot(v, w));
    gap = std::abs(next - estimate);
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
    if (iter > 0 && gap <= 1e-12 * next) return next;
    estimate = next;
  }
  throw ConvergenceError("spectral_norm: power iteration did not converge", gap);
}

double max_norm(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

bool all_finite(const Matrix& a) {
  for (double v : a.data()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace icreg
