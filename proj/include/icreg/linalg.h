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
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "icreg/error.h"

namespace icreg {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  // Nested-list literal, one inner list per row.
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double> column(std::size_t c) const;
  std::string shape_string() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);

// Textbook product; throws DimensionError naming both shapes.
Matrix matmul(const Matrix& a, const Matrix& b);
// aᵀ·b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a·bᵀ without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
std::vector<double> matvec(const Matrix& a, std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);

// Inverse by Gauss-Jordan elimination with partial pivoting. Throws
// SingularMatrixError when a pivot magnitude drops below kSingularPivot.
Matrix invert(const Matrix& a);
// Solves a·x = b for square a, same pivoting rule as invert().
std::vector<double> solve(const Matrix& a, std::span<const double> b);

inline constexpr double kSingularPivot = 1e-12;

// Largest singular value by power iteration on aᵀa, started from the
// normalized all-ones vector. Throws ConvergenceError after 10000 iterations.
double spectral_norm(const Matrix& a);

// Largest absolute entry; zero for an empty matrix.
double max_norm(const Matrix& a);

bool all_finite(const Matrix& a);

}  // namespace icreg
