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
#include <stdexcept>
#include <string>

namespace icreg {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A pivot fell below the singularity threshold during elimination.
class SingularMatrixError : public Error {
 public:
  SingularMatrixError(std::size_t pivot_index, double pivot_magnitude);
  std::size_t pivot_index() const { return pivot_index_; }
  double pivot_magnitude() const { return pivot_magnitude_; }

 private:
  std::size_t pivot_index_;
  double pivot_magnitude_;
};

// An iterative method ran out of iterations.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_gap)
      : Error(what), last_gap_(last_gap) {}
  double last_gap() const { return last_gap_; }

 private:
  double last_gap_;
};

// A caller-supplied argument violates an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated serialized data.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace icreg
