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
#include <filesystem>
#include <string>
#include <vector>

#include "icreg/regression.h"
#include "icreg/rng.h"
#include "icreg/transformer.h"

namespace icreg {

struct RegressionTask {
  enum class Kind : std::uint8_t { kLegendre = 0, kLinearSpline = 1 };
  Kind kind = Kind::kLegendre;
  std::vector<double> coeffs;  // Legendre or B-spline coefficients
  KnotGrid grid;               // spline tasks only

  double eval(double x) const;
};

// d+1 Legendre coefficients drawn from U[-1, 1].
RegressionTask sample_poly_task(std::size_t d, SeededRng& rng);

// m+1 linear B-spline coefficients drawn from U[lo, hi].
RegressionTask sample_spline_task(const KnotGrid& grid, double lo, double hi, SeededRng& rng);

struct Prompt {
  std::vector<double> xs;
  std::vector<double> ys;
  double query = 0.0;
  double target = 0.0;
  bool operator==(const Prompt&) const = default;
};

// Context and query drawn i.i.d. from U[a, b]; outputs by task.eval.
Prompt generate_prompt(const RegressionTask& task, std::size_t n, double a, double b,
                       SeededRng& rng);

EmbeddedPrompt embed(const Prompt& p, std::size_t d_embed);

// Describes how each prompt's task is drawn.
struct TaskSource {
  RegressionTask::Kind kind = RegressionTask::Kind::kLegendre;
  std::size_t degree = 4;
  KnotGrid grid;
  double coeff_lo = -1.0;
  double coeff_hi = 1.0;
  double x_lo = -1.0;
  double x_hi = 1.0;

  RegressionTask sample(SeededRng& rng) const;
  // Embedding height of the matching theory-model layout.
  std::size_t embed_dim() const;
  FeatureSpec feature_spec() const;
  bool operator==(const TaskSource&) const = default;
};

struct Dataset {
  TaskSource source;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::vector<Prompt> prompts;
  std::vector<RegressionTask> tasks;  // not serialized
};

// L prompts; prompt i uses its own task and generator seeded by
// derive_seed(seed, stream, i).
Dataset generate_dataset(const TaskSource& source, std::size_t n, std::size_t count,
                         std::uint64_t seed, Stream stream);

// Binary dataset file: magic "ICRGDAT1", header, then fixed-width records
// of n inputs, n outputs, the query and the target, all f64 little-endian.
inline constexpr std::uint32_t kDatasetVersion = 1;
std::string encode_dataset(const Dataset& ds);
Dataset decode_dataset(const std::string& bytes);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace icreg
