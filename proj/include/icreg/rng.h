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

#include <cstdint>
#include <random>
#include <vector>

namespace icreg {

// SplitMix64 finalizer (Steele, Lea, Flood 2014). Used to expand user seeds
// into engine state and to derive independent per-stream seeds.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t mix_seed(std::uint64_t seed);

// Seed for the index-th child of a master seed within a named stream.
// Children of distinct (stream, index) pairs are decorrelated, which lets
// prompts, tasks and workers draw from independent sequences in any order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

// Stream tags for derive_seed.
enum class Stream : std::uint64_t {
  kTrainData = 1,
  kTestData = 2,
  kInit = 3,
  kShuffle = 4,
  kDiagnostic = 5,
  kSigma = 6,
  kCell = 7,
};

// std::mt19937_64 seeded with four SplitMix64 outputs. The real-valued
// draws are implemented here rather than through <random> distributions,
// whose algorithms differ between standard libraries.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);
  SeededRng(std::uint64_t master, Stream stream, std::uint64_t index)
      : SeededRng(derive_seed(master, static_cast<std::uint64_t>(stream), index)) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi);
  // Standard normal by the Box-Muller transform, caching the second variate.
  double normal();
  double normal(double mean, double std) { return mean + std * normal(); }
  // Uniform integer in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound);
  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace icreg
