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

#include "icreg/rng.h"

#include <cmath>
#include <numbers>

namespace icreg {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed) { return splitmix64(seed); }

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t s = master;
  std::uint64_t a = splitmix64(s);
  s = a ^ (stream * 0xd1342543de82ef95ULL);
  std::uint64_t b = splitmix64(s);
  s = b ^ (index * 0xaf251af3b0f025b5ULL + 1);
  return splitmix64(s);
}

SeededRng::SeededRng(std::uint64_t seed) {
  std::uint64_t s = seed;
  std::seed_seq::result_type words[8];
  for (int i = 0; i < 4; ++i) {
    const std::uint64_t v = splitmix64(s);
    words[2 * i] = static_cast<std::seed_seq::result_type>(v & 0xffffffffu);
    words[2 * i + 1] = static_cast<std::seed_seq::result_type>(v >> 32);
  }
  std::seed_seq seq(std::begin(words), std::end(words));
  engine_.seed(seq);
}

double SeededRng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double SeededRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // 1 - u keeps the logarithm argument in (0, 1].
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(angle);
  has_spare_ = true;
  return r * std::cos(angle);
}

std::uint64_t SeededRng::below(std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % bound;
}

}  // namespace icreg
