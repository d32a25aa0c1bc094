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
#include <filesystem>

#include "icreg/network_io.h"
#include "icreg/tasks.h"

namespace icreg {
namespace {

TEST(PolyTask, ConstantForDegreeZero) {
  SeededRng rng(1);
  const RegressionTask t = sample_poly_task(0, rng);
  ASSERT_EQ(t.coeffs.size(), 1u);
  EXPECT_LE(std::abs(t.coeffs[0]), 1.0);
  EXPECT_EQ(t.eval(-0.7), t.eval(0.4));
}

TEST(PolyTask, Deterministic) {
  SeededRng a(42), b(42);
  EXPECT_EQ(sample_poly_task(4, a).coeffs, sample_poly_task(4, b).coeffs);
}

TEST(PolyTask, CoefficientMean) {
  SeededRng rng(2);
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const RegressionTask t = sample_poly_task(4, rng);
    ASSERT_EQ(t.coeffs.size(), 5u);
    for (double c : t.coeffs) ASSERT_LE(std::abs(c), 1.0);
    sum += t.coeffs[0];
  }
  EXPECT_NEAR(sum / 10000, 0.0, 0.03);
}

TEST(PolyTask, EvalIsLegendre) {
  SeededRng rng(3);
  const RegressionTask t = sample_poly_task(3, rng);
  EXPECT_EQ(t.eval(0.25), legendre_eval(t.coeffs, 0.25));
}

TEST(SplineTask, DegenerateRangeIsConstant) {
  SeededRng rng(4);
  const KnotGrid g{-1.0, 1.0, 5, 1};
  const RegressionTask t = sample_spline_task(g, 0.3, 0.3, rng);
  ASSERT_EQ(t.coeffs.size(), 6u);
  for (int i = 0; i <= 20; ++i) EXPECT_NEAR(t.eval(-1.0 + 0.1 * i), 0.3, 1e-12);
}

TEST(SplineTask, KnotValuesAreCoefficients) {
  SeededRng rng(5);
  const KnotGrid g{-1.0, 1.0, 5, 1};
  const RegressionTask t = sample_spline_task(g, -1.0, 1.0, rng);
  for (long j = 1; j <= 6; ++j) EXPECT_NEAR(t.eval(g.knot(j)), t.coeffs[j - 1], 1e-12);
}

TEST(SplineTask, Deterministic) {
  SeededRng a(6), b(6);
  const KnotGrid g{-1.0, 1.0, 5, 1};
  EXPECT_EQ(sample_spline_task(g, -1, 1, a).coeffs, sample_spline_task(g, -1, 1, b).coeffs);
}

TEST(Prompt, SinglePair) {
  SeededRng rng(7);
  const RegressionTask t = sample_poly_task(2, rng);
  const Prompt p = generate_prompt(t, 1, -1, 1, rng);
  EXPECT_EQ(p.xs.size(), 1u);
  EXPECT_EQ(p.ys.size(), 1u);
  EXPECT_EQ(p.ys[0], t.eval(p.xs[0]));
  EXPECT_EQ(p.target, t.eval(p.query));
}

TEST(Prompt, SupportMeanAndKolmogorovSmirnov) {
  SeededRng rng(8);
  const RegressionTask t = sample_poly_task(2, rng);
  std::vector<double> xs;
  double sum = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Prompt p = generate_prompt(t, 100, -1, 1, rng);
    for (double x : p.xs) {
      ASSERT_GE(x, -1.0);
      ASSERT_LE(x, 1.0);
      sum += x;
    }
    ASSERT_GE(p.query, -1.0);
    ASSERT_LE(p.query, 1.0);
    xs.insert(xs.end(), p.xs.begin(), p.xs.end());
  }
  EXPECT_NEAR(sum / static_cast<double>(xs.size()), 0.0, 0.02);
  std::vector<double> sample(xs.begin(), xs.begin() + 10000);
  std::sort(sample.begin(), sample.end());
  double ks = 0.0;
  const double n = static_cast<double>(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double cdf = 0.5 * (sample[i] + 1.0);
    ks = std::max({ks, std::abs(cdf - i / n), std::abs((i + 1) / n - cdf)});
  }
  EXPECT_LT(ks, 1.63 / std::sqrt(n));
}

TEST(Prompt, EmbedMatchesLayout) {
  SeededRng rng(9);
  const Prompt p = generate_prompt(sample_poly_task(2, rng), 4, -1, 1, rng);
  const EmbeddedPrompt e = embed(p, 9);
  EXPECT_EQ(e.matrix(0, 4), p.query);
  EXPECT_EQ(e.matrix(layout::y_row(9), 2), p.ys[2]);
}

TEST(Dataset, SingletonAndLabelFidelity) {
  TaskSource src;
  const Dataset one = generate_dataset(src, 8, 1, 3, Stream::kTrainData);
  EXPECT_EQ(one.prompts.size(), 1u);
  const Dataset ds = generate_dataset(src, 8, 50, 3, Stream::kTrainData);
  for (std::size_t i = 0; i < ds.prompts.size(); ++i) {
    const Prompt& p = ds.prompts[i];
    for (std::size_t j = 0; j < p.xs.size(); ++j)
      EXPECT_EQ(p.ys[j], legendre_eval(ds.tasks[i].coeffs, p.xs[j]));
    EXPECT_EQ(p.target, legendre_eval(ds.tasks[i].coeffs, p.query));
  }
}

TEST(Dataset, DistinctSeedsAndFreshTasks) {
  TaskSource src;
  const Dataset a = generate_dataset(src, 4, 1000, 1, Stream::kTrainData);
  const Dataset b = generate_dataset(src, 4, 1, 2, Stream::kTrainData);
  EXPECT_NE(a.tasks[0].coeffs, b.tasks[0].coeffs);
  std::vector<std::vector<double>> coeffs;
  for (const RegressionTask& t : a.tasks) coeffs.push_back(t.coeffs);
  std::sort(coeffs.begin(), coeffs.end());
  EXPECT_EQ(std::adjacent_find(coeffs.begin(), coeffs.end()), coeffs.end());
  const Dataset test = generate_dataset(src, 4, 1, 1, Stream::kTestData);
  EXPECT_NE(test.prompts[0], a.prompts[0]);
}

TEST(Dataset, PrefixStable) {
  TaskSource src;
  const Dataset small = generate_dataset(src, 6, 10, 5, Stream::kTrainData);
  const Dataset big = generate_dataset(src, 6, 40, 5, Stream::kTrainData);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(small.prompts[i], big.prompts[i]);
}

TEST(Dataset, SerializationRoundTrip) {
  TaskSource src;
  src.kind = RegressionTask::Kind::kLinearSpline;
  src.grid = KnotGrid{-1.0, 1.0, 5, 1};
  const Dataset ds = generate_dataset(src, 7, 20, 11, Stream::kTestData);
  const std::string bytes = encode_dataset(ds);
  EXPECT_EQ(bytes, encode_dataset(generate_dataset(src, 7, 20, 11, Stream::kTestData)));
  const Dataset back = decode_dataset(bytes);
  EXPECT_EQ(back.source, ds.source);
  EXPECT_EQ(back.n, ds.n);
  EXPECT_EQ(back.seed, ds.seed);
  EXPECT_EQ(back.prompts, ds.prompts);
  EXPECT_EQ(encode_dataset(back), bytes);
  const auto path = std::filesystem::temp_directory_path() / "icreg_tasks_test.dat";
  save_dataset(ds, path);
  EXPECT_EQ(encode_dataset(load_dataset(path)), bytes);
  std::filesystem::remove(path);
  EXPECT_THROW(decode_dataset(bytes.substr(0, bytes.size() - 3)), FormatError);
}

TEST(Rng, ReproducibleStreams) {
  SeededRng a(123), b(123), c(124);
  for (int i = 0; i < 10; ++i) {
    const auto va = a.next_u64();
    EXPECT_EQ(va, b.next_u64());
    EXPECT_NE(va, c.next_u64());
  }
  EXPECT_NE(derive_seed(1, 1, 0), derive_seed(1, 2, 0));
  EXPECT_NE(derive_seed(1, 1, 0), derive_seed(1, 1, 1));
  SeededRng u(5);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform01();
    ASSERT_GE(v, 0.0);
    ASSERT_LT(v, 1.0);
    ASSERT_LT(u.below(7), 7u);
  }
}

TEST(Rng, NormalMoments) {
  SeededRng rng(6);
  double s = 0.0, s2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.02);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Rng, ShuffleIsPermutation) {
  SeededRng rng(7);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
}

}  // namespace
}  // namespace icreg
