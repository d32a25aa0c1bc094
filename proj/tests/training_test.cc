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

#include <cmath>

#include "gradcheck.h"
#include "icreg/training.h"

namespace icreg {
namespace {

std::vector<Prompt> prompts(std::size_t n, std::size_t count, std::uint64_t seed,
                            std::size_t degree = 2) {
  TaskSource src;
  src.degree = degree;
  return generate_dataset(src, n, count, seed, Stream::kTrainData).prompts;
}

ModelConfig small_model(Architecture a, bool ffn, std::size_t d_embed = 9) {
  ModelConfig c;
  c.architecture = a;
  c.num_blocks = 2;
  c.heads.kind = HeadPolicy::Kind::kFixed;
  c.heads.fixed = 2;
  c.ffn = ffn;
  c.d_embed = d_embed;
  return c;
}

TEST(Init, DeterministicBytes) {
  const ModelConfig c = small_model(Architecture::kTheory, true);
  EXPECT_EQ(init_model(c, 8, 3), init_model(c, 8, 3));
  EXPECT_NE(init_model(c, 8, 3), init_model(c, 8, 4));
}

TEST(Init, SampleStd) {
  ModelConfig c = small_model(Architecture::kAllSoftmax, true, 32);
  c.num_blocks = 4;
  c.heads.fixed = 8;
  TransformerNetwork net = init_model(c, 8, 1);
  double s = 0.0, s2 = 0.0;
  std::size_t n = 0;
  for (const TransformerBlock& b : net.blocks) {
    for (const AttentionHead& h : b.heads) {
      for (const Matrix* m : {&h.q, &*h.k, &h.v})
        for (double v : m->data()) {
          s += v;
          s2 += v * v;
          ++n;
        }
    }
    for (const FfnLayer& l : b.ffn->layers) {
      for (double v : l.weight.data()) {
        s += v;
        s2 += v * v;
        ++n;
      }
      for (double v : l.bias) EXPECT_EQ(v, 0.0);
    }
  }
  ASSERT_GE(n, 100000u);
  const double mean = s / static_cast<double>(n);
  const double sd = std::sqrt(s2 / static_cast<double>(n) - mean * mean);
  EXPECT_GE(sd, 0.009);
  EXPECT_LE(sd, 0.011);
}

TEST(Init, TheoryStructure) {
  ModelConfig c;
  c.num_blocks = 4;
  c.d_embed = 11;
  const TransformerNetwork net = init_model(c, 32, 0);
  ASSERT_EQ(net.blocks.size(), 4u);
  for (std::size_t b = 0; b < 3; ++b) {
    EXPECT_EQ(net.blocks[b].activation.kind, Activation::kRelu);
    EXPECT_TRUE(net.blocks[b].ffn.has_value());
    EXPECT_EQ(net.blocks[b].heads.size(), 4u);
    EXPECT_TRUE(net.blocks[b].heads[0].k.has_value());
  }
  const TransformerBlock& last = net.blocks[3];
  EXPECT_EQ(last.activation.kind, Activation::kLinear);
  EXPECT_EQ(last.heads.size(), 1u);
  EXPECT_FALSE(last.ffn.has_value());
  EXPECT_FALSE(last.heads[0].k.has_value());
  EXPECT_EQ(net.readout_row, layout::y_row(11));
}

TEST(HeadPolicy, ScalingAndParse) {
  HeadPolicy p;
  EXPECT_EQ(p.heads(8), 1u);
  EXPECT_EQ(p.heads(9), 2u);
  EXPECT_EQ(p.heads(1), 1u);
  EXPECT_EQ(p.heads(1024), 128u);
  EXPECT_EQ(HeadPolicy::parse("3").heads(1024), 3u);
  EXPECT_EQ(HeadPolicy::parse("n/8").heads(64), 8u);
  EXPECT_THROW(HeadPolicy::parse("lots"), Error);
}

TEST(Loss, SinglePromptAndBatchMean) {
  const TransformerNetwork net = init_model(small_model(Architecture::kTheory, true), 6, 2);
  const std::vector<Prompt> batch = prompts(6, 3, 5);
  BatchCache cache;
  double sum = 0.0;
  for (const Prompt& p : batch) {
    const double e = predict(net, p) - p.target;
    const std::span<const Prompt> one(&p, 1);
    EXPECT_NEAR(forward_loss(net, one, cache), e * e, 1e-15);
    sum += e * e;
  }
  const double loss = forward_loss(net, batch, cache);
  EXPECT_NEAR(loss, sum / 3.0, 1e-15);
  EXPECT_GE(loss, 0.0);
}

TEST(Loss, PredictMatchesNetworkForward) {
  for (Architecture a :
       {Architecture::kTheory, Architecture::kAllLinear, Architecture::kAllSoftmax}) {
    ModelConfig c = small_model(a, true);
    c.init_std = 0.3;
    const TransformerNetwork net = init_model(c, 5, 9);
    for (const Prompt& p : prompts(5, 4, 9)) {
      EXPECT_NEAR(predict(net, p), network_predict(net, embed(p, 9)), 1e-12);
    }
  }
}

TEST(Loss, NonFiniteNamesPrompt) {
  TransformerNetwork net = init_model(small_model(Architecture::kTheory, false), 4, 1);
  std::vector<Prompt> batch = prompts(4, 3, 1);
  batch[2].xs[0] = NAN;
  BatchCache cache;
  try {
    forward_loss(net, batch, cache);
    FAIL() << "no error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos) << e.what();
  }
}

TEST(Backward, ZeroLossGivesZeroGradients) {
  const TransformerNetwork zero = zeros_like(init_model(small_model(Architecture::kTheory, true), 4, 1));
  std::vector<Prompt> batch = prompts(4, 3, 2);
  for (Prompt& p : batch) p.target = 0.0;
  BatchCache cache;
  EXPECT_EQ(forward_loss(zero, batch, cache), 0.0);
  TransformerNetwork g = backward(zero, cache);
  EXPECT_LE(global_norm(g), 1e-12);

  ModelConfig c = small_model(Architecture::kAllSoftmax, true);
  c.init_std = 0.3;
  const TransformerNetwork net = init_model(c, 4, 3);
  for (Prompt& p : batch) p.target = predict(net, p);
  forward_loss(net, batch, cache);
  TransformerNetwork g2 = backward(net, cache);
  for (auto s : parameter_spans(g2))
    for (double v : s) EXPECT_LE(std::abs(v), 1e-12);
}

TEST(Backward, MatchesFiniteDifferences) {
  for (Architecture a :
       {Architecture::kTheory, Architecture::kAllLinear, Architecture::kAllSoftmax}) {
    for (bool ffn : {true, false}) {
      ModelConfig c = small_model(a, ffn);
      c.init_std = 0.3;
      const TransformerNetwork net = init_model(c, 5, 11);
      const std::vector<Prompt> batch = prompts(5, 3, 11);
      const testing::GradCheckResult r = testing::gradient_check(net, batch);
      EXPECT_GT(r.checked, parameter_count(net) / 2) << architecture_name(a);
      EXPECT_LE(r.worst, 1e-4) << architecture_name(a) << " ffn=" << ffn << " "
                               << r.worst_where;
    }
  }
}

TEST(Backward, DuplicateBatchSameGradient) {
  ModelConfig c = small_model(Architecture::kTheory, true);
  c.init_std = 0.2;
  const TransformerNetwork net = init_model(c, 6, 4);
  const std::vector<Prompt> batch = prompts(6, 4, 4);
  std::vector<Prompt> twice = batch;
  twice.insert(twice.end(), batch.begin(), batch.end());
  BatchCache a, b;
  forward_loss(net, batch, a);
  forward_loss(net, twice, b);
  TransformerNetwork ga = backward(net, a);
  TransformerNetwork gb = backward(net, b);
  auto sa = parameter_spans(ga);
  auto sb = parameter_spans(gb);
  for (std::size_t i = 0; i < sa.size(); ++i)
    for (std::size_t j = 0; j < sa[i].size(); ++j) EXPECT_NEAR(sa[i][j], sb[i][j], 1e-10);
}

TransformerNetwork filled_grads(double value) {
  TransformerNetwork g = zeros_like(init_model(small_model(Architecture::kTheory, true), 4, 0));
  for (auto s : parameter_spans(g)) std::fill(s.begin(), s.end(), value);
  return g;
}

TEST(Clip, BelowLimitUnchanged) {
  TransformerNetwork g = filled_grads(1.0);
  const double scale = 0.5 / global_norm(g);
  for (auto s : parameter_spans(g))
    for (double& v : s) v *= scale;
  const TransformerNetwork before = g;
  EXPECT_NEAR(clip_gradients(g, 1.0), 0.5, 1e-12);
  EXPECT_EQ(g, before);
}

TEST(Clip, AboveLimitRescaledAndIdempotent) {
  TransformerNetwork g = filled_grads(1.0);
  auto spans = parameter_spans(g);
  spans[0][0] = -3.0;
  const double scale = 4.0 / global_norm(g);
  for (auto s : parameter_spans(g))
    for (double& v : s) v *= scale;
  const TransformerNetwork before = g;
  EXPECT_NEAR(clip_gradients(g, 1.0), 4.0, 1e-12);
  EXPECT_NEAR(global_norm(g), 1.0, 1e-12);
  TransformerNetwork pre = before;
  double cross = 0.0;
  auto a = parameter_spans(pre);
  auto b = parameter_spans(g);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) cross += a[i][j] * b[i][j];
  EXPECT_NEAR(cross / (global_norm(pre) * global_norm(g)), 1.0, 1e-12);
  const TransformerNetwork once = g;
  clip_gradients(g, 1.0);
  EXPECT_EQ(g, once);
}

TEST(Adam, FirstStepIsSignTimesRate) {
  TransformerNetwork net = init_model(small_model(Architecture::kTheory, true), 4, 1);
  const TransformerNetwork start = net;
  TransformerNetwork g = filled_grads(0.0);
  auto gs = parameter_spans(g);
  gs[0][0] = 0.37;
  gs[0][1] = -2.5;
  AdamState st = make_adam(net);
  adam_step(st, net, g);
  TransformerNetwork s0 = start;
  const double lr = st.config.lr;
  EXPECT_NEAR(parameter_spans(net)[0][0] - parameter_spans(s0)[0][0], -lr, lr * 1e-6);
  EXPECT_NEAR(parameter_spans(net)[0][1] - parameter_spans(s0)[0][1], lr, lr * 1e-6);
  EXPECT_EQ(parameter_spans(net)[0][2], parameter_spans(s0)[0][2]);
}

TEST(Adam, ZeroGradientNeverMoves) {
  TransformerNetwork net = init_model(small_model(Architecture::kAllLinear, true), 4, 1);
  const TransformerNetwork start = net;
  TransformerNetwork g = zeros_like(net);
  AdamState st = make_adam(net);
  for (int i = 0; i < 50; ++i) adam_step(st, net, g);
  EXPECT_EQ(net, start);
  EXPECT_EQ(st.step, 50u);
}

TEST(Adam, QuadraticTraceMatchesScalarReference) {
  TransformerNetwork net = zeros_like(init_model(small_model(Architecture::kTheory, false), 4, 1));
  for (auto s : parameter_spans(net)) std::fill(s.begin(), s.end(), 1.0);
  AdamState st = make_adam(net);
  TransformerNetwork g = zeros_like(net);
  double w = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 100; ++t) {
    auto ps = parameter_spans(net);
    auto gs = parameter_spans(g);
    for (std::size_t i = 0; i < ps.size(); ++i)
      for (std::size_t j = 0; j < ps[i].size(); ++j) gs[i][j] = 2.0 * ps[i][j];
    adam_step(st, net, g);
    const double gr = 2.0 * w;
    m = 0.9 * m + 0.1 * gr;
    v = 0.999 * v + 0.001 * gr * gr;
    const double mh = m / (1.0 - std::pow(0.9, t));
    const double vh = v / (1.0 - std::pow(0.999, t));
    w -= 0.001 * mh / (std::sqrt(vh) + 1e-8);
    for (auto s : parameter_spans(net))
      for (double x : s) ASSERT_NEAR(x, w, 1e-10) << "step " << t;
  }
  EXPECT_LT(std::abs(w), 1.0);
}

TEST(Train, ZeroRateKeepsParameters) {
  const TransformerNetwork net = init_model(small_model(Architecture::kTheory, true), 5, 1);
  const std::vector<Prompt> data = prompts(5, 40, 1);
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 16;
  tc.adam.lr = 0.0;
  const TrainResult r = train(net, data, tc);
  EXPECT_EQ(r.net, net);
  EXPECT_EQ(r.history.size(), 3u);
  EXPECT_TRUE(std::isnan(r.history[0].test_mse));
}

TEST(Train, DeterministicAndLearns) {
  const TransformerNetwork net = init_model(small_model(Architecture::kTheory, true), 6, 2);
  const std::vector<Prompt> data = prompts(6, 256, 2);
  const std::vector<Prompt> test = prompts(6, 100, 3);
  TrainConfig tc;
  tc.epochs = 8;
  tc.batch_size = 32;
  tc.seed = 7;
  const TrainResult a = train(net, data, tc, test);
  const TrainResult b = train(net, data, tc, test);
  EXPECT_EQ(a.net, b.net);
  EXPECT_EQ(history_csv(a.history), history_csv(b.history));
  EXPECT_EQ(encode_checkpoint(a.net, a.optimizer), encode_checkpoint(b.net, b.optimizer));
  EXPECT_LT(a.history.back().test_mse, evaluate(net, test));
}

TEST(Train, DivergenceAborts) {
  ModelConfig c = small_model(Architecture::kAllLinear, true);
  c.init_std = 3.0;
  const TransformerNetwork net = init_model(c, 6, 2);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 8;
  tc.divergence_limit = 1e-12;
  const TrainResult r = train(net, prompts(6, 16, 2), tc);
  EXPECT_TRUE(r.diverged);
  EXPECT_FALSE(r.message.empty());
}

TEST(Evaluate, LoopOracleAndZeroTasks) {
  const TransformerNetwork net = init_model(small_model(Architecture::kAllSoftmax, true), 5, 3);
  const std::vector<Prompt> test = prompts(5, 20, 3);
  double s = 0.0;
  for (const Prompt& p : test) s += (predict(net, p) - p.target) * (predict(net, p) - p.target);
  EXPECT_NEAR(evaluate(net, test), s / 20.0, 1e-15);
  TaskSource zero;
  zero.kind = RegressionTask::Kind::kLinearSpline;
  zero.grid = KnotGrid{-1.0, 1.0, 2, 1};
  zero.coeff_lo = zero.coeff_hi = 0.0;
  const Dataset z = generate_dataset(zero, 5, 10, 1, Stream::kTestData);
  EXPECT_EQ(evaluate(zeros_like(net), z.prompts), 0.0);
}

TEST(Checkpoint, RoundTrip) {
  const TransformerNetwork net = init_model(small_model(Architecture::kTheory, true), 5, 1);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 10;
  const TrainResult r = train(net, prompts(5, 30, 1), tc);
  const std::string bytes = encode_checkpoint(r.net, r.optimizer);
  TransformerNetwork n2;
  AdamState s2;
  decode_checkpoint(bytes, n2, s2);
  EXPECT_EQ(n2, r.net);
  EXPECT_EQ(s2.step, r.optimizer.step);
  EXPECT_EQ(s2.m, r.optimizer.m);
  EXPECT_EQ(s2.v, r.optimizer.v);
  EXPECT_EQ(encode_checkpoint(n2, s2), bytes);
  EXPECT_THROW(decode_checkpoint(bytes + "x", n2, s2), FormatError);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 8), n2, s2), FormatError);
}

}  // namespace
}  // namespace icreg
