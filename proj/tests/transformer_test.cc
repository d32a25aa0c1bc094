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
#include <numbers>

#include "icreg/constructions.h"
#include "icreg/network_io.h"
#include "icreg/rng.h"
#include "icreg/transformer.h"

namespace icreg {
namespace {

Matrix random_matrix(std::size_t r, std::size_t c, SeededRng& rng) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.uniform(-1.0, 1.0);
  return m;
}

AttentionHead random_head(std::size_t d, SeededRng& rng, bool with_key = true) {
  AttentionHead h;
  h.q = random_matrix(d, d, rng);
  if (with_key) h.k = random_matrix(d, d, rng);
  h.v = random_matrix(d, d, rng);
  return h;
}

EmbeddedPrompt random_prompt(std::size_t n, std::size_t d_embed, SeededRng& rng) {
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = rng.uniform(-1.0, 1.0);
    ys[i] = rng.uniform(-1.0, 1.0);
  }
  return embed_prompt(xs, ys, rng.uniform(-1.0, 1.0), d_embed);
}

TEST(Embed, SinglePairLayout) {
  const std::vector<double> xs{0.5}, ys{0.25};
  const EmbeddedPrompt p = embed_prompt(xs, ys, 1.0, 9);
  const Matrix& m = p.matrix;
  ASSERT_EQ(m.rows(), 9u);
  ASSERT_EQ(m.cols(), 2u);
  EXPECT_EQ(m(0, 0), 0.5);
  EXPECT_EQ(m(0, 1), 1.0);
  EXPECT_EQ(m(4, 0), 0.25);
  EXPECT_EQ(m(4, 1), 0.0);
  EXPECT_NEAR(m(6, 0), std::cos(std::numbers::pi / 4), 1e-15);
  EXPECT_NEAR(m(7, 0), std::sin(std::numbers::pi / 4), 1e-15);
  EXPECT_NEAR(m(6, 1), 0.0, 1e-15);
  EXPECT_NEAR(m(7, 1), 1.0, 1e-15);
  EXPECT_EQ(m(8, 0), 1.0);
  EXPECT_EQ(m(8, 1), 1.0);
}

TEST(Embed, MiddleRowsZeroAndColumnCount) {
  SeededRng rng(1);
  for (std::size_t n : {1, 3, 10}) {
    for (std::size_t d_embed : {8, 11, 15}) {
      const EmbeddedPrompt p = random_prompt(n, d_embed, rng);
      ASSERT_EQ(p.matrix.cols(), n + 1);
      for (std::size_t r = 1; r < d_embed - 5; ++r)
        for (std::size_t c = 0; c <= n; ++c) EXPECT_EQ(p.matrix(r, c), 0.0);
      for (std::size_t c = 0; c <= n; ++c) EXPECT_EQ(p.matrix(d_embed - 4, c), 0.0);
    }
  }
}

TEST(Embed, PositionalEncodingMatchesTrig) {
  SeededRng rng(2);
  const EmbeddedPrompt p = random_prompt(3, 10, rng);
  const double angle = 3.0 * std::numbers::pi / 8.0;
  EXPECT_NEAR(p.matrix(layout::pe_cos_row(10), 2), std::cos(angle), 1e-12);
  EXPECT_NEAR(p.matrix(layout::pe_sin_row(10), 2), std::sin(angle), 1e-12);
}

TEST(Embed, Errors) {
  const std::vector<double> xs{0.5}, ys{0.25}, none;
  EXPECT_THROW(embed_prompt(xs, ys, 0.0, 7), InvalidArgument);
  EXPECT_THROW(embed_prompt(none, none, 0.0, 9), InvalidArgument);
}

TEST(Attention, ZeroValueGivesZero) {
  SeededRng rng(3);
  const EmbeddedPrompt p = random_prompt(4, 9, rng);
  for (ActivationSpec act : {ActivationSpec::relu(), ActivationSpec::linear(),
                             ActivationSpec::softmax()}) {
    AttentionHead h = random_head(9, rng, act.kind != Activation::kLinear);
    h.v = Matrix(9, 9);
    EXPECT_EQ(max_norm(attention_forward(h, p.matrix, act)), 0.0);
  }
}

TEST(Attention, LinearScalarCase) {
  AttentionHead h;
  h.q = Matrix{{2}};
  h.v = Matrix{{2}};
  // V·H·(HᵀQH)/ρ = 2·2·(2·2·2)/ρ.
  const ActivationSpec unit{Activation::kLinear, ScoreScaling::kFixed, 1.0};
  EXPECT_EQ(attention_forward(h, Matrix{{2}}, unit), (Matrix{{32}}));
  const ActivationSpec halved{Activation::kLinear, ScoreScaling::kFixed, 0.5};
  EXPECT_EQ(attention_forward(h, Matrix{{2}}, halved), (Matrix{{16}}));
}

TEST(Attention, ReluMatchesDirectFormula) {
  SeededRng rng(4);
  const std::size_t d = 9;
  const EmbeddedPrompt p = random_prompt(4, d, rng);
  const AttentionHead h = random_head(d, rng);
  const Matrix& H = p.matrix;
  const Matrix scores = matmul_tn(matmul(*h.k, H), matmul(h.q, H));
  Matrix act = scores;
  for (double& v : act.data()) v = std::max(v, 0.0);
  const Matrix want = matmul(matmul(h.v, H), act);
  const Matrix got = attention_forward(h, H, ActivationSpec::relu());
  for (std::size_t i = 0; i < got.size(); ++i)
    EXPECT_NEAR(got.data()[i], want.data()[i], 1e-12);
}

TEST(Attention, SoftmaxColumnsSumToOne) {
  // With V = I restricted to the bias row, each output entry is the column
  // sum of the softmax weights.
  SeededRng rng(5);
  const std::size_t d = 9;
  const EmbeddedPrompt p = random_prompt(6, d, rng);
  AttentionHead h = random_head(d, rng);
  for (double& v : h.q.data()) v *= 5.0;
  h.v = Matrix(d, d);
  h.v(0, layout::bias_row(d)) = 1.0;
  const Matrix out = attention_forward(h, p.matrix, ActivationSpec::softmax());
  for (std::size_t c = 0; c < out.cols(); ++c) EXPECT_NEAR(out(0, c), 1.0, 1e-12);
}

TEST(Mha, OneHeadEqualsAttention) {
  SeededRng rng(6);
  const EmbeddedPrompt p = random_prompt(3, 8, rng);
  TransformerBlock b;
  b.heads.push_back(random_head(8, rng));
  EXPECT_EQ(mha_forward(b, p.matrix), attention_forward(b.heads[0], p.matrix, b.activation));
}

TEST(Mha, TwoIdenticalHeadsDouble) {
  SeededRng rng(7);
  const EmbeddedPrompt p = random_prompt(3, 8, rng);
  TransformerBlock b;
  b.heads.push_back(random_head(8, rng));
  b.heads.push_back(b.heads[0]);
  const Matrix one = attention_forward(b.heads[0], p.matrix, b.activation);
  EXPECT_EQ(mha_forward(b, p.matrix), 2.0 * one);
}

TEST(Mha, FiveHeadsMatchLoopSum) {
  SeededRng rng(8);
  const EmbeddedPrompt p = random_prompt(5, 10, rng);
  for (ActivationSpec act : {ActivationSpec::relu(), ActivationSpec::softmax()}) {
    TransformerBlock b;
    b.activation = act;
    Matrix want(10, 6);
    for (int i = 0; i < 5; ++i) {
      b.heads.push_back(random_head(10, rng));
      want += attention_forward(b.heads.back(), p.matrix, act);
    }
    const Matrix got = mha_forward(b, p.matrix);
    for (std::size_t i = 0; i < got.size(); ++i)
      EXPECT_NEAR(got.data()[i], want.data()[i], 1e-12);
  }
}

TransformerBlock zero_block(std::size_t d, bool ffn) {
  TransformerBlock b;
  b.heads.push_back({Matrix(d, d), Matrix(d, d), Matrix(d, d)});
  if (ffn) {
    b.ffn = Ffn{};
    b.ffn->layers.push_back({Matrix(d, d), std::vector<double>(d, 0.0)});
    b.ffn->layers.push_back({Matrix(d, d), std::vector<double>(d, 0.0)});
  }
  return b;
}

TEST(Block, ResidualIdentity) {
  SeededRng rng(9);
  const EmbeddedPrompt p = random_prompt(4, 9, rng);
  EXPECT_EQ(block_forward(zero_block(9, true), p.matrix), p.matrix);
  TransformerBlock b = zero_block(9, false);
  b.heads[0].q = random_matrix(9, 9, rng);
  b.heads[0].k = random_matrix(9, 9, rng);
  EXPECT_EQ(block_forward(b, p.matrix), p.matrix);
}

TEST(Block, FfnFormula) {
  SeededRng rng(10);
  const std::size_t d = 8;
  const EmbeddedPrompt p = random_prompt(3, d, rng);
  TransformerBlock b = zero_block(d, true);
  b.heads[0] = random_head(d, rng);
  for (FfnLayer& l : b.ffn->layers) {
    l.weight = random_matrix(d, d, rng);
    for (double& v : l.bias) v = rng.uniform(-1.0, 1.0);
  }
  const Matrix mid = mha_forward(b, p.matrix) + p.matrix;
  const Matrix want = ffn_forward(*b.ffn, mid) + mid;
  const Matrix got = block_forward(b, p.matrix);
  for (std::size_t i = 0; i < got.size(); ++i)
    EXPECT_NEAR(got.data()[i], want.data()[i], 1e-12);
}

TEST(Block, CopyBlockFillsRows) {
  const std::vector<double> xs{0.3, -0.4}, ys{0.7, -0.2};
  const EmbeddedPrompt p = embed_prompt(xs, ys, 0.1, 9);
  const Matrix out = block_forward(build_copy_block(2, 2), p.matrix);
  Matrix want = p.matrix;
  const double x[] = {0.3, -0.4, 0.1};
  for (std::size_t c = 0; c < 3; ++c) {
    want(1, c) = 1.0;
    want(2, c) = x[c];
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    EXPECT_NEAR(out.data()[i], want.data()[i], 1e-12);
}

TEST(Network, ZeroWeightsPredictZero) {
  SeededRng rng(11);
  TransformerNetwork net;
  net.d_embed = 9;
  net.readout_row = layout::y_row(9);
  net.blocks.push_back(zero_block(9, true));
  net.blocks.push_back(zero_block(9, false));
  EXPECT_EQ(network_predict(net, random_prompt(5, 9, rng)), 0.0);
}

TEST(Network, DimensionMismatchRejected) {
  SeededRng rng(12);
  TransformerNetwork net;
  net.d_embed = 9;
  net.readout_row = layout::y_row(9);
  net.blocks.push_back(zero_block(9, false));
  EXPECT_THROW(network_predict(net, random_prompt(3, 10, rng)), DimensionError);
}

TEST(Network, SerializationRoundTrip) {
  SeededRng rng(13);
  TransformerNetwork net;
  net.d_embed = 9;
  net.readout_row = layout::y_row(9);
  net.metadata = "kind=test";
  TransformerBlock a = zero_block(9, true);
  a.heads[0] = random_head(9, rng);
  a.ffn->layers[0].weight = random_matrix(9, 9, rng);
  a.ffn->layers[1].bias[3] = -1.5;
  TransformerBlock b;
  b.activation = ActivationSpec::linear();
  b.heads.push_back(random_head(9, rng, false));
  net.blocks = {a, b};
  const std::string bytes = encode_network(net);
  const TransformerNetwork back = decode_network(bytes);
  EXPECT_EQ(back, net);
  EXPECT_EQ(encode_network(back), bytes);
  EXPECT_THROW(decode_network(bytes.substr(0, bytes.size() - 1)), FormatError);
  EXPECT_THROW(decode_network("NOTANET1"), FormatError);
}

}  // namespace
}  // namespace icreg
