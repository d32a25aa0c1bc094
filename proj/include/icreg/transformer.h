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
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "icreg/linalg.h"

namespace icreg {

// Row and column indices throughout the library are 0-based. For a prompt
// embedded with height d_embed the fixed rows are:
//   0             inputs x_1..x_n, x
//   d_embed - 5   outputs y_1..y_n, 0 (last output row when vector-valued)
//   d_embed - 4   zero
//   d_embed - 3   cos(tπ/2ℓ)
//   d_embed - 2   sin(tπ/2ℓ)
//   d_embed - 1   constant 1
namespace layout {
inline constexpr std::size_t kMinEmbed = 8;
inline constexpr std::size_t x_row() { return 0; }
inline constexpr std::size_t y_row(std::size_t d_embed) { return d_embed - 5; }
inline constexpr std::size_t pe_cos_row(std::size_t d_embed) { return d_embed - 3; }
inline constexpr std::size_t pe_sin_row(std::size_t d_embed) { return d_embed - 2; }
inline constexpr std::size_t bias_row(std::size_t d_embed) { return d_embed - 1; }
}  // namespace layout

// Positional encoding (cos, sin) of 0-based column t in a sequence of length ell.
std::pair<double, double> positional_encoding(std::size_t t, std::size_t ell);

enum class Activation : std::uint8_t { kRelu = 0, kLinear = 1, kSoftmax = 2 };

enum class ScoreScaling : std::uint8_t {
  kUnit = 0,          // scores used as computed
  kInvSqrtEmbed = 1,  // 1/√d_embed
  kInvContext = 2,    // 1/ρ(ℓ) with ρ(ℓ) = ℓ - 1
  kFixed = 3,         // caller-provided constant
};

struct ActivationSpec {
  Activation kind = Activation::kRelu;
  ScoreScaling scaling = ScoreScaling::kUnit;
  double fixed_scale = 1.0;

  double scale(std::size_t d_embed, std::size_t ell) const;

  static ActivationSpec relu(ScoreScaling s = ScoreScaling::kUnit) {
    return {Activation::kRelu, s, 1.0};
  }
  static ActivationSpec linear(ScoreScaling s = ScoreScaling::kInvContext) {
    return {Activation::kLinear, s, 1.0};
  }
  static ActivationSpec softmax(ScoreScaling s = ScoreScaling::kInvSqrtEmbed) {
    return {Activation::kSoftmax, s, 1.0};
  }
  bool operator==(const ActivationSpec&) const = default;
};

const char* activation_name(Activation a);

// One attention head. Without a key matrix the head is in merged form: q
// holds KᵀQ and the scores are HᵀqH.
struct AttentionHead {
  Matrix q;
  std::optional<Matrix> k;
  Matrix v;
  bool operator==(const AttentionHead&) const = default;
};

struct FfnLayer {
  Matrix weight;  // out × in
  std::vector<double> bias;
  bool operator==(const FfnLayer&) const = default;
};

// Columnwise ReLU network: ReLU after every layer except the last. The block
// adds its own residual around it.
struct Ffn {
  std::vector<FfnLayer> layers;
  bool operator==(const Ffn&) const = default;
};

struct TransformerBlock {
  std::vector<AttentionHead> heads;
  ActivationSpec activation;
  std::optional<Ffn> ffn;
  bool operator==(const TransformerBlock&) const = default;
};

struct TransformerNetwork {
  std::size_t d_embed = 0;
  std::vector<TransformerBlock> blocks;
  // Decoder: rows [readout_row, readout_row + readout_count) of the last column.
  std::size_t readout_row = 0;
  std::size_t readout_count = 1;
  // Free-form key=value description carried through serialization.
  std::string metadata;
  bool operator==(const TransformerNetwork&) const = default;
};

struct EmbeddedPrompt {
  Matrix matrix;  // d_embed × (n + 1)
  std::size_t n = 0;
};

// Scalar-output embedding. Throws InvalidArgument when d_embed < 8 or the
// context is empty.
EmbeddedPrompt embed_prompt(std::span<const double> xs, std::span<const double> ys,
                            double query, std::size_t d_embed);

// Vector-valued embedding: ys is n × D and occupies rows
// [d_embed - 4 - D, d_embed - 4).
EmbeddedPrompt embed_vector_prompt(std::span<const double> xs, const Matrix& ys,
                                   double query, std::size_t d_embed);

// V·H·σ(scale·(KH)ᵀ(QH)). Softmax normalizes each query column over keys.
Matrix attention_forward(const AttentionHead& head, const Matrix& h,
                         const ActivationSpec& activation);

Matrix mha_forward(const TransformerBlock& block, const Matrix& h);

// The FFN map alone, applied to every column of x.
Matrix ffn_forward(const Ffn& ffn, const Matrix& x);

// FFN(MHA(H)+H) + MHA(H) + H, or MHA(H) + H without an FFN.
Matrix block_forward(const TransformerBlock& block, const Matrix& h);

// Runs every block and returns the final matrix.
Matrix network_trace(const TransformerNetwork& net, const EmbeddedPrompt& prompt);

// Decoded output, one entry per readout row.
std::vector<double> network_forward(const TransformerNetwork& net,
                                    const EmbeddedPrompt& prompt);

// Scalar convenience: requires readout_count == 1.
double network_predict(const TransformerNetwork& net, const EmbeddedPrompt& prompt);

// Checks every shape invariant; throws DimensionError on the first violation.
void validate_network(const TransformerNetwork& net);

std::size_t head_count(const TransformerNetwork& net);
// Largest absolute weight over all heads and FFN layers.
double max_weight(const TransformerNetwork& net);

}  // namespace icreg
