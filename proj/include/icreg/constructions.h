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
#include <string>
#include <vector>

#include "icreg/regression.h"
#include "icreg/transformer.h"

namespace icreg {

// Upper limit on the gate gain of an interaction head. Beyond this the
// rounding error in off-target gate scores approaches the safety margin.
inline constexpr double kMaxGateGain = 1e15;

// Every interaction head satisfies max|Q|,|K| ≤ C·d_embed⁴·μ²·ℓ²·U² with this
// C, where μ is taken as at least 1.
inline constexpr double kInteractionWeightConstant = 1.0;

// A ReLU head that adds scale·σ(⟨q_data·h_{t1}, k_data·h_{t2}⟩ + shift) to
// entry (out_row, t1) and leaves every other entry alone. Indices are
// 0-based. The data kernels are (d_embed-3) × d_embed and may read any row
// of H; the last three rows of Q and K are reserved for the gate. A nonzero
// shift is stored in a free data row as a bias·bias term.
struct InteractionSpec {
  std::size_t t1 = 0;
  std::size_t t2 = 0;
  std::size_t out_row = 0;
  Matrix q_data;
  Matrix k_data;
  double scale = 1.0;
  double shift = 0.0;
};

// Zero data kernel of the right shape for d_embed.
Matrix empty_kernel(std::size_t d_embed);

struct InteractionReport {
  double gain = 0.0;       // G
  double mu = 0.0;         // max entry of the data kernels
  double max_weight = 0.0; // max entry of the built Q and K
  double bound_ratio = 0.0;  // max_weight / (d⁴·max(μ,1)²·ℓ²·U²)
};

// U bounds |H| strictly on every row the data kernels read.
AttentionHead build_interaction_head(const InteractionSpec& spec, std::size_t ell,
                                     std::size_t d_embed, double data_bound,
                                     InteractionReport* report = nullptr);

// Residual FFN subtracting `shift` from rows [row_lo, row_hi] in columns
// [col_lo, col_hi) and leaving everything else unchanged. Rows are 0-based
// and must not reach the positional-encoding or bias rows; col_lo == col_hi
// gives the identity.
Ffn build_decrementing_ffn(std::size_t row_lo, std::size_t row_hi, std::size_t col_lo,
                           std::size_t col_hi, double shift, std::size_t ell,
                           std::size_t d_embed);

struct ConstructionOptions {
  double input_bound = 1.0;  // R: every input satisfies |x| ≤ R
};

// Strict bound on |x^p| for p ≤ d.
double power_bound(std::size_t d, double input_bound);
// M = 10(1+U)².
double shift_constant(double data_bound);

// B₀: row 1 ← 1 and row 2 ← x in every column. 2(n+1) heads.
TransformerBlock build_copy_block(std::size_t d, std::size_t n, std::size_t d_embed,
                                  const ConstructionOptions& opts = {});
inline TransformerBlock build_copy_block(std::size_t d, std::size_t n) {
  return build_copy_block(d, n, d + 7);
}

// ⌈log₂ d⌉ blocks; block j multiplies x^{2^j} by x^k for k = 1..2^j and writes
// x^{2^j + k} into row 2^j + k + 1 of each column. Assumes the B₀ layout.
std::vector<TransformerBlock> build_power_doubling_blocks(std::size_t d, std::size_t n,
                                                          std::size_t d_embed,
                                                          const ConstructionOptions& opts = {});
inline std::vector<TransformerBlock> build_power_doubling_blocks(std::size_t d, std::size_t n) {
  return build_power_doubling_blocks(d, n, d + 7);
}

// Linear-attention readout: merged Q holds sigma_inv on rows/cols starting
// at feature_row, V holds p·I on the out_dim rows starting at y_first.
TransformerBlock build_ols_linear_block(const Matrix& sigma_inv, std::size_t feature_row,
                                        std::size_t y_first, std::size_t out_dim, double p,
                                        std::size_t d_embed);
// Monomial layout: d_embed = d+7, features in rows 1..d+1, y in row d+2.
TransformerBlock build_ols_linear_block(const Matrix& sigma_inv, std::size_t d, double p);

// B₀ followed by the doubling blocks, with the scalar readout row.
TransformerNetwork build_poly_featurizer(std::size_t d, std::size_t n,
                                         const ConstructionOptions& opts = {});

TransformerNetwork build_poly_oracle(std::size_t d, std::size_t n, const Matrix& sigma_inv,
                                     const ConstructionOptions& opts = {});

// One attention-only block of 3(n+1)(m+1) heads writing B₁ʲ(x) into row j+1.
TransformerBlock build_linear_spline_block(const KnotGrid& grid, std::size_t n,
                                           const ConstructionOptions& opts = {});

// Block 1 writes γ_k^j(x) = ReLU(x - t_j - kh) into row 4(j+1)+k+1 for
// k = 0..3, j = -1..m; block 2 combines their squares into B₂ʲ(x) at row
// 4(m+1)+j+6. d_embed = 5m+16.
std::vector<TransformerBlock> build_quadratic_spline_blocks(const KnotGrid& grid, std::size_t n,
                                                            const ConstructionOptions& opts = {});

// Shift used by the quadratic squaring heads.
double quadratic_shift_constant(const KnotGrid& grid, double input_bound);

TransformerNetwork build_linear_spline_oracle(const KnotGrid& grid, std::size_t n,
                                              const Matrix& sigma_inv,
                                              const ConstructionOptions& opts = {});
TransformerNetwork build_quadratic_spline_oracle(const KnotGrid& grid, std::size_t n,
                                                 const Matrix& sigma_inv,
                                                 const ConstructionOptions& opts = {});

// d_embed = D+d+6; y occupies rows d+2..d+1+D and the decoder reads them.
TransformerNetwork build_vector_valued_oracle(std::size_t d, std::size_t n, std::size_t out_dim,
                                              const Matrix& sigma_inv,
                                              const ConstructionOptions& opts = {});

// First feature row and embedding height of each oracle layout.
std::size_t spline_feature_row(const KnotGrid& grid);
std::size_t spline_embed_dim(const KnotGrid& grid);

// Everything needed to rebuild an oracle bit-for-bit; carried in the
// network metadata as space-separated key=value pairs.
struct OracleRecipe {
  enum class Kind { kPoly, kLinearSpline, kQuadraticSpline, kVector };
  Kind kind = Kind::kPoly;
  std::size_t d = 4;
  std::size_t n = 16;
  std::size_t out_dim = 1;
  KnotGrid grid;
  double input_bound = 1.0;
  double dist_a = -1.0;  // Σ is taken for x ~ U[dist_a, dist_b]
  double dist_b = 1.0;

  FeatureSpec feature_spec() const;
  std::string to_metadata() const;
  static OracleRecipe from_metadata(const std::string& meta);
};

const char* oracle_kind_name(OracleRecipe::Kind k);
OracleRecipe::Kind parse_oracle_kind(const std::string& name);

TransformerNetwork build_oracle(const OracleRecipe& recipe);

}  // namespace icreg
