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

#include "icreg/constructions.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <numbers>
#include <sstream>

namespace icreg {

namespace {

double row_l1(const Matrix& m, std::size_t r) {
  double s = 0.0;
  for (double v : m.row(r)) s += std::abs(v);
  return s;
}

bool row_is_zero(const Matrix& m, std::size_t r) {
  for (double v : m.row(r)) {
    if (v != 0.0) return false;
  }
  return true;
}

// Gate row computing G·cos(θ_t - θ_target) - G·cos(0), arranged so that the
// target column evaluates to exactly 0: the subtracted constant is formed
// with the same products and the same summation order as the head's
// projection (cos row, then sin row, then bias row).
void write_gate_row(Matrix& m, std::size_t row, std::size_t target, std::size_t ell,
                    double gain) {
  const std::size_t d = m.rows();
  const auto [c, s] = positional_encoding(target, ell);
  const double w_cos = gain * c;
  const double w_sin = gain * s;
  const double p_cos = w_cos * c;
  const double p_sin = w_sin * s;
  const double at_target = p_cos + p_sin;
  m(row, layout::pe_cos_row(d)) = w_cos;
  m(row, layout::pe_sin_row(d)) = w_sin;
  m(row, layout::bias_row(d)) = -at_target;
}

void check_kernel(const Matrix& k, std::size_t d_embed, const char* name) {
  if (k.rows() != d_embed - 3 || k.cols() != d_embed) {
    throw DimensionError(std::string("interaction head: ") + name + " is " + k.shape_string() +
                         ", expected " + std::to_string(d_embed - 3) + "x" +
                         std::to_string(d_embed));
  }
}

AttentionHead interaction(std::size_t column, std::size_t out_row, const Matrix& q,
                          const Matrix& k, double scale, double shift, std::size_t ell,
                          std::size_t d_embed, double bound) {
  InteractionSpec spec;
  spec.t1 = column;
  spec.t2 = column;
  spec.out_row = out_row;
  spec.q_data = q;
  spec.k_data = k;
  spec.scale = scale;
  spec.shift = shift;
  return build_interaction_head(spec, ell, d_embed, bound);
}

}  // namespace

Matrix empty_kernel(std::size_t d_embed) {
  if (d_embed < 5) throw InvalidArgument("interaction heads need d_embed >= 5");
  return Matrix(d_embed - 3, d_embed);
}

AttentionHead build_interaction_head(const InteractionSpec& spec, std::size_t ell,
                                     std::size_t d_embed, double data_bound,
                                     InteractionReport* report) {
  if (d_embed < 5) throw InvalidArgument("interaction head: d_embed must be at least 5");
  if (ell < 1) throw InvalidArgument("interaction head: ell must be at least 1");
  if (!(data_bound > 0.0)) throw InvalidArgument("interaction head: data bound must be positive");
  if (spec.t1 >= ell || spec.t2 >= ell) {
    throw InvalidArgument("interaction head: columns " + std::to_string(spec.t1) + "," +
                          std::to_string(spec.t2) + " outside a sequence of length " +
                          std::to_string(ell));
  }
  if (spec.out_row >= d_embed) throw InvalidArgument("interaction head: out_row out of range");
  check_kernel(spec.q_data, d_embed, "q_data");
  check_kernel(spec.k_data, d_embed, "k_data");

  const std::size_t d = d_embed;
  const std::size_t data_rows = d - 3;
  Matrix q(d, d);
  Matrix k(d, d);
  for (std::size_t r = 0; r < data_rows; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      q(r, c) = spec.q_data(r, c);
      k(r, c) = spec.k_data(r, c);
    }
  }
  if (spec.shift != 0.0) {
    std::size_t free_row = data_rows;
    for (std::size_t r = 0; r < data_rows; ++r) {
      if (row_is_zero(spec.q_data, r) && row_is_zero(spec.k_data, r)) {
        free_row = r;
        break;
      }
    }
    if (free_row == data_rows) {
      throw InvalidArgument("interaction head: no free data row to hold the shift");
    }
    q(free_row, layout::bias_row(d)) = 1.0;
    k(free_row, layout::bias_row(d)) = spec.shift;
  }

  double mu = 0.0;
  double data_max = 0.0;
  const double u2 = data_bound * data_bound;
  for (std::size_t r = 0; r < data_rows; ++r) {
    for (std::size_t c = 0; c < d; ++c) mu = std::max({mu, std::abs(q(r, c)), std::abs(k(r, c))});
    data_max += row_l1(q, r) * row_l1(k, r) * u2;
  }
  // Every off-target score carries a gate of at most -G(1 - cos(π/2ℓ)),
  // which must outweigh the largest possible data score.
  const double margin = 1.0 - std::cos(std::numbers::pi / (2.0 * static_cast<double>(ell)));
  const double gain = (data_max + 1.0) / margin;
  if (!(gain <= kMaxGateGain)) {
    throw InvalidArgument("interaction head: gate gain " + std::to_string(gain) +
                          " exceeds the limit; use a shorter context or a smaller data bound");
  }

  const std::size_t key_gate = d - 3;
  const std::size_t query_gate = d - 2;
  write_gate_row(k, key_gate, spec.t2, ell, gain);
  q(key_gate, layout::bias_row(d)) = 1.0;
  write_gate_row(q, query_gate, spec.t1, ell, gain);
  k(query_gate, layout::bias_row(d)) = 1.0;

  Matrix v(d, d);
  v(spec.out_row, layout::bias_row(d)) = spec.scale;

  if (report != nullptr) {
    report->gain = gain;
    report->mu = mu;
    report->max_weight = std::max(max_norm(q), max_norm(k));
    const double dd = static_cast<double>(d);
    const double l = static_cast<double>(ell);
    const double m = std::max(mu, 1.0);
    report->bound_ratio = report->max_weight / (dd * dd * dd * dd * m * m * l * l * u2);
  }
  return AttentionHead{std::move(q), std::move(k), std::move(v)};
}

Ffn build_decrementing_ffn(std::size_t row_lo, std::size_t row_hi, std::size_t col_lo,
                           std::size_t col_hi, double shift, std::size_t ell,
                           std::size_t d_embed) {
  if (d_embed < 5) throw InvalidArgument("decrementing ffn: d_embed must be at least 5");
  if (row_lo > row_hi || row_hi > d_embed - 4) {
    throw InvalidArgument("decrementing ffn: rows [" + std::to_string(row_lo) + ", " +
                          std::to_string(row_hi) + "] outside the data rows");
  }
  if (col_lo > col_hi || col_hi > ell) {
    throw InvalidArgument("decrementing ffn: columns [" + std::to_string(col_lo) + ", " +
                          std::to_string(col_hi) + ") outside a sequence of length " +
                          std::to_string(ell));
  }
  if (!(shift > 0.0)) throw InvalidArgument("decrementing ffn: shift must be positive");

  const std::size_t d = d_embed;
  const double step = std::numbers::pi / (2.0 * static_cast<double>(ell));
  // Angles of the 1-based positions k1 = col_lo and k2 = col_hi + 1; the
  // decremented columns are those strictly between them.
  auto angle = [&](std::size_t k) { return static_cast<double>(k) * step; };
  const double phi_lo = 0.5 * (angle(col_lo) + angle(col_lo + 1));
  const double phi_hi = 0.5 * (angle(col_hi) + angle(col_hi + 1));
  const double inv = 1.0 / std::sin(step / 2.0);

  // Layer 1: a_1 = ReLU(1/2 - sin(θ - φ_lo)/s), a_2 = ReLU(1/2 + sin(θ - φ_hi)/s).
  // Each is 0 on the kept side of its threshold and at least 3/2 beyond it.
  FfnLayer l1{Matrix(2, d), {0.5, 0.5}};
  l1.weight(0, layout::pe_cos_row(d)) = std::sin(phi_lo) * inv;
  l1.weight(0, layout::pe_sin_row(d)) = -std::cos(phi_lo) * inv;
  l1.weight(1, layout::pe_cos_row(d)) = -std::sin(phi_hi) * inv;
  l1.weight(1, layout::pe_sin_row(d)) = std::cos(phi_hi) * inv;
  // Layer 2: s_i = ReLU(1 - a_i), exactly 0 or 1.
  FfnLayer l2{Matrix{{-1.0, 0.0}, {0.0, -1.0}}, {1.0, 1.0}};
  // Layer 3: indicator = ReLU(s_1 + s_2 - 1).
  FfnLayer l3{Matrix{{1.0, 1.0}}, {-1.0}};
  // Layer 4 (linear): -shift · indicator on the chosen rows.
  FfnLayer l4{Matrix(d, 1), std::vector<double>(d, 0.0)};
  for (std::size_t r = row_lo; r <= row_hi; ++r) l4.weight(r, 0) = -shift;
  return Ffn{{std::move(l1), std::move(l2), std::move(l3), std::move(l4)}};
}

double power_bound(std::size_t d, double input_bound) {
  return std::pow(std::max(1.0, input_bound), static_cast<double>(d)) + 1.0;
}

double shift_constant(double data_bound) { return 10.0 * (1.0 + data_bound) * (1.0 + data_bound); }

TransformerBlock build_copy_block(std::size_t d, std::size_t n, std::size_t d_embed,
                                  const ConstructionOptions& opts) {
  if (d < 1) throw InvalidArgument("copy block: degree must be at least 1");
  if (n < 1) throw InvalidArgument("copy block: n must be at least 1");
  if (d_embed < d + 7) throw InvalidArgument("copy block: d_embed too small for degree");
  const std::size_t ell = n + 1;
  const std::size_t bias = layout::bias_row(d_embed);
  const double bound = power_bound(d, opts.input_bound);
  const double shift = shift_constant(bound);

  TransformerBlock block;
  block.activation = ActivationSpec::relu();
  Matrix sel_bias = empty_kernel(d_embed);
  sel_bias(0, bias) = 1.0;
  Matrix sel_x = empty_kernel(d_embed);
  sel_x(0, layout::x_row()) = 1.0;
  for (std::size_t i = 0; i < ell; ++i) {
    block.heads.push_back(interaction(i, 1, sel_bias, sel_bias, 1.0, 0.0, ell, d_embed, bound));
  }
  for (std::size_t i = 0; i < ell; ++i) {
    block.heads.push_back(interaction(i, 2, sel_bias, sel_x, 1.0, shift, ell, d_embed, bound));
  }
  block.ffn = build_decrementing_ffn(2, 2, 0, ell, shift, ell, d_embed);
  return block;
}

std::vector<TransformerBlock> build_power_doubling_blocks(std::size_t d, std::size_t n,
                                                          std::size_t d_embed,
                                                          const ConstructionOptions& opts) {
  if (n < 1) throw InvalidArgument("doubling blocks: n must be at least 1");
  if (d_embed < d + 7) throw InvalidArgument("doubling blocks: d_embed too small for degree");
  const std::size_t ell = n + 1;
  const double bound = power_bound(d, opts.input_bound);
  const double shift = shift_constant(bound);
  std::vector<TransformerBlock> blocks;
  // Power p lives in row p + 1.
  for (std::size_t b = 1; b < d; b *= 2) {
    TransformerBlock block;
    block.activation = ActivationSpec::relu();
    const std::size_t top = std::min(2 * b, d);
    Matrix q = empty_kernel(d_embed);
    q(0, b + 1) = 1.0;
    for (std::size_t k = 1; b + k <= top; ++k) {
      Matrix kk = empty_kernel(d_embed);
      kk(0, k + 1) = 1.0;
      for (std::size_t i = 0; i < ell; ++i) {
        block.heads.push_back(interaction(i, b + k + 1, q, kk, 1.0, shift, ell, d_embed, bound));
      }
    }
    block.ffn = build_decrementing_ffn(b + 2, top + 1, 0, ell, shift, ell, d_embed);
    blocks.push_back(std::move(block));
  }
  return blocks;
}

TransformerBlock build_ols_linear_block(const Matrix& sigma_inv, std::size_t feature_row,
                                        std::size_t y_first, std::size_t out_dim, double p,
                                        std::size_t d_embed) {
  if (sigma_inv.rows() != sigma_inv.cols()) {
    throw DimensionError("ols block: sigma_inv " + sigma_inv.shape_string() + " is not square");
  }
  const std::size_t w = sigma_inv.rows();
  if (feature_row + w > d_embed || y_first + out_dim > d_embed) {
    throw DimensionError("ols block: sigma_inv " + sigma_inv.shape_string() +
                         " does not fit an embedding of height " + std::to_string(d_embed));
  }
  AttentionHead head{Matrix(d_embed, d_embed), std::nullopt, Matrix(d_embed, d_embed)};
  for (std::size_t i = 0; i < w; ++i) {
    for (std::size_t j = 0; j < w; ++j) head.q(feature_row + i, feature_row + j) = sigma_inv(i, j);
  }
  for (std::size_t j = 0; j < out_dim; ++j) head.v(y_first + j, y_first + j) = p;
  TransformerBlock block;
  block.activation = ActivationSpec::linear(ScoreScaling::kInvContext);
  block.heads.push_back(std::move(head));
  return block;
}

TransformerBlock build_ols_linear_block(const Matrix& sigma_inv, std::size_t d, double p) {
  if (sigma_inv.rows() != d + 1 || sigma_inv.cols() != d + 1) {
    throw DimensionError("ols block: sigma_inv is " + sigma_inv.shape_string() +
                         " for degree " + std::to_string(d));
  }
  const std::size_t d_embed = d + 7;
  return build_ols_linear_block(sigma_inv, 1, layout::y_row(d_embed), 1, p, d_embed);
}

TransformerNetwork build_poly_featurizer(std::size_t d, std::size_t n,
                                         const ConstructionOptions& opts) {
  TransformerNetwork net;
  net.d_embed = d + 7;
  net.readout_row = layout::y_row(net.d_embed);
  net.blocks.push_back(build_copy_block(d, n, net.d_embed, opts));
  for (auto& b : build_power_doubling_blocks(d, n, net.d_embed, opts)) {
    net.blocks.push_back(std::move(b));
  }
  return net;
}

TransformerNetwork build_poly_oracle(std::size_t d, std::size_t n, const Matrix& sigma_inv,
                                     const ConstructionOptions& opts) {
  TransformerNetwork net = build_poly_featurizer(d, n, opts);
  net.blocks.push_back(build_ols_linear_block(sigma_inv, d, 1.0));
  return net;
}

std::size_t spline_feature_row(const KnotGrid& grid) {
  return grid.q == 1 ? 1 : 4 * (grid.m + 1) + 5;
}

std::size_t spline_embed_dim(const KnotGrid& grid) {
  return grid.q == 1 ? grid.m + 7 : 5 * grid.m + 16;
}

TransformerBlock build_linear_spline_block(const KnotGrid& grid, std::size_t n,
                                           const ConstructionOptions& opts) {
  grid.validate();
  if (grid.q != 1) throw InvalidArgument("linear spline block needs a degree-1 grid");
  if (n < 1) throw InvalidArgument("linear spline block: n must be at least 1");
  const std::size_t d_embed = spline_embed_dim(grid);
  const std::size_t ell = n + 1;
  const std::size_t bias = layout::bias_row(d_embed);
  const double bound = std::max(1.0, opts.input_bound) + 1.0;
  const double h = grid.h();
  const double coef[3] = {1.0 / h, -2.0 / h, 1.0 / h};

  Matrix q = empty_kernel(d_embed);
  q(0, bias) = 1.0;
  q(1, bias) = 1.0;
  TransformerBlock block;
  block.activation = ActivationSpec::relu();
  for (std::size_t i = 0; i < ell; ++i) {
    for (std::size_t j = 0; j <= grid.m; ++j) {
      for (std::size_t k = 0; k < 3; ++k) {
        Matrix kk = empty_kernel(d_embed);
        kk(0, layout::x_row()) = 1.0;
        // t_j + kh is the knot t_{j+k}.
        kk(1, bias) = -grid.knot(static_cast<long>(j + k));
        block.heads.push_back(interaction(i, j + 1, q, kk, coef[k], 0.0, ell, d_embed, bound));
      }
    }
  }
  return block;
}

namespace {

double gamma_bound(const KnotGrid& grid, double input_bound) {
  // γ = ReLU(x - t) is largest at x = R against the leftmost knot used.
  return std::max(1.0, input_bound - grid.knot(grid.first_index())) + 1.0;
}

double quadratic_max_coef(const KnotGrid& grid) {
  const double h = grid.h();
  return 3.0 / (2.0 * h * h);
}

}  // namespace

double quadratic_shift_constant(const KnotGrid& grid, double input_bound) {
  const double u = gamma_bound(grid, input_bound);
  return shift_constant(u) * std::max(1.0, quadratic_max_coef(grid));
}

std::vector<TransformerBlock> build_quadratic_spline_blocks(const KnotGrid& grid, std::size_t n,
                                                            const ConstructionOptions& opts) {
  grid.validate();
  if (grid.q != 2) throw InvalidArgument("quadratic spline blocks need a degree-2 grid");
  if (n < 1) throw InvalidArgument("quadratic spline blocks: n must be at least 1");
  const std::size_t d_embed = spline_embed_dim(grid);
  const std::size_t ell = n + 1;
  const std::size_t bias = layout::bias_row(d_embed);
  const long m = static_cast<long>(grid.m);
  const double h = grid.h();
  auto gamma_row = [](long j, long k) { return static_cast<std::size_t>(4 * (j + 1) + k + 1); };
  const std::size_t b_first = spline_feature_row(grid);

  TransformerBlock first;
  first.activation = ActivationSpec::relu();
  const double x_bound = std::max(1.0, opts.input_bound) + 1.0;
  Matrix q = empty_kernel(d_embed);
  q(0, bias) = 1.0;
  q(1, bias) = 1.0;
  for (std::size_t i = 0; i < ell; ++i) {
    for (long j = -1; j <= m; ++j) {
      for (long k = 0; k < 4; ++k) {
        Matrix kk = empty_kernel(d_embed);
        kk(0, layout::x_row()) = 1.0;
        kk(1, bias) = -grid.knot(j + k);
        first.heads.push_back(
            interaction(i, gamma_row(j, k), q, kk, 1.0, 0.0, ell, d_embed, x_bound));
      }
    }
  }

  TransformerBlock second;
  second.activation = ActivationSpec::relu();
  const double g_bound = gamma_bound(grid, opts.input_bound);
  const double shift = quadratic_shift_constant(grid, opts.input_bound);
  const double upsilon[4] = {1.0, -3.0, 3.0, -1.0};
  for (std::size_t i = 0; i < ell; ++i) {
    for (long j = -1; j <= m; ++j) {
      const std::size_t out = b_first + static_cast<std::size_t>(j + 1);
      for (long k = 0; k < 4; ++k) {
        const std::size_t g = gamma_row(j, k);
        Matrix qq = empty_kernel(d_embed);
        Matrix kk = empty_kernel(d_embed);
        qq(0, g) = 1.0;
        kk(0, g) = upsilon[k] / (2.0 * h * h);
        second.heads.push_back(interaction(i, out, qq, kk, 1.0, shift, ell, d_embed, g_bound));
      }
    }
  }
  second.ffn = build_decrementing_ffn(b_first, b_first + grid.basis_count() - 1, 0, ell,
                                      4.0 * shift, ell, d_embed);
  std::vector<TransformerBlock> out;
  out.push_back(std::move(first));
  out.push_back(std::move(second));
  return out;
}

TransformerNetwork build_linear_spline_oracle(const KnotGrid& grid, std::size_t n,
                                              const Matrix& sigma_inv,
                                              const ConstructionOptions& opts) {
  TransformerNetwork net;
  net.d_embed = spline_embed_dim(grid);
  net.readout_row = layout::y_row(net.d_embed);
  net.blocks.push_back(build_linear_spline_block(grid, n, opts));
  net.blocks.push_back(build_ols_linear_block(sigma_inv, spline_feature_row(grid),
                                              net.readout_row, 1, 1.0, net.d_embed));
  return net;
}

TransformerNetwork build_quadratic_spline_oracle(const KnotGrid& grid, std::size_t n,
                                                 const Matrix& sigma_inv,
                                                 const ConstructionOptions& opts) {
  TransformerNetwork net;
  net.d_embed = spline_embed_dim(grid);
  net.readout_row = layout::y_row(net.d_embed);
  for (auto& b : build_quadratic_spline_blocks(grid, n, opts)) net.blocks.push_back(std::move(b));
  net.blocks.push_back(build_ols_linear_block(sigma_inv, spline_feature_row(grid),
                                              net.readout_row, 1, 1.0, net.d_embed));
  return net;
}

TransformerNetwork build_vector_valued_oracle(std::size_t d, std::size_t n, std::size_t out_dim,
                                              const Matrix& sigma_inv,
                                              const ConstructionOptions& opts) {
  if (out_dim < 1) throw InvalidArgument("vector-valued oracle: output dimension must be >= 1");
  if (sigma_inv.rows() != d + 1 || sigma_inv.cols() != d + 1) {
    throw DimensionError("vector-valued oracle: sigma_inv is " + sigma_inv.shape_string() +
                         " for degree " + std::to_string(d));
  }
  TransformerNetwork net;
  net.d_embed = out_dim + d + 6;
  net.readout_row = d + 2;
  net.readout_count = out_dim;
  net.blocks.push_back(build_copy_block(d, n, net.d_embed, opts));
  for (auto& b : build_power_doubling_blocks(d, n, net.d_embed, opts)) {
    net.blocks.push_back(std::move(b));
  }
  net.blocks.push_back(build_ols_linear_block(sigma_inv, 1, d + 2, out_dim, 1.0, net.d_embed));
  return net;
}

const char* oracle_kind_name(OracleRecipe::Kind k) {
  switch (k) {
    case OracleRecipe::Kind::kPoly:
      return "poly";
    case OracleRecipe::Kind::kLinearSpline:
      return "linear-spline";
    case OracleRecipe::Kind::kQuadraticSpline:
      return "quadratic-spline";
    case OracleRecipe::Kind::kVector:
      return "vector";
  }
  return "unknown";
}

OracleRecipe::Kind parse_oracle_kind(const std::string& name) {
  if (name == "poly") return OracleRecipe::Kind::kPoly;
  if (name == "linear-spline") return OracleRecipe::Kind::kLinearSpline;
  if (name == "quadratic-spline") return OracleRecipe::Kind::kQuadraticSpline;
  if (name == "vector") return OracleRecipe::Kind::kVector;
  throw InvalidArgument("unknown oracle kind '" + name +
                        "' (expected poly, linear-spline, quadratic-spline or vector)");
}

FeatureSpec OracleRecipe::feature_spec() const {
  switch (kind) {
    case Kind::kPoly:
    case Kind::kVector:
      return FeatureSpec::monomial(d);
    case Kind::kLinearSpline: {
      KnotGrid g = grid;
      g.q = 1;
      return FeatureSpec::spline(g);
    }
    case Kind::kQuadraticSpline: {
      KnotGrid g = grid;
      g.q = 2;
      return FeatureSpec::spline(g);
    }
  }
  return FeatureSpec::monomial(d);
}

std::string OracleRecipe::to_metadata() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "oracle=%s d=%zu n=%zu D=%zu m=%zu a=%.17g b=%.17g R=%.17g dist_a=%.17g "
                "dist_b=%.17g",
                oracle_kind_name(kind), d, n, out_dim, grid.m, grid.a, grid.b, input_bound,
                dist_a, dist_b);
  return buf;
}

OracleRecipe OracleRecipe::from_metadata(const std::string& meta) {
  std::map<std::string, std::string> kv;
  std::istringstream in(meta);
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw FormatError("metadata token without '=': " + tok);
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError(std::string("metadata lacks '") + key + "'");
    return it->second;
  };
  auto num = [&](const char* key) {
    const std::string& s = get(key);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw FormatError("bad number for " + std::string(key));
    return v;
  };
  auto count = [&](const char* key) {
    const std::string& s = get(key);
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0') throw FormatError("bad count for " + std::string(key));
    return static_cast<std::size_t>(v);
  };
  OracleRecipe r;
  r.kind = parse_oracle_kind(get("oracle"));
  r.d = count("d");
  r.n = count("n");
  r.out_dim = count("D");
  r.grid.m = count("m");
  r.grid.a = num("a");
  r.grid.b = num("b");
  r.grid.q = r.kind == Kind::kQuadraticSpline ? 2 : 1;
  r.input_bound = num("R");
  r.dist_a = num("dist_a");
  r.dist_b = num("dist_b");
  return r;
}

TransformerNetwork build_oracle(const OracleRecipe& recipe) {
  const FeatureSpec spec = recipe.feature_spec();
  const Matrix sigma_inv = invert(population_sigma(spec, recipe.dist_a, recipe.dist_b));
  const ConstructionOptions opts{recipe.input_bound};
  TransformerNetwork net;
  switch (recipe.kind) {
    case OracleRecipe::Kind::kPoly:
      net = build_poly_oracle(recipe.d, recipe.n, sigma_inv, opts);
      break;
    case OracleRecipe::Kind::kLinearSpline:
      net = build_linear_spline_oracle(spec.grid, recipe.n, sigma_inv, opts);
      break;
    case OracleRecipe::Kind::kQuadraticSpline:
      net = build_quadratic_spline_oracle(spec.grid, recipe.n, sigma_inv, opts);
      break;
    case OracleRecipe::Kind::kVector:
      net = build_vector_valued_oracle(recipe.d, recipe.n, recipe.out_dim, sigma_inv, opts);
      break;
  }
  net.metadata = recipe.to_metadata();
  return net;
}

}  // namespace icreg
