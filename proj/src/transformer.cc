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

#include "icreg/transformer.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace icreg {

std::pair<double, double> positional_encoding(std::size_t t, std::size_t ell) {
  const double angle =
      static_cast<double>(t + 1) * std::numbers::pi / (2.0 * static_cast<double>(ell));
  return {std::cos(angle), std::sin(angle)};
}

double ActivationSpec::scale(std::size_t d_embed, std::size_t ell) const {
  switch (scaling) {
    case ScoreScaling::kUnit:
      return 1.0;
    case ScoreScaling::kInvSqrtEmbed:
      return 1.0 / std::sqrt(static_cast<double>(d_embed));
    case ScoreScaling::kInvContext:
      if (ell < 2) throw InvalidArgument("1/(ℓ-1) scaling needs ℓ >= 2");
      return 1.0 / static_cast<double>(ell - 1);
    case ScoreScaling::kFixed:
      return fixed_scale;
  }
  return 1.0;
}

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kRelu:
      return "relu";
    case Activation::kLinear:
      return "linear";
    case Activation::kSoftmax:
      return "softmax";
  }
  return "unknown";
}

namespace {

void fill_fixed_rows(Matrix& m, std::size_t ell) {
  const std::size_t d = m.rows();
  for (std::size_t t = 0; t < ell; ++t) {
    const auto [c, s] = positional_encoding(t, ell);
    m(layout::pe_cos_row(d), t) = c;
    m(layout::pe_sin_row(d), t) = s;
    m(layout::bias_row(d), t) = 1.0;
  }
}

bool row_is_zero(const Matrix& m, std::size_t r) {
  for (double v : m.row(r)) {
    if (v != 0.0) return false;
  }
  return true;
}

// Rows of w·h for the listed rows of w only; other rows stay zero.
Matrix partial_product(const Matrix& w, const Matrix& h,
                       const std::vector<std::size_t>& rows) {
  Matrix out(w.rows(), h.cols());
  const std::size_t ell = h.cols();
  for (std::size_t r : rows) {
    double* o = out.row(r).data();
    for (std::size_t c = 0; c < w.cols(); ++c) {
      const double wrc = w(r, c);
      if (wrc == 0.0) continue;
      const double* hrow = h.row(c).data();
      for (std::size_t t = 0; t < ell; ++t) o[t] += wrc * hrow[t];
    }
  }
  return out;
}

void check_head(const AttentionHead& head, const Matrix& h) {
  const std::size_t d = h.rows();
  auto check = [&](const Matrix& m, const char* name) {
    if (m.rows() != d || m.cols() != d) {
      throw DimensionError(std::string("attention: ") + name + " is " +
                           m.shape_string() + " but H is " + h.shape_string());
    }
  };
  check(head.q, "Q");
  check(head.v, "V");
  if (head.k) check(*head.k, "K");
}

}  // namespace

EmbeddedPrompt embed_prompt(std::span<const double> xs, std::span<const double> ys,
                            double query, std::size_t d_embed) {
  Matrix y(ys.size(), 1, std::vector<double>(ys.begin(), ys.end()));
  return embed_vector_prompt(xs, y, query, d_embed);
}

EmbeddedPrompt embed_vector_prompt(std::span<const double> xs, const Matrix& ys,
                                   double query, std::size_t d_embed) {
  if (xs.empty()) throw InvalidArgument("embed_prompt: context is empty");
  if (ys.rows() != xs.size()) {
    throw DimensionError("embed_prompt: " + std::to_string(xs.size()) +
                         " inputs but " + std::to_string(ys.rows()) + " outputs");
  }
  const std::size_t out_dim = ys.cols();
  if (d_embed < layout::kMinEmbed + out_dim - 1) {
    throw InvalidArgument("embed_prompt: d_embed " + std::to_string(d_embed) +
                          " too small for output dimension " +
                          std::to_string(out_dim));
  }
  const std::size_t n = xs.size();
  const std::size_t ell = n + 1;
  EmbeddedPrompt p{Matrix(d_embed, ell), n};
  Matrix& m = p.matrix;
  for (std::size_t t = 0; t < n; ++t) m(layout::x_row(), t) = xs[t];
  m(layout::x_row(), n) = query;
  const std::size_t y_first = layout::y_row(d_embed) + 1 - out_dim;
  for (std::size_t j = 0; j < out_dim; ++j) {
    for (std::size_t t = 0; t < n; ++t) m(y_first + j, t) = ys(t, j);
  }
  fill_fixed_rows(m, ell);
  return p;
}

Matrix attention_forward(const AttentionHead& head, const Matrix& h,
                         const ActivationSpec& activation) {
  check_head(head, h);
  const std::size_t d = h.rows();
  const std::size_t ell = h.cols();

  // Only rows where both key and query projections are nonzero contribute
  // to the scores; zero terms would add exactly nothing.
  std::vector<std::size_t> score_rows;
  for (std::size_t r = 0; r < d; ++r) {
    if (row_is_zero(head.q, r)) continue;
    if (head.k && row_is_zero(*head.k, r)) continue;
    score_rows.push_back(r);
  }
  const Matrix qh = partial_product(head.q, h, score_rows);
  const Matrix kh = head.k ? partial_product(*head.k, h, score_rows) : Matrix();
  const Matrix& keys = head.k ? kh : h;

  Matrix scores(ell, ell);
  for (std::size_t r : score_rows) {
    const double* krow = keys.row(r).data();
    const double* qrow = qh.row(r).data();
    for (std::size_t tk = 0; tk < ell; ++tk) {
      const double kv = krow[tk];
      if (kv == 0.0) continue;
      double* srow = scores.row(tk).data();
      for (std::size_t tq = 0; tq < ell; ++tq) srow[tq] += kv * qrow[tq];
    }
  }
  const double scale = activation.scale(d, ell);
  if (scale != 1.0) scores *= scale;

  switch (activation.kind) {
    case Activation::kRelu:
      for (double& s : scores.data()) s = s > 0.0 ? s : 0.0;
      break;
    case Activation::kLinear:
      break;
    case Activation::kSoftmax:
      for (std::size_t tq = 0; tq < ell; ++tq) {
        double mx = scores(0, tq);
        for (std::size_t tk = 1; tk < ell; ++tk) mx = std::max(mx, scores(tk, tq));
        double total = 0.0;
        for (std::size_t tk = 0; tk < ell; ++tk) {
          scores(tk, tq) = std::exp(scores(tk, tq) - mx);
          total += scores(tk, tq);
        }
        for (std::size_t tk = 0; tk < ell; ++tk) scores(tk, tq) /= total;
      }
      break;
  }

  std::vector<std::size_t> value_rows;
  for (std::size_t r = 0; r < d; ++r) {
    if (!row_is_zero(head.v, r)) value_rows.push_back(r);
  }
  const Matrix vh = partial_product(head.v, h, value_rows);
  Matrix out(d, ell);
  for (std::size_t r : value_rows) {
    double* o = out.row(r).data();
    const double* w = vh.row(r).data();
    for (std::size_t tk = 0; tk < ell; ++tk) {
      if (w[tk] == 0.0) continue;
      const double* prow = scores.row(tk).data();
      for (std::size_t tq = 0; tq < ell; ++tq) o[tq] += w[tk] * prow[tq];
    }
  }
  return out;
}

Matrix mha_forward(const TransformerBlock& block, const Matrix& h) {
  Matrix out(h.rows(), h.cols());
  for (const AttentionHead& head : block.heads) {
    out += attention_forward(head, h, block.activation);
  }
  return out;
}

Matrix ffn_forward(const Ffn& ffn, const Matrix& x) {
  Matrix cur = x;
  for (std::size_t l = 0; l < ffn.layers.size(); ++l) {
    const FfnLayer& layer = ffn.layers[l];
    if (layer.weight.cols() != cur.rows() || layer.bias.size() != layer.weight.rows()) {
      throw DimensionError("ffn layer " + std::to_string(l) + ": weight " +
                           layer.weight.shape_string() + " with input of height " +
                           std::to_string(cur.rows()));
    }
    Matrix next = matmul(layer.weight, cur);
    const bool last = l + 1 == ffn.layers.size();
    for (std::size_t r = 0; r < next.rows(); ++r) {
      for (double& v : next.row(r)) {
        v += layer.bias[r];
        if (!last && v < 0.0) v = 0.0;
      }
    }
    cur = std::move(next);
  }
  if (cur.rows() != x.rows()) {
    throw DimensionError("ffn output height " + std::to_string(cur.rows()) +
                         " differs from input height " + std::to_string(x.rows()));
  }
  return cur;
}

Matrix block_forward(const TransformerBlock& block, const Matrix& h) {
  Matrix x = mha_forward(block, h);
  x += h;
  if (block.ffn) x += ffn_forward(*block.ffn, x);
  return x;
}

Matrix network_trace(const TransformerNetwork& net, const EmbeddedPrompt& prompt) {
  if (prompt.matrix.rows() != net.d_embed) {
    throw DimensionError("network expects d_embed " + std::to_string(net.d_embed) +
                         " but prompt has " + std::to_string(prompt.matrix.rows()) +
                         " rows");
  }
  Matrix h = prompt.matrix;
  for (const TransformerBlock& block : net.blocks) h = block_forward(block, h);
  return h;
}

std::vector<double> network_forward(const TransformerNetwork& net,
                                    const EmbeddedPrompt& prompt) {
  const Matrix h = network_trace(net, prompt);
  if (net.readout_row + net.readout_count > h.rows()) {
    throw DimensionError("readout rows exceed d_embed");
  }
  std::vector<double> out(net.readout_count);
  const std::size_t last = h.cols() - 1;
  for (std::size_t j = 0; j < net.readout_count; ++j) out[j] = h(net.readout_row + j, last);
  return out;
}

double network_predict(const TransformerNetwork& net, const EmbeddedPrompt& prompt) {
  if (net.readout_count != 1) {
    throw DimensionError("network_predict needs a scalar readout, network has " +
                         std::to_string(net.readout_count));
  }
  return network_forward(net, prompt)[0];
}

void validate_network(const TransformerNetwork& net) {
  const std::size_t d = net.d_embed;
  if (net.readout_count == 0 || net.readout_row + net.readout_count > d) {
    throw DimensionError("readout range outside the embedding");
  }
  const Matrix probe(d, 1);
  for (std::size_t b = 0; b < net.blocks.size(); ++b) {
    const TransformerBlock& block = net.blocks[b];
    for (const AttentionHead& head : block.heads) check_head(head, probe);
    if (!block.ffn) continue;
    std::size_t width = d;
    for (std::size_t l = 0; l < block.ffn->layers.size(); ++l) {
      const FfnLayer& layer = block.ffn->layers[l];
      if (layer.weight.cols() != width || layer.bias.size() != layer.weight.rows()) {
        throw DimensionError("block " + std::to_string(b) + " ffn layer " +
                             std::to_string(l) + " does not chain");
      }
      width = layer.weight.rows();
    }
    if (width != d) {
      throw DimensionError("block " + std::to_string(b) + " ffn output height " +
                           std::to_string(width) + " differs from d_embed");
    }
  }
}

std::size_t head_count(const TransformerNetwork& net) {
  std::size_t total = 0;
  for (const auto& b : net.blocks) total += b.heads.size();
  return total;
}

double max_weight(const TransformerNetwork& net) {
  double m = 0.0;
  for (const auto& block : net.blocks) {
    for (const auto& head : block.heads) {
      m = std::max({m, max_norm(head.q), max_norm(head.v)});
      if (head.k) m = std::max(m, max_norm(*head.k));
    }
    if (!block.ffn) continue;
    for (const auto& layer : block.ffn->layers) {
      m = std::max(m, max_norm(layer.weight));
      for (double b : layer.bias) m = std::max(m, std::abs(b));
    }
  }
  return m;
}

}  // namespace icreg
