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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "icreg/training.h"

namespace icreg::testing {

// Signs of every ReLU input in the forward pass: attention scores of ReLU
// blocks and the hidden FFN pre-activations. Also tracks the smallest
// magnitude seen, to spot inputs sitting on a kink.
struct KinkSignature {
  std::vector<bool> signs;
  double closest = INFINITY;
};

inline KinkSignature kink_signature(const TransformerNetwork& net, const BatchCache& cache) {
  KinkSignature sig;
  auto add = [&](double v) {
    sig.signs.push_back(v > 0.0);
    sig.closest = std::min(sig.closest, std::abs(v));
  };
  for (const PromptCache& pc : cache.prompts) {
    for (std::size_t b = 0; b < net.blocks.size(); ++b) {
      const BlockCache& bc = pc.blocks[b];
      if (net.blocks[b].activation.kind == Activation::kRelu) {
        for (const HeadCache& hc : bc.heads)
          for (double v : hc.s) add(v);
      }
      for (std::size_t l = 0; l + 1 < bc.ffn_pre.size(); ++l)
        for (double v : bc.ffn_pre[l]) add(v);
    }
  }
  return sig;
}

struct GradCheckResult {
  std::size_t checked = 0;
  std::size_t skipped = 0;  // entries whose ±h evaluations cross a kink
  double worst = 0.0;       // largest relative error over checked entries
  std::string worst_where;
  double loss = 0.0;
};

// Central differences of forward_loss against backward() for every
// parameter. The relative error denominator is floored at
// floor_scale·max(1, loss), since entries with exactly zero gradient only
// see rounding noise in the difference quotient.
inline GradCheckResult gradient_check(TransformerNetwork net, std::span<const Prompt> batch,
                                      double h = 1e-5, double kink_margin = 1e-7,
                                      double floor_scale = 1e-6) {
  GradCheckResult res;
  BatchCache cache;
  res.loss = forward_loss(net, batch, cache);
  const KinkSignature base = kink_signature(net, cache);
  TransformerNetwork grads = backward(net, cache);
  if (base.closest < kink_margin) {
    res.skipped = parameter_count(net);
    return res;
  }
  auto pspans = parameter_spans(net);
  auto gspans = parameter_spans(grads);
  const double floor = floor_scale * std::max(1.0, res.loss);
  BatchCache probe;
  for (std::size_t s = 0; s < pspans.size(); ++s) {
    for (std::size_t i = 0; i < pspans[s].size(); ++i) {
      double& w = pspans[s][i];
      const double saved = w;
      w = saved + h;
      const double up = forward_loss(net, batch, probe);
      const bool up_same = kink_signature(net, probe).signs == base.signs;
      w = saved - h;
      const double down = forward_loss(net, batch, probe);
      const bool down_same = kink_signature(net, probe).signs == base.signs;
      w = saved;
      if (!up_same || !down_same) {
        ++res.skipped;
        continue;
      }
      const double fd = (up - down) / (2.0 * h);
      const double g = gspans[s][i];
      const double rel = std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), floor});
      ++res.checked;
      if (rel > res.worst) {
        res.worst = rel;
        res.worst_where = "array " + std::to_string(s) + " entry " + std::to_string(i) +
                          " grad " + std::to_string(g) + " fd " + std::to_string(fd);
      }
    }
  }
  return res;
}

}  // namespace icreg::testing
