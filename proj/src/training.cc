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

#include "icreg/training.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "icreg/network_io.h"
#include "icreg/rng.h"

namespace icreg {

const char* architecture_name(Architecture a) {
  switch (a) {
    case Architecture::kTheory:
      return "theory";
    case Architecture::kAllLinear:
      return "linear";
    case Architecture::kAllSoftmax:
      return "softmax";
  }
  return "unknown";
}

Architecture parse_architecture(const std::string& name) {
  if (name == "theory" || name == "relu") return Architecture::kTheory;
  if (name == "linear") return Architecture::kAllLinear;
  if (name == "softmax") return Architecture::kAllSoftmax;
  throw InvalidArgument("unknown architecture '" + name + "' (expected theory, linear or softmax)");
}

std::size_t HeadPolicy::heads(std::size_t n) const {
  if (kind == Kind::kFixed) return std::max<std::size_t>(fixed, 1);
  return std::max<std::size_t>((n + 7) / 8, 1);
}

std::string HeadPolicy::describe() const {
  return kind == Kind::kScaling ? "n/8" : std::to_string(fixed);
}

HeadPolicy HeadPolicy::parse(const std::string& s) {
  HeadPolicy p;
  if (s == "n/8" || s == "scaling") {
    p.kind = Kind::kScaling;
    return p;
  }
  std::size_t pos = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty() || v == 0) {
    throw InvalidArgument("head policy must be 'n/8' or a positive integer, got '" + s + "'");
  }
  p.kind = Kind::kFixed;
  p.fixed = v;
  return p;
}

namespace {

Matrix normal_matrix(std::size_t r, std::size_t c, double std, SeededRng& rng) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.normal(0.0, std);
  return m;
}

TransformerBlock random_block(std::size_t d, std::size_t heads, ActivationSpec act, bool ffn,
                              double std, SeededRng& rng) {
  TransformerBlock b;
  b.activation = act;
  for (std::size_t h = 0; h < heads; ++h) {
    AttentionHead head;
    head.q = normal_matrix(d, d, std, rng);
    // Linear heads are trained in merged form, with q standing for KᵀQ.
    if (act.kind != Activation::kLinear) head.k = normal_matrix(d, d, std, rng);
    head.v = normal_matrix(d, d, std, rng);
    b.heads.push_back(std::move(head));
  }
  if (ffn) {
    Ffn f;
    f.layers.push_back({normal_matrix(d, d, std, rng), std::vector<double>(d, 0.0)});
    f.layers.push_back({normal_matrix(d, d, std, rng), std::vector<double>(d, 0.0)});
    b.ffn = std::move(f);
  }
  return b;
}

}  // namespace

TransformerNetwork init_model(const ModelConfig& config, std::size_t n, std::uint64_t seed) {
  if (config.num_blocks < 1) throw InvalidArgument("model needs at least one block");
  if (config.d_embed < layout::kMinEmbed) throw InvalidArgument("model d_embed must be >= 8");
  SeededRng rng(seed, Stream::kInit, 0);
  const std::size_t d = config.d_embed;
  const std::size_t heads = config.heads.heads(n);
  TransformerNetwork net;
  net.d_embed = d;
  net.readout_row = layout::y_row(d);
  const ActivationSpec relu = ActivationSpec::relu(ScoreScaling::kInvSqrtEmbed);
  const ActivationSpec softmax = ActivationSpec::softmax(ScoreScaling::kInvSqrtEmbed);
  const ActivationSpec linear = ActivationSpec::linear(ScoreScaling::kInvContext);
  for (std::size_t b = 0; b < config.num_blocks; ++b) {
    const bool last = b + 1 == config.num_blocks;
    switch (config.architecture) {
      case Architecture::kTheory:
        if (last) {
          net.blocks.push_back(random_block(d, 1, linear, false, config.init_std, rng));
        } else {
          net.blocks.push_back(random_block(d, heads, relu, config.ffn, config.init_std, rng));
        }
        break;
      case Architecture::kAllLinear:
        net.blocks.push_back(random_block(d, heads, linear, config.ffn, config.init_std, rng));
        break;
      case Architecture::kAllSoftmax:
        net.blocks.push_back(random_block(d, heads, softmax, config.ffn, config.init_std, rng));
        break;
    }
  }
  net.metadata = std::string("model=") + architecture_name(config.architecture) +
                 " blocks=" + std::to_string(config.num_blocks) +
                 " heads=" + config.heads.describe() + " ffn=" + (config.ffn ? "1" : "0");
  return net;
}

namespace {

template <typename Net, typename Span>
std::vector<Span> collect_spans(Net& net) {
  std::vector<Span> out;
  for (auto& block : net.blocks) {
    for (auto& head : block.heads) {
      out.emplace_back(head.q.data());
      if (head.k) out.emplace_back(head.k->data());
      out.emplace_back(head.v.data());
    }
    if (!block.ffn) continue;
    for (auto& layer : block.ffn->layers) {
      out.emplace_back(layer.weight.data());
      out.emplace_back(layer.bias);
    }
  }
  return out;
}

}  // namespace

std::vector<std::span<double>> parameter_spans(TransformerNetwork& net) {
  return collect_spans<TransformerNetwork, std::span<double>>(net);
}

std::size_t parameter_count(const TransformerNetwork& net) {
  std::size_t total = 0;
  for (const auto& s : collect_spans<const TransformerNetwork, std::span<const double>>(net)) {
    total += s.size();
  }
  return total;
}

TransformerNetwork zeros_like(const TransformerNetwork& net) {
  TransformerNetwork z = net;
  for (auto s : parameter_spans(z)) std::fill(s.begin(), s.end(), 0.0);
  return z;
}

// Small dense kernels on row-major arrays; every one accumulates into c.
namespace {

// c (m×n) += a (m×k) · b (k×n)
void mm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
           std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// c (m×n) += aᵀ · b with a (k×m), b (k×n)
void mm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
           std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* bp = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = a[p * m + i];
      if (av == 0.0) continue;
      double* ci = c + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// c (m×n) += a · bᵀ with a (m×k), b (n×k)
void mm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
           std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      c[i * n + j] += s;
    }
  }
}

void zero_resize(std::vector<double>& v, std::size_t n) {
  v.assign(n, 0.0);
}

void activate(const ActivationSpec& act, const std::vector<double>& s, std::vector<double>& p,
              std::size_t ell) {
  p.resize(s.size());
  switch (act.kind) {
    case Activation::kRelu:
      for (std::size_t i = 0; i < s.size(); ++i) p[i] = s[i] > 0.0 ? s[i] : 0.0;
      break;
    case Activation::kLinear:
      p = s;
      break;
    case Activation::kSoftmax:
      // Normalize each query column (fixed tq) over the key index tk.
      for (std::size_t tq = 0; tq < ell; ++tq) {
        double mx = s[tq];
        for (std::size_t tk = 1; tk < ell; ++tk) mx = std::max(mx, s[tk * ell + tq]);
        double total = 0.0;
        for (std::size_t tk = 0; tk < ell; ++tk) {
          const double e = std::exp(s[tk * ell + tq] - mx);
          p[tk * ell + tq] = e;
          total += e;
        }
        for (std::size_t tk = 0; tk < ell; ++tk) p[tk * ell + tq] /= total;
      }
      break;
  }
}

void fill_embedding(const Prompt& prompt, std::size_t d, std::vector<double>& h) {
  const std::size_t n = prompt.xs.size();
  const std::size_t ell = n + 1;
  zero_resize(h, d * ell);
  for (std::size_t t = 0; t < n; ++t) {
    h[layout::x_row() * ell + t] = prompt.xs[t];
    h[layout::y_row(d) * ell + t] = prompt.ys[t];
  }
  h[layout::x_row() * ell + n] = prompt.query;
  for (std::size_t t = 0; t < ell; ++t) {
    const auto [c, s] = positional_encoding(t, ell);
    h[layout::pe_cos_row(d) * ell + t] = c;
    h[layout::pe_sin_row(d) * ell + t] = s;
    h[layout::bias_row(d) * ell + t] = 1.0;
  }
}

}  // namespace

void forward_prompt(const TransformerNetwork& net, const Prompt& prompt, PromptCache& cache) {
  if (prompt.xs.empty() || prompt.xs.size() != prompt.ys.size()) {
    throw DimensionError("forward: prompt needs matching nonempty inputs and outputs");
  }
  if (net.readout_count != 1) throw DimensionError("forward: training needs a scalar readout");
  const std::size_t d = net.d_embed;
  const std::size_t ell = prompt.xs.size() + 1;
  cache.ell = ell;
  cache.target = prompt.target;
  cache.blocks.resize(net.blocks.size());
  std::vector<double> h;
  fill_embedding(prompt, d, h);
  const std::size_t dl = d * ell;
  for (std::size_t bi = 0; bi < net.blocks.size(); ++bi) {
    const TransformerBlock& block = net.blocks[bi];
    BlockCache& bc = cache.blocks[bi];
    bc.input = h;
    bc.mid = h;
    bc.heads.resize(block.heads.size());
    const double scale = block.activation.scale(d, ell);
    for (std::size_t hi = 0; hi < block.heads.size(); ++hi) {
      const AttentionHead& head = block.heads[hi];
      HeadCache& hc = cache.blocks[bi].heads[hi];
      const double* hp = bc.input.data();
      if (head.k) {
        zero_resize(hc.a, dl);
        mm_nn(head.k->data().data(), hp, hc.a.data(), d, d, ell);
      } else {
        hc.a.clear();
      }
      zero_resize(hc.b, dl);
      mm_nn(head.q.data().data(), hp, hc.b.data(), d, d, ell);
      const double* ap = head.k ? hc.a.data() : hp;
      zero_resize(hc.s, ell * ell);
      mm_tn(ap, hc.b.data(), hc.s.data(), ell, d, ell);
      if (scale != 1.0) {
        for (double& v : hc.s) v *= scale;
      }
      activate(block.activation, hc.s, hc.p, ell);
      zero_resize(hc.w, dl);
      mm_nn(head.v.data().data(), hp, hc.w.data(), d, d, ell);
      mm_nn(hc.w.data(), hc.p.data(), bc.mid.data(), d, ell, ell);
    }
    h = bc.mid;
    if (block.ffn) {
      const auto& layers = block.ffn->layers;
      bc.ffn_pre.resize(layers.size());
      bc.ffn_post.resize(layers.size());
      const std::vector<double>* cur = &bc.mid;
      for (std::size_t l = 0; l < layers.size(); ++l) {
        const FfnLayer& layer = layers[l];
        const std::size_t out = layer.weight.rows();
        const std::size_t in = layer.weight.cols();
        std::vector<double>& pre = bc.ffn_pre[l];
        zero_resize(pre, out * ell);
        mm_nn(layer.weight.data().data(), cur->data(), pre.data(), out, in, ell);
        for (std::size_t r = 0; r < out; ++r) {
          for (std::size_t t = 0; t < ell; ++t) pre[r * ell + t] += layer.bias[r];
        }
        std::vector<double>& post = bc.ffn_post[l];
        if (l + 1 < layers.size()) {
          post.resize(pre.size());
          for (std::size_t i = 0; i < pre.size(); ++i) post[i] = pre[i] > 0.0 ? pre[i] : 0.0;
          cur = &post;
        } else {
          post.clear();
          for (std::size_t i = 0; i < dl; ++i) h[i] += pre[i];
        }
      }
    } else {
      bc.ffn_pre.clear();
      bc.ffn_post.clear();
    }
  }
  cache.output = std::move(h);
  cache.prediction = cache.output[net.readout_row * ell + (ell - 1)];
}

double predict(const TransformerNetwork& net, const Prompt& prompt) {
  PromptCache cache;
  forward_prompt(net, prompt, cache);
  return cache.prediction;
}

void backward_prompt(const TransformerNetwork& net, const PromptCache& cache,
                     double d_prediction, TransformerNetwork& grads) {
  const std::size_t d = net.d_embed;
  const std::size_t ell = cache.ell;
  const std::size_t dl = d * ell;
  std::vector<double> d_out(dl, 0.0);
  d_out[net.readout_row * ell + (ell - 1)] = d_prediction;
  std::vector<double> d_mid, d_h, d_w, d_p, d_s, d_a, d_b, d_cur, d_pre;

  for (std::size_t bi = net.blocks.size(); bi-- > 0;) {
    const TransformerBlock& block = net.blocks[bi];
    TransformerBlock& gblock = grads.blocks[bi];
    const BlockCache& bc = cache.blocks[bi];
    d_mid = d_out;
    if (block.ffn) {
      const auto& layers = block.ffn->layers;
      auto& glayers = gblock.ffn->layers;
      d_cur = d_out;
      for (std::size_t l = layers.size(); l-- > 0;) {
        const FfnLayer& layer = layers[l];
        const std::size_t out = layer.weight.rows();
        const std::size_t in = layer.weight.cols();
        d_pre = d_cur;
        if (l + 1 < layers.size()) {
          const std::vector<double>& pre = bc.ffn_pre[l];
          for (std::size_t i = 0; i < d_pre.size(); ++i) {
            if (!(pre[i] > 0.0)) d_pre[i] = 0.0;
          }
        }
        const std::vector<double>& x = l == 0 ? bc.mid : bc.ffn_post[l - 1];
        mm_nt(d_pre.data(), x.data(), glayers[l].weight.data().data(), out, ell, in);
        for (std::size_t r = 0; r < out; ++r) {
          double s = 0.0;
          for (std::size_t t = 0; t < ell; ++t) s += d_pre[r * ell + t];
          glayers[l].bias[r] += s;
        }
        zero_resize(d_cur, in * ell);
        mm_tn(layer.weight.data().data(), d_pre.data(), d_cur.data(), in, out, ell);
      }
      for (std::size_t i = 0; i < dl; ++i) d_mid[i] += d_cur[i];
    }

    d_h = d_mid;
    const double scale = block.activation.scale(d, ell);
    const double* hp = bc.input.data();
    for (std::size_t hi = 0; hi < block.heads.size(); ++hi) {
      const AttentionHead& head = block.heads[hi];
      AttentionHead& ghead = gblock.heads[hi];
      const HeadCache& hc = bc.heads[hi];
      zero_resize(d_w, dl);
      mm_nt(d_mid.data(), hc.p.data(), d_w.data(), d, ell, ell);
      zero_resize(d_p, ell * ell);
      mm_tn(hc.w.data(), d_mid.data(), d_p.data(), ell, d, ell);
      mm_nt(d_w.data(), hp, ghead.v.data().data(), d, ell, d);
      mm_tn(head.v.data().data(), d_w.data(), d_h.data(), d, d, ell);

      d_s.resize(ell * ell);
      switch (block.activation.kind) {
        case Activation::kRelu:
          for (std::size_t i = 0; i < d_s.size(); ++i) d_s[i] = hc.s[i] > 0.0 ? d_p[i] : 0.0;
          break;
        case Activation::kLinear:
          d_s = d_p;
          break;
        case Activation::kSoftmax:
          for (std::size_t tq = 0; tq < ell; ++tq) {
            double dot_pd = 0.0;
            for (std::size_t tk = 0; tk < ell; ++tk) {
              dot_pd += hc.p[tk * ell + tq] * d_p[tk * ell + tq];
            }
            for (std::size_t tk = 0; tk < ell; ++tk) {
              d_s[tk * ell + tq] = hc.p[tk * ell + tq] * (d_p[tk * ell + tq] - dot_pd);
            }
          }
          break;
      }
      if (scale != 1.0) {
        for (double& v : d_s) v *= scale;
      }
      const double* ap = head.k ? hc.a.data() : hp;
      zero_resize(d_a, dl);
      mm_nt(hc.b.data(), d_s.data(), d_a.data(), d, ell, ell);
      zero_resize(d_b, dl);
      mm_nn(ap, d_s.data(), d_b.data(), d, ell, ell);
      if (head.k) {
        mm_nt(d_a.data(), hp, ghead.k->data().data(), d, ell, d);
        mm_tn(head.k->data().data(), d_a.data(), d_h.data(), d, d, ell);
      } else {
        for (std::size_t i = 0; i < dl; ++i) d_h[i] += d_a[i];
      }
      mm_nt(d_b.data(), hp, ghead.q.data().data(), d, ell, d);
      mm_tn(head.q.data().data(), d_b.data(), d_h.data(), d, d, ell);
    }
    d_out.swap(d_h);
  }
}

double forward_loss(const TransformerNetwork& net, std::span<const Prompt> batch,
                    BatchCache& cache) {
  if (batch.empty()) throw InvalidArgument("forward_loss: empty batch");
  cache.prompts.resize(batch.size());
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    forward_prompt(net, batch[i], cache.prompts[i]);
    const double p = cache.prompts[i].prediction;
    if (!std::isfinite(p)) {
      throw Error("forward_loss: prediction for prompt " + std::to_string(i) + " is not finite");
    }
    const double e = p - batch[i].target;
    total += e * e;
  }
  cache.loss = total / static_cast<double>(batch.size());
  return cache.loss;
}

TransformerNetwork backward(const TransformerNetwork& net, const BatchCache& cache) {
  TransformerNetwork grads = zeros_like(net);
  const double inv = 1.0 / static_cast<double>(cache.prompts.size());
  for (const PromptCache& pc : cache.prompts) {
    backward_prompt(net, pc, 2.0 * (pc.prediction - pc.target) * inv, grads);
  }
  return grads;
}

double global_norm(TransformerNetwork& grads) {
  double sq = 0.0;
  for (auto s : parameter_spans(grads)) {
    for (double v : s) sq += v * v;
  }
  return std::sqrt(sq);
}

double clip_gradients(TransformerNetwork& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    double f = max_norm / norm;
    // Rounding can leave the result a few ulps above max_norm; shrink until
    // it is not, so that clipping twice changes nothing.
    do {
      for (auto s : parameter_spans(grads)) {
        for (double& v : s) v *= f;
      }
      f = std::nextafter(1.0, 0.0);
    } while (global_norm(grads) > max_norm);
  }
  return norm;
}

AdamState make_adam(const TransformerNetwork& net, const AdamConfig& config) {
  AdamState st;
  st.config = config;
  const std::size_t count = parameter_count(net);
  st.m.assign(count, 0.0);
  st.v.assign(count, 0.0);
  return st;
}

void adam_step(AdamState& state, TransformerNetwork& net, TransformerNetwork& grads) {
  auto params = parameter_spans(net);
  auto gs = parameter_spans(grads);
  if (params.size() != gs.size()) throw DimensionError("adam: gradient shape differs from model");
  std::size_t total = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != gs[i].size()) {
      throw DimensionError("adam: gradient shape differs from model");
    }
    total += params[i].size();
  }
  if (total != state.m.size()) throw DimensionError("adam: optimizer state does not match model");
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  std::size_t k = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t j = 0; j < params[i].size(); ++j, ++k) {
      const double g = gs[i][j];
      state.m[k] = c.beta1 * state.m[k] + (1.0 - c.beta1) * g;
      state.v[k] = c.beta2 * state.v[k] + (1.0 - c.beta2) * g * g;
      const double mhat = state.m[k] / bc1;
      const double vhat = state.v[k] / bc2;
      params[i][j] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

double evaluate(const TransformerNetwork& net, std::span<const Prompt> test) {
  if (test.empty()) throw InvalidArgument("evaluate: empty test set");
  PromptCache cache;
  double total = 0.0;
  for (const Prompt& p : test) {
    forward_prompt(net, p, cache);
    const double e = cache.prediction - p.target;
    total += e * e;
  }
  return total / static_cast<double>(test.size());
}

TrainResult train(TransformerNetwork net, std::span<const Prompt> data, const TrainConfig& config,
                  std::span<const Prompt> test) {
  if (data.empty()) throw InvalidArgument("train: empty dataset");
  if (config.batch_size == 0) throw InvalidArgument("train: batch size must be positive");
  TrainResult result;
  result.optimizer = make_adam(net, config.adam);
  TransformerNetwork grads = zeros_like(net);
  PromptCache cache;
  std::vector<std::size_t> order(data.size());

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    SeededRng rng(config.seed, Stream::kShuffle, epoch);
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (auto s : parameter_spans(grads)) std::fill(s.begin(), s.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t i = start; i < stop; ++i) {
        const Prompt& p = data[order[i]];
        forward_prompt(net, p, cache);
        const double e = cache.prediction - p.target;
        batch_loss += e * e;
        backward_prompt(net, cache, 2.0 * e * inv, grads);
      }
      batch_loss *= inv;
      if (!std::isfinite(batch_loss) || batch_loss > config.divergence_limit) {
        result.diverged = true;
        result.message = "diverged in epoch " + std::to_string(epoch) + " with batch loss " +
                         std::to_string(batch_loss);
        result.net = std::move(net);
        return result;
      }
      loss_sum += batch_loss;
      ++batches;
      clip_gradients(grads, config.adam.clip);
      adam_step(result.optimizer, net, grads);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_mse = loss_sum / static_cast<double>(batches);
    rec.test_mse = test.empty() ? NAN : evaluate(net, test);
    result.history.push_back(rec);
  }
  result.net = std::move(net);
  return result;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,train_mse,test_mse\n";
  char buf[128];
  for (const EpochRecord& r : history) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", r.epoch, r.train_mse, r.test_mse);
    out += buf;
  }
  return out;
}

namespace {
constexpr std::string_view kOptMagic = "ICRGOPT1";
}

std::string encode_checkpoint(const TransformerNetwork& net, const AdamState& state) {
  const std::string body = encode_network(net);
  ByteWriter w;
  w.u64(body.size());
  w.bytes(body);
  w.bytes(kOptMagic);
  w.f64(state.config.lr);
  w.f64(state.config.beta1);
  w.f64(state.config.beta2);
  w.f64(state.config.eps);
  w.f64(state.config.clip);
  w.u64(state.step);
  w.u64(state.m.size());
  w.f64s(state.m);
  w.f64s(state.v);
  return w.take();
}

void decode_checkpoint(const std::string& bytes, TransformerNetwork& net, AdamState& state) {
  ByteReader r(bytes);
  const std::uint64_t len = r.u64();
  if (len > r.remaining()) throw FormatError("checkpoint network length exceeds file");
  net = decode_network(r.bytes(len));
  r.expect(kOptMagic);
  state.config.lr = r.f64();
  state.config.beta1 = r.f64();
  state.config.beta2 = r.f64();
  state.config.eps = r.f64();
  state.config.clip = r.f64();
  state.step = r.u64();
  const std::uint64_t count = r.u64();
  if (count != parameter_count(net)) {
    throw FormatError("checkpoint optimizer state has " + std::to_string(count) +
                      " entries for a model with " + std::to_string(parameter_count(net)));
  }
  state.m.resize(count);
  state.v.resize(count);
  r.f64s(state.m);
  r.f64s(state.v);
  if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint");
}

void save_checkpoint(const TransformerNetwork& net, const AdamState& state,
                     const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(net, state));
}

}  // namespace icreg
