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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "icreg/tasks.h"
#include "icreg/transformer.h"

namespace icreg {

enum class Architecture { kTheory, kAllLinear, kAllSoftmax };
const char* architecture_name(Architecture a);
Architecture parse_architecture(const std::string& name);

struct HeadPolicy {
  enum class Kind { kFixed, kScaling };
  Kind kind = Kind::kScaling;
  std::size_t fixed = 4;
  // Scaling: ceil(n/8), at least 1.
  std::size_t heads(std::size_t n) const;
  std::string describe() const;
  static HeadPolicy parse(const std::string& s);  // "n/8" or an integer
};

// Theory: (num_blocks-1) ReLU blocks followed by one linear block with a
// single head and no FFN. The other architectures repeat one block kind
// num_blocks times. FFNs are Linear → ReLU → Linear with width d_embed.
struct ModelConfig {
  Architecture architecture = Architecture::kTheory;
  std::size_t num_blocks = 4;
  HeadPolicy heads;
  bool ffn = true;
  std::size_t d_embed = 11;
  double init_std = 0.01;
};

// Q, K, V and FFN weights ~ N(0, init_std²); FFN biases zero. Linear heads
// are merged (q alone stands for KᵀQ). ReLU and softmax scores are scaled
// by 1/√d_embed, linear scores by 1/(ℓ-1).
TransformerNetwork init_model(const ModelConfig& config, std::size_t n, std::uint64_t seed);

// Every trainable array of a network in a fixed order: per block, per head
// q, k (when present), v; then per FFN layer weight and bias.
std::vector<std::span<double>> parameter_spans(TransformerNetwork& net);
std::size_t parameter_count(const TransformerNetwork& net);
// Network of identical shape with all weights zero.
TransformerNetwork zeros_like(const TransformerNetwork& net);

// Intermediates of one prompt's forward pass.
struct HeadCache {
  std::vector<double> a;  // K·H (d × ℓ), or empty for merged heads
  std::vector<double> b;  // Q·H (d × ℓ)
  std::vector<double> s;  // scaled scores (ℓ × ℓ, key-major)
  std::vector<double> p;  // activated scores
  std::vector<double> w;  // V·H (d × ℓ)
};

struct BlockCache {
  std::vector<double> input;  // H (d × ℓ)
  std::vector<double> mid;    // MHA(H) + H
  std::vector<HeadCache> heads;
  std::vector<std::vector<double>> ffn_pre;   // per layer pre-activation
  std::vector<std::vector<double>> ffn_post;  // per layer output after ReLU
};

struct PromptCache {
  std::size_t ell = 0;
  std::vector<BlockCache> blocks;
  std::vector<double> output;  // final H
  double prediction = 0.0;
  double target = 0.0;
};

// Dense forward pass of one prompt; reuses the cache's storage.
void forward_prompt(const TransformerNetwork& net, const Prompt& prompt, PromptCache& cache);
double predict(const TransformerNetwork& net, const Prompt& prompt);

// Adds d(loss)/d(params) · to grads, given d(loss)/d(prediction).
void backward_prompt(const TransformerNetwork& net, const PromptCache& cache,
                     double d_prediction, TransformerNetwork& grads);

struct BatchCache {
  std::vector<PromptCache> prompts;
  double loss = 0.0;
};

// Mean squared error over the batch. Throws Error naming the prompt index
// if a prediction is not finite.
double forward_loss(const TransformerNetwork& net, std::span<const Prompt> batch,
                    BatchCache& cache);
// Gradient of the batch mean loss.
TransformerNetwork backward(const TransformerNetwork& net, const BatchCache& cache);

double global_norm(TransformerNetwork& grads);
// Rescales to max_norm when the global ℓ² norm exceeds it; returns the
// norm before clipping.
double clip_gradients(TransformerNetwork& grads, double max_norm);

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip = 1.0;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
};

AdamState make_adam(const TransformerNetwork& net, const AdamConfig& config = {});
void adam_step(AdamState& state, TransformerNetwork& net, TransformerNetwork& grads);

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 512;
  AdamConfig adam;
  std::uint64_t seed = 0;
  double divergence_limit = 1e6;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_mse = 0.0;  // running mean of batch losses during the epoch
  double test_mse = 0.0;   // NaN when no test set is given
};

struct TrainResult {
  TransformerNetwork net;
  AdamState optimizer;
  std::vector<EpochRecord> history;
  bool diverged = false;
  std::string message;
};

TrainResult train(TransformerNetwork net, std::span<const Prompt> data, const TrainConfig& config,
                  std::span<const Prompt> test = {});

double evaluate(const TransformerNetwork& net, std::span<const Prompt> test);

std::string history_csv(const std::vector<EpochRecord>& history);

// Network container followed by "ICRGOPT1", the Adam hyperparameters, step
// count and both moment vectors.
std::string encode_checkpoint(const TransformerNetwork& net, const AdamState& state);
void decode_checkpoint(const std::string& bytes, TransformerNetwork& net, AdamState& state);
void save_checkpoint(const TransformerNetwork& net, const AdamState& state,
                     const std::filesystem::path& path);

}  // namespace icreg
