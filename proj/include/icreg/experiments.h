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
#include <string>
#include <utility>
#include <vector>

#include "icreg/error.h"
#include "icreg/training.h"

namespace icreg {

enum class ExperimentKind { kScaleN, kScaleL, kAblation, kSpline, kVerifyOracle, kBernstein };
const char* experiment_name(ExperimentKind k);
ExperimentKind parse_experiment(const std::string& name);

class ConfigError : public Error {
 public:
  ConfigError(std::size_t line, const std::string& what)
      : Error(where(line) + what), line_(line) {}
  // 0 when the error has no place in a config file.
  std::size_t line() const { return line_; }

 private:
  static std::string where(std::size_t line) {
    return line == 0 ? "config: " : "line " + std::to_string(line) + ": ";
  }
  std::size_t line_;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kScaleN;
  std::string preset;
  // theory, linear, softmax, or oracle (constructed network, no training).
  std::vector<std::string> architectures;
  std::vector<std::size_t> n_values;
  std::vector<std::size_t> L_values;
  std::string axis;                 // "n" or "L": the swept variable
  std::vector<std::size_t> degrees;  // one value except for verify_oracle and bernstein
  std::size_t knots = 5;             // spline interval count m
  HeadPolicy heads;
  std::size_t blocks = 4;
  bool ffn = true;
  std::string ablation;  // heads4, heads1, deep16x1, no_ffn
  std::vector<std::uint64_t> seeds;
  std::size_t epochs = 50;
  std::size_t batch = 512;
  double lr = 0.001;
  double init_std = 0.01;
  std::size_t test_size = 1000;
  std::size_t trials = 50;  // bernstein trials and verify prompts per cell
  std::size_t jobs = 1;
  bool save_checkpoints = false;
  std::string out = "results";

  // Sorts and deduplicates the sweep lists, then checks every field.
  // Throws ConfigError at `line` naming the offending field.
  void validate(std::size_t line = 0);
  // One "key = value" line per field, readable by parse_config.
  std::string echo() const;
};

// Defaults for one experiment under a preset: "" (no sweep values; n, L and
// seeds must then be given), "paper-fig1" or "desk".
ExperimentConfig preset_config(ExperimentKind kind, const std::string& preset);

// Line-oriented "key = value" text; '#' starts a comment.
struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;  // 0 for command-line flags, reported as "--key"
};
std::vector<ConfigEntry> parse_config_text(const std::string& text);
void apply_entry(ExperimentConfig& config, const ConfigEntry& entry);

// Preset, then file entries, then flag entries; validated.
ExperimentConfig parse_config(ExperimentKind kind, const std::string& preset,
                              const std::string& file_text,
                              const std::vector<std::pair<std::string, std::string>>& flags);

// Training-experiment cells.
struct Cell {
  std::string architecture;
  std::size_t n = 0;
  std::size_t L = 0;
  std::uint64_t seed = 0;
};

struct CellResult {
  Cell cell;
  double test_mse = 0.0;
  double init_mse = 0.0;
  bool ok = false;
  std::string message;
  std::vector<EpochRecord> history;
};

struct CurvePoint {
  std::string architecture;
  std::size_t n = 0;
  std::size_t L = 0;
  double x = 0.0;
  double mean = 0.0;
  double sd = 0.0;  // NaN with fewer than two successful seeds
  std::size_t seeds = 0;
  double slope = 0.0;
  double slope_ci = 0.0;
};

struct RunResult {
  ExperimentConfig config;
  std::vector<CellResult> cells;  // in cell order
  std::vector<CurvePoint> curves;
};

// Model and task of a cell under the config, after ablations.
ModelConfig cell_model(const ExperimentConfig& config, const std::string& architecture);
TaskSource cell_source(const ExperimentConfig& config);
std::vector<Cell> enumerate_cells(const ExperimentConfig& config);

// Trains (or builds, for "oracle") and evaluates one cell. Never throws;
// failures come back with ok = false.
CellResult run_cell(const ExperimentConfig& config, const Cell& cell);

// Runs every cell on config.jobs workers and fits the curves.
RunResult run_sweep(const ExperimentConfig& config);
RunResult run_scale_n(ExperimentConfig config);
RunResult run_scale_L(ExperimentConfig config);
RunResult run_ablation(ExperimentConfig config);
RunResult run_spline(ExperimentConfig config);

// Least squares slope of log₂(ys) on log₂(xs).
double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);
// Slope and 95% half-width from resampling seeds with replacement.
// per_seed[i][j] is the value at xs[i] for seed j.
std::pair<double, double> slope_with_ci(const std::vector<double>& xs,
                                        const std::vector<std::vector<double>>& per_seed,
                                        std::uint64_t seed, std::size_t resamples = 200);

std::string results_csv(const RunResult& r);
std::string curves_csv(const RunResult& r);
std::string manifest_text(const ExperimentConfig& config, std::size_t cells);
// results.csv, curves.csv and manifest.txt under config.out; checkpoints
// and histories are written by run_cell when requested.
void write_run(const RunResult& r);

// Exactness checks of the constructed networks.
struct VerifyCheck {
  std::string name;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

// Composed B₀ and doubling blocks against the directly assembled feature
// matrix, over the given degrees and context lengths.
VerifyCheck verify_featurization(const std::vector<std::size_t>& degrees,
                                 const std::vector<std::size_t>& ns, std::size_t prompts,
                                 std::uint64_t seed);
// Oracle output against reference_predict.
VerifyCheck verify_poly_oracle(std::size_t d, std::size_t n, std::size_t prompts,
                               std::uint64_t seed);
VerifyCheck verify_spline_oracle(int q, std::size_t m, std::size_t n, std::size_t prompts,
                                 std::uint64_t seed);
VerifyCheck verify_vector_oracle(std::size_t d, std::size_t out_dim, std::size_t n,
                                 std::size_t prompts, std::uint64_t seed);
// Random interaction heads on random prompts: exact locality and the
// on-target value.
VerifyCheck verify_interaction_heads(std::size_t count, std::uint64_t seed);
// Decrementing FFN after a +M shift restores the input.
VerifyCheck verify_decrement(const std::vector<double>& shifts, std::uint64_t seed);

std::vector<VerifyCheck> run_verify_oracle(const ExperimentConfig& config);
std::string verify_report(const std::vector<VerifyCheck>& checks);

// Rebuilds a saved oracle from its metadata and compares every weight.
// Returns an empty string on an exact match, else the first difference.
std::string compare_with_rebuild(const TransformerNetwork& net);

std::vector<BernsteinReport> run_bernstein(const ExperimentConfig& config);

}  // namespace icreg
