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

#include "icreg/experiments.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <thread>

#include "icreg/constructions.h"
#include "icreg/network_io.h"
#include "icreg/rng.h"

namespace icreg {

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string short_fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::string cell_tag(const ExperimentConfig& config, const Cell& c) {
  return std::string(experiment_name(config.experiment)) + "_" + c.architecture + "_n" +
         std::to_string(c.n) + "_L" + std::to_string(c.L) + "_s" + std::to_string(c.seed);
}

// Network evaluation costs O(n³) per prompt, so the oracle's test error is
// taken from the closed form it computes; the network itself is run on the
// first few prompts of short contexts and must agree to 1e-8.
constexpr std::size_t kOracleSpotChecks = 3;
constexpr std::size_t kOracleSpotCheckMaxN = 256;

double oracle_test_mse(const OracleRecipe& recipe, const Dataset& test, std::string& message) {
  const FeatureSpec spec = recipe.feature_spec();
  const Matrix sigma_inv = invert(population_sigma(spec, recipe.dist_a, recipe.dist_b));
  double total = 0.0;
  for (const Prompt& p : test.prompts) {
    const double e = reference_predict(p.xs, p.ys, p.query, spec, sigma_inv) - p.target;
    total += e * e;
  }
  if (recipe.n <= kOracleSpotCheckMaxN) {
    const TransformerNetwork net = build_oracle(recipe);
    const std::size_t checks = std::min(kOracleSpotChecks, test.prompts.size());
    for (std::size_t i = 0; i < checks; ++i) {
      const Prompt& p = test.prompts[i];
      const double want = reference_predict(p.xs, p.ys, p.query, spec, sigma_inv);
      const double got = network_predict(net, embed(p, net.d_embed));
      if (!(std::abs(got - want) <= 1e-8 * std::max(1.0, std::abs(want)))) {
        message = "oracle network differs from its closed form on prompt " + std::to_string(i);
        return NAN;
      }
    }
  }
  return total / static_cast<double>(test.prompts.size());
}

}  // namespace

ModelConfig cell_model(const ExperimentConfig& config, const std::string& architecture) {
  ModelConfig m;
  m.architecture = parse_architecture(architecture);
  m.num_blocks = config.blocks;
  m.heads = config.heads;
  m.ffn = config.ffn;
  m.d_embed = cell_source(config).embed_dim();
  m.init_std = config.init_std;
  if (config.experiment == ExperimentKind::kAblation) {
    if (config.ablation == "heads4") {
      m.heads = HeadPolicy::parse("4");
    } else if (config.ablation == "heads1") {
      m.heads = HeadPolicy::parse("1");
    } else if (config.ablation == "deep16x1") {
      m.heads = HeadPolicy::parse("1");
      m.num_blocks = 16;
    } else if (config.ablation == "no_ffn") {
      m.ffn = false;
    } else {
      throw InvalidArgument("unknown ablation '" + config.ablation + "'");
    }
  }
  return m;
}

TaskSource cell_source(const ExperimentConfig& config) {
  TaskSource s;
  if (config.experiment == ExperimentKind::kSpline) {
    s.kind = RegressionTask::Kind::kLinearSpline;
    s.grid = KnotGrid{-1.0, 1.0, config.knots, 1};
  } else {
    s.kind = RegressionTask::Kind::kLegendre;
    s.degree = config.degrees.at(0);
  }
  return s;
}

std::vector<Cell> enumerate_cells(const ExperimentConfig& config) {
  std::vector<Cell> cells;
  for (const auto& arch : config.architectures) {
    for (std::size_t n : config.n_values) {
      for (std::size_t L : config.L_values) {
        for (std::uint64_t seed : config.seeds) cells.push_back({arch, n, L, seed});
      }
    }
  }
  return cells;
}

CellResult run_cell(const ExperimentConfig& config, const Cell& cell) {
  CellResult r;
  r.cell = cell;
  r.init_mse = NAN;
  r.test_mse = NAN;
  try {
    const TaskSource source = cell_source(config);
    const Dataset test =
        generate_dataset(source, cell.n, config.test_size, cell.seed, Stream::kTestData);
    if (cell.architecture == "oracle") {
      OracleRecipe recipe;
      recipe.n = cell.n;
      if (source.kind == RegressionTask::Kind::kLinearSpline) {
        recipe.kind = OracleRecipe::Kind::kLinearSpline;
        recipe.grid = source.grid;
      } else {
        recipe.kind = OracleRecipe::Kind::kPoly;
        recipe.d = source.degree;
      }
      r.test_mse = oracle_test_mse(recipe, test, r.message);
      r.ok = std::isfinite(r.test_mse);
      if (!r.ok && r.message.empty()) r.message = "oracle produced a non-finite loss";
      return r;
    }
    const Dataset train_set =
        generate_dataset(source, cell.n, cell.L, cell.seed, Stream::kTrainData);
    TransformerNetwork net = init_model(cell_model(config, cell.architecture), cell.n, cell.seed);
    r.init_mse = evaluate(net, test.prompts);
    TrainConfig tc;
    tc.epochs = config.epochs;
    tc.batch_size = config.batch;
    tc.adam.lr = config.lr;
    tc.seed = cell.seed;
    TrainResult tr = train(std::move(net), train_set.prompts, tc, test.prompts);
    r.history = tr.history;
    if (tr.diverged) {
      r.message = tr.message;
    } else {
      r.test_mse = tr.history.back().test_mse;
      r.ok = std::isfinite(r.test_mse);
      if (!r.ok) r.message = "test loss is not finite";
    }
    if (config.save_checkpoints) {
      const std::filesystem::path dir = config.out;
      const std::string tag = cell_tag(config, cell);
      save_checkpoint(tr.net, tr.optimizer, dir / "checkpoints" / (tag + ".ckpt"));
      write_file(dir / "history" / (tag + ".csv"), history_csv(tr.history));
    }
  } catch (const std::exception& e) {
    r.ok = false;
    r.message = e.what();
  }
  return r;
}

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw InvalidArgument("loglog_slope: need at least two matching points");
  }
  const double k = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) {
      throw InvalidArgument("loglog_slope: values must be positive");
    }
    mx += std::log2(xs[i]);
    my += std::log2(ys[i]);
  }
  mx /= k;
  my /= k;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = std::log2(xs[i]) - mx;
    sxy += dx * (std::log2(ys[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw InvalidArgument("loglog_slope: x values are all equal");
  return sxy / sxx;
}

std::pair<double, double> slope_with_ci(const std::vector<double>& xs,
                                        const std::vector<std::vector<double>>& per_seed,
                                        std::uint64_t seed, std::size_t resamples) {
  if (per_seed.size() != xs.size()) throw DimensionError("slope_with_ci: ragged input");
  const std::size_t seeds = per_seed.empty() ? 0 : per_seed[0].size();
  for (const auto& row : per_seed) {
    if (row.size() != seeds || seeds == 0) throw DimensionError("slope_with_ci: ragged input");
  }
  auto mean_curve = [&](const std::vector<std::size_t>& pick) {
    std::vector<double> ys(xs.size(), 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      for (std::size_t j : pick) ys[i] += per_seed[i][j];
      ys[i] /= static_cast<double>(pick.size());
    }
    return ys;
  };
  std::vector<std::size_t> all(seeds);
  for (std::size_t j = 0; j < seeds; ++j) all[j] = j;
  const double slope = loglog_slope(xs, mean_curve(all));
  if (seeds < 2) return {slope, NAN};
  SeededRng rng(seed, Stream::kDiagnostic, 0);
  std::vector<double> slopes;
  std::vector<std::size_t> pick(seeds);
  for (std::size_t b = 0; b < resamples; ++b) {
    for (std::size_t& j : pick) j = static_cast<std::size_t>(rng.below(seeds));
    slopes.push_back(loglog_slope(xs, mean_curve(pick)));
  }
  double m = 0.0;
  for (double s : slopes) m += s;
  m /= static_cast<double>(slopes.size());
  double v = 0.0;
  for (double s : slopes) v += (s - m) * (s - m);
  v /= static_cast<double>(slopes.size() - 1);
  return {slope, 1.96 * std::sqrt(v)};
}

namespace {

std::vector<CurvePoint> fit_curves(const ExperimentConfig& config,
                                   const std::vector<CellResult>& cells) {
  std::vector<CurvePoint> out;
  const bool over_n = config.axis == "n";
  const auto& xs_all = over_n ? config.n_values : config.L_values;
  for (const auto& arch : config.architectures) {
    std::vector<CurvePoint> pts;
    std::vector<double> xs;
    std::vector<double> means;
    // per_seed[i][j] for seeds that succeeded at every point.
    std::vector<std::vector<double>> per_seed(xs_all.size());
    std::vector<bool> seed_ok(config.seeds.size(), true);
    for (std::size_t i = 0; i < xs_all.size(); ++i) {
      CurvePoint p;
      p.architecture = arch;
      p.n = over_n ? xs_all[i] : config.n_values.front();
      p.L = over_n ? config.L_values.front() : xs_all[i];
      p.x = static_cast<double>(xs_all[i]);
      std::vector<double> vals;
      per_seed[i].assign(config.seeds.size(), NAN);
      for (const CellResult& c : cells) {
        if (c.cell.architecture != arch || c.cell.n != p.n || c.cell.L != p.L) continue;
        const auto it = std::find(config.seeds.begin(), config.seeds.end(), c.cell.seed);
        const std::size_t j = static_cast<std::size_t>(it - config.seeds.begin());
        if (c.ok) {
          vals.push_back(c.test_mse);
          per_seed[i][j] = c.test_mse;
        } else {
          seed_ok[j] = false;
        }
      }
      p.seeds = vals.size();
      p.mean = NAN;
      p.sd = NAN;
      if (!vals.empty()) {
        double m = 0.0;
        for (double v : vals) m += v;
        m /= static_cast<double>(vals.size());
        p.mean = m;
        if (vals.size() >= 2) {
          double s = 0.0;
          for (double v : vals) s += (v - m) * (v - m);
          p.sd = std::sqrt(s / static_cast<double>(vals.size() - 1));
        }
        xs.push_back(p.x);
        means.push_back(m);
      }
      pts.push_back(p);
    }
    double slope = NAN;
    double ci = NAN;
    try {
      if (xs.size() >= 2) slope = loglog_slope(xs, means);
      std::vector<std::vector<double>> kept(xs_all.size());
      for (std::size_t i = 0; i < xs_all.size(); ++i) {
        for (std::size_t j = 0; j < config.seeds.size(); ++j) {
          if (seed_ok[j]) kept[i].push_back(per_seed[i][j]);
        }
      }
      if (!kept[0].empty() && xs_all.size() >= 2) {
        std::vector<double> xd(xs_all.begin(), xs_all.end());
        ci = slope_with_ci(xd, kept, config.seeds.front()).second;
      }
    } catch (const InvalidArgument&) {
      // Nonpositive losses admit no log-log fit.
    }
    for (CurvePoint& p : pts) {
      p.slope = slope;
      p.slope_ci = ci;
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace

RunResult run_sweep(const ExperimentConfig& config) {
  RunResult result;
  result.config = config;
  const std::vector<Cell> cells = enumerate_cells(config);
  result.cells.resize(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      result.cells[i] = run_cell(config, cells[i]);
    }
  };
  const std::size_t workers = std::min<std::size_t>(config.jobs, std::max<std::size_t>(cells.size(), 1));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  result.curves = fit_curves(config, result.cells);
  return result;
}

namespace {
RunResult run_kind(ExperimentConfig config, ExperimentKind kind) {
  if (config.experiment != kind) {
    throw InvalidArgument(std::string("config is for ") + experiment_name(config.experiment) +
                          ", not " + experiment_name(kind));
  }
  config.validate();
  return run_sweep(config);
}
}  // namespace

RunResult run_scale_n(ExperimentConfig config) {
  return run_kind(std::move(config), ExperimentKind::kScaleN);
}
RunResult run_scale_L(ExperimentConfig config) {
  return run_kind(std::move(config), ExperimentKind::kScaleL);
}
RunResult run_ablation(ExperimentConfig config) {
  return run_kind(std::move(config), ExperimentKind::kAblation);
}
RunResult run_spline(ExperimentConfig config) {
  return run_kind(std::move(config), ExperimentKind::kSpline);
}

std::string results_csv(const RunResult& r) {
  std::string out = "experiment,architecture,n,L,seed,test_mse,status,init_mse\n";
  const std::string exp = experiment_name(r.config.experiment);
  for (const CellResult& c : r.cells) {
    out += exp + "," + c.cell.architecture + "," + std::to_string(c.cell.n) + "," +
           std::to_string(c.cell.L) + "," + std::to_string(c.cell.seed) + "," + fmt(c.test_mse) +
           "," + (c.ok ? "ok" : "failed") + "," + fmt(c.init_mse) + "\n";
  }
  return out;
}

std::string curves_csv(const RunResult& r) {
  std::string out =
      "experiment,architecture,n,L,seed,test_mse,status,x,mean,sd,slope,slope_ci\n";
  const std::string exp = experiment_name(r.config.experiment);
  for (const CurvePoint& p : r.curves) {
    out += exp + "," + p.architecture + "," + std::to_string(p.n) + "," + std::to_string(p.L) +
           ",all," + fmt(p.mean) + "," + (p.seeds > 0 ? "ok" : "failed") + "," + fmt(p.x) + "," +
           fmt(p.mean) + "," + fmt(p.sd) + "," + fmt(p.slope) + "," + fmt(p.slope_ci) + "\n";
  }
  return out;
}

std::string manifest_text(const ExperimentConfig& config, std::size_t cells) {
  std::string out = "# icreg run manifest\n";
  out += "icreg_version = 1.0.0\n";
  out += std::string("compiler = ") + __VERSION__ + "\n";
  out += "cxx_standard = " + std::to_string(__cplusplus) + "\n";
  out += "preset = " + (config.preset.empty() ? std::string("none") : config.preset) + "\n";
  out += "cells = " + std::to_string(cells) + "\n";
  out += config.echo();
  return out;
}

void write_run(const RunResult& r) {
  const std::filesystem::path dir = r.config.out;
  write_file(dir / "results.csv", results_csv(r));
  write_file(dir / "curves.csv", curves_csv(r));
  write_file(dir / "manifest.txt", manifest_text(r.config, r.cells.size()));
}

// ---- exactness suite ----

namespace {

VerifyCheck finish(std::string name, double dev, double tol, std::string detail) {
  VerifyCheck c;
  c.name = std::move(name);
  c.max_deviation = dev;
  c.tolerance = tol;
  c.pass = std::isfinite(dev) && dev <= tol;
  c.detail = std::move(detail);
  return c;
}

Prompt random_prompt(const TaskSource& source, std::size_t n, SeededRng& rng) {
  const RegressionTask task = source.sample(rng);
  return generate_prompt(task, n, source.x_lo, source.x_hi, rng);
}

}  // namespace

VerifyCheck verify_featurization(const std::vector<std::size_t>& degrees,
                                 const std::vector<std::size_t>& ns, std::size_t prompts,
                                 std::uint64_t seed) {
  double worst = 0.0;
  std::string where = "none";
  std::size_t index = 0;
  for (std::size_t d : degrees) {
    for (std::size_t n : ns) {
      const TransformerNetwork net = build_poly_featurizer(d, n);
      TaskSource source;
      source.degree = d;
      for (std::size_t i = 0; i < prompts; ++i, ++index) {
        SeededRng rng(seed, Stream::kDiagnostic, index);
        const Prompt p = random_prompt(source, n, rng);
        const EmbeddedPrompt e = embed(p, net.d_embed);
        const Matrix out = network_trace(net, e);
        Matrix expected = e.matrix;
        for (std::size_t t = 0; t <= n; ++t) {
          const double x = e.matrix(0, t);
          double power = 1.0;
          for (std::size_t k = 0; k <= d; ++k) {
            expected(1 + k, t) = power;
            power *= x;
          }
        }
        for (std::size_t r = 0; r < out.rows(); ++r) {
          for (std::size_t t = 0; t < out.cols(); ++t) {
            const double dev = std::abs(out(r, t) - expected(r, t));
            if (!(dev <= worst)) {
              worst = dev;
              where = "d=" + std::to_string(d) + " n=" + std::to_string(n) + " prompt " +
                      std::to_string(i) + " entry (" + std::to_string(r) + "," +
                      std::to_string(t) + ")";
            }
          }
        }
      }
    }
  }
  return finish("featurization", worst, 1e-9, "worst at " + where);
}

VerifyCheck verify_poly_oracle(std::size_t d, std::size_t n, std::size_t prompts,
                               std::uint64_t seed) {
  OracleRecipe recipe;
  recipe.kind = OracleRecipe::Kind::kPoly;
  recipe.d = d;
  recipe.n = n;
  const TransformerNetwork net = build_oracle(recipe);
  const FeatureSpec spec = recipe.feature_spec();
  const Matrix sigma_inv = invert(population_sigma(spec, -1.0, 1.0));
  TaskSource source;
  source.degree = d;
  double worst = 0.0;
  for (std::size_t i = 0; i < prompts; ++i) {
    SeededRng rng(seed, Stream::kDiagnostic, i);
    const Prompt p = random_prompt(source, n, rng);
    const double got = network_predict(net, embed(p, net.d_embed));
    const double want = reference_predict(p.xs, p.ys, p.query, spec, sigma_inv);
    worst = std::max(worst, std::abs(got - want) / std::max(1.0, std::abs(want)));
  }
  return finish("poly oracle d=" + std::to_string(d) + " n=" + std::to_string(n), worst, 1e-8,
                std::to_string(prompts) + " prompts, deviation relative to max(1,|reference|)");
}

VerifyCheck verify_spline_oracle(int q, std::size_t m, std::size_t n, std::size_t prompts,
                                 std::uint64_t seed) {
  OracleRecipe recipe;
  recipe.kind = q == 1 ? OracleRecipe::Kind::kLinearSpline : OracleRecipe::Kind::kQuadraticSpline;
  recipe.grid = KnotGrid{-1.0, 1.0, m, q};
  recipe.n = n;
  const TransformerNetwork net = build_oracle(recipe);
  const FeatureSpec spec = recipe.feature_spec();
  const Matrix sigma_inv = invert(population_sigma(spec, -1.0, 1.0));
  double worst = 0.0;
  for (std::size_t i = 0; i < prompts; ++i) {
    SeededRng rng(seed, Stream::kDiagnostic, i);
    // Targets from a random degree-4 polynomial; the identity holds for any outputs.
    const RegressionTask task = sample_poly_task(4, rng);
    const Prompt p = generate_prompt(task, n, -1.0, 1.0, rng);
    const double got = network_predict(net, embed(p, net.d_embed));
    const double want = reference_predict(p.xs, p.ys, p.query, spec, sigma_inv);
    worst = std::max(worst, std::abs(got - want) / std::max(1.0, std::abs(want)));
  }
  return finish(std::string(q == 1 ? "linear" : "quadratic") + " spline oracle m=" +
                    std::to_string(m) + " n=" + std::to_string(n),
                worst, 1e-8, std::to_string(prompts) + " prompts");
}

VerifyCheck verify_vector_oracle(std::size_t d, std::size_t out_dim, std::size_t n,
                                 std::size_t prompts, std::uint64_t seed) {
  OracleRecipe recipe;
  recipe.kind = OracleRecipe::Kind::kVector;
  recipe.d = d;
  recipe.n = n;
  recipe.out_dim = out_dim;
  const TransformerNetwork net = build_oracle(recipe);
  const FeatureSpec spec = recipe.feature_spec();
  const Matrix sigma_inv = invert(population_sigma(spec, -1.0, 1.0));
  double worst = 0.0;
  for (std::size_t i = 0; i < prompts; ++i) {
    SeededRng rng(seed, Stream::kDiagnostic, i);
    std::vector<RegressionTask> tasks;
    for (std::size_t j = 0; j < out_dim; ++j) tasks.push_back(sample_poly_task(d, rng));
    std::vector<double> xs(n);
    Matrix ys(n, out_dim);
    for (std::size_t t = 0; t < n; ++t) {
      xs[t] = rng.uniform(-1.0, 1.0);
      for (std::size_t j = 0; j < out_dim; ++j) ys(t, j) = tasks[j].eval(xs[t]);
    }
    const double query = rng.uniform(-1.0, 1.0);
    const std::vector<double> got =
        network_forward(net, embed_vector_prompt(xs, ys, query, net.d_embed));
    const std::vector<double> want = reference_predict_vector(xs, ys, query, spec, sigma_inv);
    for (std::size_t j = 0; j < out_dim; ++j) {
      worst = std::max(worst, std::abs(got[j] - want[j]) / std::max(1.0, std::abs(want[j])));
    }
  }
  return finish("vector oracle d=" + std::to_string(d) + " D=" + std::to_string(out_dim) +
                    " n=" + std::to_string(n),
                worst, 1e-8, std::to_string(prompts) + " prompts");
}

VerifyCheck verify_interaction_heads(std::size_t count, std::uint64_t seed) {
  double worst_on = 0.0;
  double worst_off = 0.0;
  std::string where = "none";
  for (std::size_t i = 0; i < count; ++i) {
    SeededRng rng(seed, Stream::kDiagnostic, i);
    const std::size_t d = 8 + static_cast<std::size_t>(rng.below(7));
    const std::size_t ell = 1 + static_cast<std::size_t>(rng.below(64));
    const double u = 1.5;
    // Data rows are random in [-1, 1]; the fixed rows follow the embedding.
    Matrix h(d, ell);
    for (std::size_t r = 0; r + 3 < d; ++r) {
      for (std::size_t t = 0; t < ell; ++t) h(r, t) = rng.uniform(-1.0, 1.0);
    }
    for (std::size_t t = 0; t < ell; ++t) {
      const auto [c, s] = positional_encoding(t, ell);
      h(layout::pe_cos_row(d), t) = c;
      h(layout::pe_sin_row(d), t) = s;
      h(layout::bias_row(d), t) = 1.0;
    }
    InteractionSpec spec;
    spec.t1 = static_cast<std::size_t>(rng.below(ell));
    spec.t2 = static_cast<std::size_t>(rng.below(ell));
    spec.out_row = static_cast<std::size_t>(rng.below(d - 3));
    spec.q_data = empty_kernel(d);
    spec.k_data = empty_kernel(d);
    // Sparse kernels leave at least one free row for the shift.
    const std::size_t used = 1 + static_cast<std::size_t>(rng.below(d - 4));
    for (std::size_t r = 0; r < used; ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        if (rng.uniform01() < 0.3) spec.q_data(r, c) = rng.uniform(-1.0, 1.0);
        if (rng.uniform01() < 0.3) spec.k_data(r, c) = rng.uniform(-1.0, 1.0);
      }
    }
    spec.scale = rng.uniform(-2.0, 2.0);
    spec.shift = rng.uniform01() < 0.5 ? 0.0 : rng.uniform(0.0, 5.0);
    const AttentionHead head = build_interaction_head(spec, ell, d, u);
    const Matrix out = attention_forward(head, h, ActivationSpec::relu());
    // Contract: scale·ReLU(<q_data h_t1, k_data h_t2> + shift) at (out_row, t1).
    double score = 0.0;
    for (std::size_t r = 0; r + 3 < d; ++r) {
      double a = 0.0, b = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        a += spec.q_data(r, c) * h(c, spec.t1);
        b += spec.k_data(r, c) * h(c, spec.t2);
      }
      score += a * b;
    }
    const double want = spec.scale * std::max(0.0, score + spec.shift);
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t t = 0; t < ell; ++t) {
        if (r == spec.out_row && t == spec.t1) {
          const double dev = std::abs(out(r, t) - want);
          if (dev > worst_on) worst_on = dev;
        } else if (out(r, t) != 0.0) {
          if (std::abs(out(r, t)) > worst_off) {
            worst_off = std::abs(out(r, t));
            where = "head " + std::to_string(i) + " entry (" + std::to_string(r) + "," +
                    std::to_string(t) + ")";
          }
        }
      }
    }
  }
  // Off-target entries must be exactly zero: any nonzero fails the check.
  VerifyCheck c = finish("interaction heads", worst_on, 1e-10,
                         std::to_string(count) + " heads, max off-target |value| " +
                             short_fmt(worst_off) + (worst_off > 0.0 ? " at " + where : ""));
  if (worst_off != 0.0) c.pass = false;
  return c;
}

VerifyCheck verify_decrement(const std::vector<double>& shifts, std::uint64_t seed) {
  double worst = 0.0;
  std::size_t index = 0;
  for (double m : shifts) {
    for (std::size_t i = 0; i < 100; ++i, ++index) {
      SeededRng rng(seed, Stream::kDiagnostic, index);
      const std::size_t d = 8 + static_cast<std::size_t>(rng.below(7));
      const std::size_t ell = 1 + static_cast<std::size_t>(rng.below(64));
      std::size_t r0 = static_cast<std::size_t>(rng.below(d - 3));
      std::size_t r1 = static_cast<std::size_t>(rng.below(d - 3));
      if (r0 > r1) std::swap(r0, r1);
      std::size_t c0 = static_cast<std::size_t>(rng.below(ell + 1));
      std::size_t c1 = static_cast<std::size_t>(rng.below(ell + 1));
      if (c0 > c1) std::swap(c0, c1);
      Matrix h(d, ell);
      for (std::size_t r = 0; r + 3 < d; ++r) {
        for (std::size_t t = 0; t < ell; ++t) h(r, t) = rng.uniform(-1.0, 1.0);
      }
      for (std::size_t t = 0; t < ell; ++t) {
        const auto [c, s] = positional_encoding(t, ell);
        h(layout::pe_cos_row(d), t) = c;
        h(layout::pe_sin_row(d), t) = s;
        h(layout::bias_row(d), t) = 1.0;
      }
      Matrix shifted = h;
      for (std::size_t r = r0; r <= r1; ++r) {
        for (std::size_t t = c0; t < c1; ++t) shifted(r, t) += m;
      }
      const Ffn ffn = build_decrementing_ffn(r0, r1, c0, c1, m, ell, d);
      Matrix out = shifted;
      out += ffn_forward(ffn, shifted);
      worst = std::max(worst, max_norm(out - h));
    }
  }
  std::string list;
  for (double m : shifts) list += (list.empty() ? "" : ",") + short_fmt(m);
  return finish("decrementing ffn", worst, 1e-10, "shifts " + list + ", 100 cases each");
}

std::vector<VerifyCheck> run_verify_oracle(const ExperimentConfig& config) {
  const std::uint64_t seed = config.seeds.empty() ? 0 : config.seeds.front();
  const std::size_t prompts = config.trials;
  std::vector<VerifyCheck> checks;
  checks.push_back(verify_featurization(config.degrees, config.n_values, prompts, seed));
  for (std::size_t d : config.degrees) {
    checks.push_back(verify_poly_oracle(d, config.n_values.front(), prompts, seed));
  }
  checks.push_back(verify_spline_oracle(1, 5, config.n_values.front(), prompts, seed));
  checks.push_back(verify_spline_oracle(2, 4, config.n_values.front(), prompts, seed));
  checks.push_back(verify_vector_oracle(4, 2, config.n_values.front(), prompts, seed));
  checks.push_back(verify_interaction_heads(1000, seed));
  checks.push_back(verify_decrement({10.0, 1e3, 1e6}, seed));
  return checks;
}

std::string verify_report(const std::vector<VerifyCheck>& checks) {
  std::string out;
  char buf[512];
  for (const VerifyCheck& c : checks) {
    std::snprintf(buf, sizeof(buf), "%s  %-36s max deviation %.3e (tolerance %.0e)  %s\n",
                  c.pass ? "PASS" : "FAIL", c.name.c_str(), c.max_deviation, c.tolerance,
                  c.detail.c_str());
    out += buf;
  }
  return out;
}

namespace {

std::string first_matrix_diff(const Matrix& a, const Matrix& b, const std::string& where) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    return where + " shape " + a.shape_string() + " vs rebuilt " + b.shape_string();
  }
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) {
      if (a(r, c) != b(r, c) && !(std::isnan(a(r, c)) && std::isnan(b(r, c)))) {
        return where + "(" + std::to_string(r) + "," + std::to_string(c) + "): file " +
               fmt(a(r, c)) + " vs rebuilt " + fmt(b(r, c));
      }
    }
  }
  return "";
}

}  // namespace

std::string compare_with_rebuild(const TransformerNetwork& net) {
  const TransformerNetwork ref = build_oracle(OracleRecipe::from_metadata(net.metadata));
  if (net.d_embed != ref.d_embed) return "d_embed differs";
  if (net.readout_row != ref.readout_row || net.readout_count != ref.readout_count) {
    return "readout differs";
  }
  if (net.blocks.size() != ref.blocks.size()) return "block count differs";
  for (std::size_t b = 0; b < net.blocks.size(); ++b) {
    const TransformerBlock& x = net.blocks[b];
    const TransformerBlock& y = ref.blocks[b];
    const std::string bw = "block " + std::to_string(b);
    if (!(x.activation == y.activation)) return bw + " activation differs";
    if (x.heads.size() != y.heads.size()) return bw + " head count differs";
    for (std::size_t h = 0; h < x.heads.size(); ++h) {
      const std::string hw = bw + " head " + std::to_string(h) + " ";
      std::string d = first_matrix_diff(x.heads[h].q, y.heads[h].q, hw + "q");
      if (!d.empty()) return d;
      if (x.heads[h].k.has_value() != y.heads[h].k.has_value()) return hw + "key presence differs";
      if (x.heads[h].k) {
        d = first_matrix_diff(*x.heads[h].k, *y.heads[h].k, hw + "k");
        if (!d.empty()) return d;
      }
      d = first_matrix_diff(x.heads[h].v, y.heads[h].v, hw + "v");
      if (!d.empty()) return d;
    }
    if (x.ffn.has_value() != y.ffn.has_value()) return bw + " ffn presence differs";
    if (!x.ffn) continue;
    if (x.ffn->layers.size() != y.ffn->layers.size()) return bw + " ffn depth differs";
    for (std::size_t l = 0; l < x.ffn->layers.size(); ++l) {
      const std::string lw = bw + " ffn layer " + std::to_string(l) + " ";
      std::string d = first_matrix_diff(x.ffn->layers[l].weight, y.ffn->layers[l].weight,
                                        lw + "weight");
      if (!d.empty()) return d;
      const auto& bx = x.ffn->layers[l].bias;
      const auto& by = y.ffn->layers[l].bias;
      if (bx.size() != by.size()) return lw + "bias length differs";
      for (std::size_t i = 0; i < bx.size(); ++i) {
        if (bx[i] != by[i]) {
          return lw + "bias[" + std::to_string(i) + "]: file " + fmt(bx[i]) + " vs rebuilt " +
                 fmt(by[i]);
        }
      }
    }
  }
  return "";
}

std::vector<BernsteinReport> run_bernstein(const ExperimentConfig& config) {
  std::vector<BernsteinReport> out;
  const std::uint64_t seed = config.seeds.empty() ? 0 : config.seeds.front();
  for (std::size_t d : config.degrees) {
    for (std::size_t n : config.n_values) {
      out.push_back(bernstein_diagnostic(n, FeatureSpec::monomial(d), -1.0, 1.0, config.trials,
                                         seed));
    }
  }
  return out;
}

}  // namespace icreg
