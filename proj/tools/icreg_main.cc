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

// icreg: build, verify and train in-context regression transformers.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "icreg/constructions.h"
#include "icreg/experiments.h"
#include "icreg/network_io.h"
#include "icreg/training.h"

using namespace icreg;

namespace {

struct Globals {
  std::string config_path;
  std::string preset;
  std::string seed;
  std::string out;
  std::string jobs;
};

// Per-key overrides shared by the experiment subcommands.
struct Overrides {
  std::map<std::string, std::string> values;

  void attach(CLI::App* cmd) {
    static const std::vector<std::pair<std::string, std::string>> kKeys = {
        {"architectures", "comma-separated: theory, linear, softmax, oracle"},
        {"n", "context lengths"},
        {"L", "training set sizes"},
        {"axis", "swept variable: n or L"},
        {"d", "polynomial degree(s)"},
        {"m", "spline interval count"},
        {"heads", "heads per block: n/8 or an integer"},
        {"blocks", "number of blocks"},
        {"ffn", "true or false"},
        {"ablation", "heads4, heads1, deep16x1 or no_ffn"},
        {"seeds", "comma-separated seeds"},
        {"epochs", "training epochs"},
        {"batch", "batch size"},
        {"lr", "Adam learning rate"},
        {"init_std", "initialization standard deviation"},
        {"test_size", "test prompts per cell"},
        {"trials", "trials or prompts per cell"},
        {"checkpoints", "save per-cell checkpoints: true or false"},
    };
    for (const auto& [key, help] : kKeys) {
      cmd->add_option("--" + key, values[key], help);
    }
  }

  std::vector<std::pair<std::string, std::string>> flags(const CLI::App* cmd,
                                                         const Globals& g) const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [key, value] : values) {
      if (cmd->count("--" + key) > 0) out.emplace_back(key, value);
    }
    if (!g.seed.empty()) out.emplace_back("seed", g.seed);
    if (!g.out.empty()) out.emplace_back("out", g.out);
    if (!g.jobs.empty()) out.emplace_back("jobs", g.jobs);
    return out;
  }
};

ExperimentConfig load_config(ExperimentKind kind, const CLI::App* cmd, const Globals& g,
                             const Overrides& o) {
  const std::string text = g.config_path.empty() ? std::string() : read_file(g.config_path);
  return parse_config(kind, g.preset, text, o.flags(cmd, g));
}

void print_curves(const RunResult& r) {
  std::printf("%-10s %8s %8s %6s %14s %12s\n", "arch", "n", "L", "seeds", "mean_mse", "sd");
  for (const CurvePoint& p : r.curves) {
    std::printf("%-10s %8zu %8zu %6zu %14.6g %12.4g\n", p.architecture.c_str(), p.n, p.L,
                p.seeds, p.mean, p.sd);
  }
  std::string last;
  for (const CurvePoint& p : r.curves) {
    if (p.architecture == last) continue;
    last = p.architecture;
    std::printf("slope[%s] = %.4f +- %.4f\n", last.c_str(), p.slope, p.slope_ci);
  }
  std::size_t failed = 0;
  for (const CellResult& c : r.cells) {
    if (c.ok) continue;
    ++failed;
    std::fprintf(stderr, "cell %s n=%zu L=%zu seed=%llu failed: %s\n",
                 c.cell.architecture.c_str(), c.cell.n, c.cell.L,
                 static_cast<unsigned long long>(c.cell.seed), c.message.c_str());
  }
  std::printf("%zu cells, %zu failed; results in %s\n", r.cells.size(), failed,
              r.config.out.c_str());
}

int run_experiment(ExperimentKind kind, const CLI::App* cmd, const Globals& g,
                   const Overrides& o) {
  const ExperimentConfig config = load_config(kind, cmd, g, o);
  const RunResult r = run_sweep(config);
  write_run(r);
  print_curves(r);
  return 0;
}

TaskSource poly_source(std::size_t d) {
  TaskSource s;
  s.degree = d;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"In-context regression with constructed and trained transformers"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "key = value config file");
  app.add_option("--preset", g.preset, "paper-fig1 or desk");
  app.add_option("--seed", g.seed, "first seed of the seed list");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--jobs", g.jobs, "worker threads");
  app.fallthrough();

  // construct
  auto* construct = app.add_subcommand("construct", "build an oracle network and save it");
  std::string oracle_kind = "poly";
  OracleRecipe recipe;
  std::string construct_out;
  construct->add_option("--oracle", oracle_kind, "poly, linear-spline, quadratic-spline, vector");
  construct->add_option("--d", recipe.d, "polynomial degree");
  construct->add_option("--n", recipe.n, "context length");
  construct->add_option("--m", recipe.grid.m, "spline interval count");
  construct->add_option("--D", recipe.out_dim, "output dimension (vector oracle)");
  construct->add_option("--R", recipe.input_bound, "input bound");
  construct->add_option("-o,--output", construct_out, "network file")->required();

  // verify-oracle
  auto* verify = app.add_subcommand("verify-oracle", "run the exactness suite");
  std::string verify_network;
  verify->add_option("--network", verify_network, "check a saved oracle against a rebuild");
  Overrides verify_o;
  verify_o.attach(verify);

  std::map<ExperimentKind, std::pair<CLI::App*, Overrides>> sweeps;
  sweeps[ExperimentKind::kScaleN].first = app.add_subcommand("scale-n", "test loss vs n");
  sweeps[ExperimentKind::kScaleL].first = app.add_subcommand("scale-L", "test loss vs L");
  sweeps[ExperimentKind::kAblation].first =
      app.add_subcommand("ablation", "head and FFN ablations");
  sweeps[ExperimentKind::kSpline].first = app.add_subcommand("spline", "linear-spline tasks");
  for (auto& [kind, entry] : sweeps) entry.second.attach(entry.first);

  auto* bern = app.add_subcommand("bernstein", "covariance concentration diagnostic");
  Overrides bern_o;
  bern_o.attach(bern);

  // train
  auto* train_cmd = app.add_subcommand("train", "train one model");
  ModelConfig model;
  std::string arch = "theory";
  std::string heads = "n/8";
  std::size_t train_n = 32, train_L = 8000, train_d = 4, test_size = 1000;
  std::uint64_t train_seed = 0;
  TrainConfig tc;
  std::string data_path;
  bool no_ffn = false;
  train_cmd->add_option("--arch", arch, "theory, linear or softmax");
  train_cmd->add_option("--heads", heads, "n/8 or an integer");
  train_cmd->add_option("--blocks", model.num_blocks, "blocks");
  train_cmd->add_flag("--no-ffn", no_ffn, "attention-only blocks");
  train_cmd->add_option("--d", train_d, "polynomial degree of the tasks");
  train_cmd->add_option("--n", train_n, "context length");
  train_cmd->add_option("--L", train_L, "training prompts");
  train_cmd->add_option("--test-size", test_size, "test prompts");
  train_cmd->add_option("--epochs", tc.epochs, "epochs");
  train_cmd->add_option("--batch", tc.batch_size, "batch size");
  train_cmd->add_option("--lr", tc.adam.lr, "learning rate");
  train_cmd->add_option("--data", data_path, "dataset file instead of generated prompts");
  train_cmd->add_option("--train-seed", train_seed, "seed for data, init and shuffling");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "test loss of a saved network or checkpoint");
  std::string eval_network, eval_checkpoint, eval_data;
  std::size_t eval_n = 32, eval_d = 4, eval_count = 1000;
  std::uint64_t eval_seed = 0;
  eval_cmd->add_option("--network", eval_network, "network file");
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint file");
  eval_cmd->add_option("--data", eval_data, "dataset file");
  eval_cmd->add_option("--n", eval_n, "context length of generated prompts");
  eval_cmd->add_option("--d", eval_d, "polynomial degree of generated prompts");
  eval_cmd->add_option("--count", eval_count, "number of generated prompts");
  eval_cmd->add_option("--eval-seed", eval_seed, "seed of generated prompts");

  CLI11_PARSE(app, argc, argv);

  try {
    if (construct->parsed()) {
      recipe.kind = parse_oracle_kind(oracle_kind);
      if (recipe.kind == OracleRecipe::Kind::kQuadraticSpline) recipe.grid.q = 2;
      const TransformerNetwork net = build_oracle(recipe);
      save_network(net, construct_out);
      std::printf("%s: %zu blocks, %zu heads, d_embed %zu, max |weight| %.6g\n",
                  construct_out.c_str(), net.blocks.size(), head_count(net), net.d_embed,
                  max_weight(net));
      return 0;
    }
    if (verify->parsed()) {
      if (!verify_network.empty()) {
        TransformerNetwork net;
        try {
          net = load_network(verify_network);
        } catch (const std::exception& e) {
          std::printf("FAIL  %s does not decode: %s\n", verify_network.c_str(), e.what());
          return 1;
        }
        const std::string diff = compare_with_rebuild(net);
        if (!diff.empty()) {
          std::printf("FAIL  %s differs from its rebuild: %s\n", verify_network.c_str(),
                      diff.c_str());
          return 1;
        }
        std::printf("PASS  %s matches its rebuild exactly\n", verify_network.c_str());
        return 0;
      }
      const ExperimentConfig config =
          load_config(ExperimentKind::kVerifyOracle, verify, g, verify_o);
      const auto checks = run_verify_oracle(config);
      std::fputs(verify_report(checks).c_str(), stdout);
      for (const auto& c : checks) {
        if (!c.pass) return 1;
      }
      return 0;
    }
    for (auto& [kind, entry] : sweeps) {
      if (entry.first->parsed()) return run_experiment(kind, entry.first, g, entry.second);
    }
    if (bern->parsed()) {
      const ExperimentConfig config = load_config(ExperimentKind::kBernstein, bern, g, bern_o);
      const auto reports = run_bernstein(config);
      std::string csv = bernstein_csv_header() + "\n";
      std::size_t i = 0;
      for (std::size_t d : config.degrees) {
        std::vector<double> ns, means;
        for (std::size_t k = 0; k < config.n_values.size(); ++k, ++i) {
          csv += bernstein_csv_row(reports[i], d) + "\n";
          ns.push_back(static_cast<double>(reports[i].n));
          means.push_back(reports[i].mean_norm);
          std::printf("d=%zu n=%zu mean %.4g bound %.4g tail %.3f\n", d, reports[i].n,
                      reports[i].mean_norm, reports[i].bound, reports[i].tail_freq);
        }
        if (ns.size() >= 2) std::printf("slope[d=%zu] = %.4f\n", d, loglog_slope(ns, means));
      }
      write_file(std::filesystem::path(config.out) / "bernstein.csv", csv);
      return 0;
    }
    if (train_cmd->parsed()) {
      if (!g.seed.empty()) train_seed = std::stoull(g.seed);
      const std::filesystem::path out = g.out.empty() ? "results" : g.out;
      Dataset train_set;
      if (!data_path.empty()) {
        train_set = load_dataset(data_path);
        train_n = train_set.n;
      } else {
        train_set = generate_dataset(poly_source(train_d), train_n, train_L, train_seed,
                                     Stream::kTrainData);
      }
      const Dataset test = generate_dataset(train_set.source, train_n, test_size, train_seed,
                                            Stream::kTestData);
      model.architecture = parse_architecture(arch);
      model.heads = HeadPolicy::parse(heads);
      model.ffn = !no_ffn;
      model.d_embed = train_set.source.embed_dim();
      TransformerNetwork net = init_model(model, train_n, train_seed);
      const double init_mse = evaluate(net, test.prompts);
      tc.seed = train_seed;
      const TrainResult r = train(std::move(net), train_set.prompts, tc, test.prompts);
      for (const EpochRecord& e : r.history) {
        std::printf("epoch %3zu  train %.6g  test %.6g\n", e.epoch, e.train_mse, e.test_mse);
      }
      save_checkpoint(r.net, r.optimizer, out / "model.ckpt");
      save_network(r.net, out / "model.net");
      write_file(out / "history.csv", history_csv(r.history));
      if (r.diverged) {
        std::fprintf(stderr, "%s\n", r.message.c_str());
        return 1;
      }
      std::printf("initial test mse %.6g, final %.6g\n", init_mse, r.history.back().test_mse);
      return 0;
    }
    if (eval_cmd->parsed()) {
      TransformerNetwork net;
      if (!eval_checkpoint.empty()) {
        AdamState state;
        decode_checkpoint(read_file(eval_checkpoint), net, state);
      } else if (!eval_network.empty()) {
        net = load_network(eval_network);
      } else {
        throw InvalidArgument("eval needs --network or --checkpoint");
      }
      Dataset test = eval_data.empty()
                         ? generate_dataset(poly_source(eval_d), eval_n, eval_count, eval_seed,
                                            Stream::kTestData)
                         : load_dataset(eval_data);
      double total = 0.0;
      for (const Prompt& p : test.prompts) {
        const double e = network_predict(net, embed(p, net.d_embed)) - p.target;
        total += e * e;
      }
      std::printf("test mse %.10g over %zu prompts\n",
                  total / static_cast<double>(test.prompts.size()), test.prompts.size());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
