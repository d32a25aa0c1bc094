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

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <set>
#include <sstream>

#include "icreg/experiments.h"

namespace icreg {

const char* experiment_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kScaleN:
      return "scale_n";
    case ExperimentKind::kScaleL:
      return "scale_L";
    case ExperimentKind::kAblation:
      return "ablation";
    case ExperimentKind::kSpline:
      return "spline";
    case ExperimentKind::kVerifyOracle:
      return "verify_oracle";
    case ExperimentKind::kBernstein:
      return "bernstein";
  }
  return "unknown";
}

ExperimentKind parse_experiment(const std::string& name) {
  std::string s = name;
  std::replace(s.begin(), s.end(), '-', '_');
  for (auto k : {ExperimentKind::kScaleN, ExperimentKind::kScaleL, ExperimentKind::kAblation,
                 ExperimentKind::kSpline, ExperimentKind::kVerifyOracle,
                 ExperimentKind::kBernstein}) {
    if (s == experiment_name(k)) return k;
  }
  throw InvalidArgument("unknown experiment '" + name + "'");
}

namespace {

std::vector<std::size_t> powers_of_two(std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> out;
  for (std::size_t v = lo; v <= hi; v *= 2) out.push_back(v);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
bool parse_unsigned(const std::string& s, T& out) {
  if (s.empty() || s[0] == '-' || s[0] == '+') return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::size_t to_size(const ConfigEntry& e, const std::string& s) {
  std::size_t v = 0;
  if (!parse_unsigned(s, v)) {
    throw ConfigError(e.line, "'" + e.key + "' expects a non-negative integer, got '" + s + "'");
  }
  return v;
}

double to_double(const ConfigEntry& e) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(e.value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != e.value.size()) {
    throw ConfigError(e.line, "'" + e.key + "' expects a number, got '" + e.value + "'");
  }
  return v;
}

bool to_bool(const ConfigEntry& e) {
  if (e.value == "true" || e.value == "1" || e.value == "yes" || e.value == "on") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no" || e.value == "off") return false;
  throw ConfigError(e.line, "'" + e.key + "' expects true or false, got '" + e.value + "'");
}

std::vector<std::size_t> to_sizes(const ConfigEntry& e) {
  std::vector<std::size_t> out;
  for (const std::string& item : split_list(e.value)) out.push_back(to_size(e, item));
  if (out.empty()) throw ConfigError(e.line, "'" + e.key + "' expects a nonempty list");
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_same_v<T, std::string>) {
      out += v[i];
    } else {
      out += std::to_string(v[i]);
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool is_training(ExperimentKind k) {
  return k == ExperimentKind::kScaleN || k == ExperimentKind::kScaleL ||
         k == ExperimentKind::kAblation || k == ExperimentKind::kSpline;
}

void sort_unique(std::vector<std::size_t>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

ExperimentConfig preset_config(ExperimentKind kind, const std::string& preset) {
  if (!preset.empty() && preset != "paper-fig1" && preset != "desk") {
    throw ConfigError(0, "unknown preset '" + preset + "' (expected paper-fig1 or desk)");
  }
  ExperimentConfig c;
  c.experiment = kind;
  c.preset = preset;
  c.degrees = {4};
  c.architectures = {"theory", "linear", "softmax"};
  switch (kind) {
    case ExperimentKind::kScaleN:
    case ExperimentKind::kAblation:
      c.axis = "n";
      if (kind == ExperimentKind::kAblation) c.ablation = "heads4";
      break;
    case ExperimentKind::kScaleL:
      c.axis = "L";
      break;
    case ExperimentKind::kSpline:
      c.axis = "L";
      c.blocks = 2;
      c.ffn = false;
      break;
    case ExperimentKind::kVerifyOracle:
      c.degrees = {1, 2, 3, 4, 8};
      c.n_values = {4, 16, 64};
      c.trials = 100;
      c.seeds = {0};
      c.architectures = {"oracle"};
      return c;
    case ExperimentKind::kBernstein:
      c.degrees = {2, 4};
      c.n_values = powers_of_two(64, 4096);
      c.trials = 50;
      c.seeds = {0};
      c.architectures = {"oracle"};
      return c;
  }
  if (preset.empty()) return c;
  c.seeds = {0, 1, 2};
  if (preset == "paper-fig1") {
    c.epochs = 50;
    switch (kind) {
      case ExperimentKind::kScaleN:
      case ExperimentKind::kAblation:
        c.n_values = powers_of_two(16, 1024);
        c.L_values = {32000};
        break;
      case ExperimentKind::kScaleL:
        c.n_values = {128};
        c.L_values = {1000, 2000, 4000, 8000, 16000, 32000};
        break;
      case ExperimentKind::kSpline:
        c.n_values = {64};
        c.L_values = {1000, 2000, 4000, 8000, 16000};
        break;
      default:
        break;
    }
    return c;
  }
  // desk: L ≤ 16000, n ≤ 256, epochs ≤ 20.
  c.epochs = 20;
  switch (kind) {
    case ExperimentKind::kScaleN:
      c.n_values = {8, 16, 32, 64};
      c.L_values = {4000};
      break;
    case ExperimentKind::kScaleL:
      c.architectures = {"theory"};
      c.n_values = {32};
      c.L_values = {1000, 4000, 8000, 16000};
      break;
    case ExperimentKind::kAblation:
      c.architectures = {"theory"};
      c.ablation = "no_ffn";
      c.axis = "L";
      c.n_values = {32};
      c.L_values = {1000, 8000};
      break;
    case ExperimentKind::kSpline:
      c.architectures = {"theory", "linear"};
      c.n_values = {32};
      c.L_values = {1000, 4000};
      break;
    default:
      break;
  }
  return c;
}

std::vector<ConfigEntry> parse_config_text(const std::string& text) {
  std::vector<ConfigEntry> out;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(line, "expected 'key = value', got '" + body + "'");
    }
    ConfigEntry e{trim(body.substr(0, eq)), trim(body.substr(eq + 1)), line};
    if (e.key.empty()) throw ConfigError(line, "missing key before '='");
    if (e.value.empty()) throw ConfigError(line, "missing value for '" + e.key + "'");
    out.push_back(std::move(e));
  }
  return out;
}

void apply_entry(ExperimentConfig& c, const ConfigEntry& e) {
  const std::string& k = e.key;
  if (k == "experiment") {
    ExperimentKind kind;
    try {
      kind = parse_experiment(e.value);
    } catch (const InvalidArgument& ex) {
      throw ConfigError(e.line, ex.what());
    }
    if (kind != c.experiment) {
      throw ConfigError(e.line, std::string("config is for '") + experiment_name(kind) +
                                    "' but the command runs '" + experiment_name(c.experiment) +
                                    "'");
    }
  } else if (k == "architectures" || k == "architecture") {
    c.architectures = split_list(e.value);
    if (c.architectures.empty()) throw ConfigError(e.line, "'" + k + "' expects a nonempty list");
    for (const auto& a : c.architectures) {
      if (a != "theory" && a != "linear" && a != "softmax" && a != "oracle") {
        throw ConfigError(e.line, "unknown architecture '" + a + "'");
      }
    }
  } else if (k == "n") {
    c.n_values = to_sizes(e);
  } else if (k == "L") {
    c.L_values = to_sizes(e);
  } else if (k == "axis") {
    if (e.value != "n" && e.value != "L") throw ConfigError(e.line, "'axis' must be n or L");
    c.axis = e.value;
  } else if (k == "d" || k == "degree") {
    c.degrees = to_sizes(e);
  } else if (k == "m" || k == "knots") {
    c.knots = to_size(e, e.value);
  } else if (k == "heads") {
    try {
      c.heads = HeadPolicy::parse(e.value);
    } catch (const InvalidArgument& ex) {
      throw ConfigError(e.line, ex.what());
    }
  } else if (k == "blocks") {
    c.blocks = to_size(e, e.value);
  } else if (k == "ffn") {
    c.ffn = to_bool(e);
  } else if (k == "ablation") {
    if (e.value != "heads4" && e.value != "heads1" && e.value != "deep16x1" &&
        e.value != "no_ffn") {
      throw ConfigError(e.line, "unknown ablation '" + e.value +
                                    "' (expected heads4, heads1, deep16x1 or no_ffn)");
    }
    c.ablation = e.value;
  } else if (k == "seeds") {
    c.seeds.clear();
    for (const std::string& item : split_list(e.value)) c.seeds.push_back(to_size(e, item));
    if (c.seeds.empty()) throw ConfigError(e.line, "'seeds' expects a nonempty list");
  } else if (k == "seed") {
    // Renumbers the seed list to start at the given value.
    const std::uint64_t base = to_size(e, e.value);
    const std::size_t count = std::max<std::size_t>(c.seeds.size(), 1);
    c.seeds.clear();
    for (std::size_t i = 0; i < count; ++i) c.seeds.push_back(base + i);
  } else if (k == "epochs") {
    c.epochs = to_size(e, e.value);
  } else if (k == "batch") {
    c.batch = to_size(e, e.value);
  } else if (k == "lr") {
    c.lr = to_double(e);
  } else if (k == "init_std") {
    c.init_std = to_double(e);
  } else if (k == "test_size") {
    c.test_size = to_size(e, e.value);
  } else if (k == "trials") {
    c.trials = to_size(e, e.value);
  } else if (k == "jobs") {
    c.jobs = to_size(e, e.value);
  } else if (k == "checkpoints") {
    c.save_checkpoints = to_bool(e);
  } else if (k == "out") {
    c.out = e.value;
  } else {
    throw ConfigError(e.line, "unknown key '" + k + "'");
  }
}

void ExperimentConfig::validate(std::size_t line) {
  auto fail = [line](const std::string& what) { throw ConfigError(line, what); };
  sort_unique(n_values);
  sort_unique(L_values);
  if (seeds.empty()) fail("missing required field 'seeds'");
  if (n_values.empty()) fail("missing required field 'n'");
  if (n_values.front() < 1) fail("'n' values must be positive");
  if (degrees.empty()) fail("missing required field 'd'");
  if (trials < 1) fail("'trials' must be positive");
  if (jobs < 1) fail("'jobs' must be positive");
  if (!is_training(experiment)) return;

  if (L_values.empty()) fail("missing required field 'L'");
  if (L_values.front() < 1) fail("'L' values must be positive");
  if (architectures.empty()) fail("missing required field 'architectures'");
  if (degrees.size() != 1) fail("'d' takes a single value for training experiments");
  if (epochs < 1) fail("'epochs' must be positive");
  if (batch < 1) fail("'batch' must be positive");
  if (!(lr >= 0.0)) fail("'lr' must be non-negative");
  if (!(init_std >= 0.0)) fail("'init_std' must be non-negative");
  if (test_size < 1) fail("'test_size' must be positive");
  if (blocks < 1) fail("'blocks' must be positive");
  if (experiment == ExperimentKind::kScaleN) axis = "n";
  if (experiment == ExperimentKind::kScaleL) axis = "L";
  if (axis != "n" && axis != "L") fail("'axis' must be n or L");
  const auto& swept = axis == "n" ? n_values : L_values;
  const auto& fixed = axis == "n" ? L_values : n_values;
  if (swept.size() < 2) fail("'" + axis + "' needs at least two values for a sweep");
  if (fixed.size() != 1) {
    fail(std::string("'") + (axis == "n" ? "L" : "n") + "' is fixed in a sweep over " + axis +
         " and takes a single value");
  }
  if (experiment == ExperimentKind::kAblation && ablation.empty()) {
    fail("missing required field 'ablation'");
  }
  if (experiment == ExperimentKind::kSpline && knots < 1) fail("'m' must be positive");
}

std::string ExperimentConfig::echo() const {
  std::string o;
  auto line = [&](const std::string& k, const std::string& v) { o += k + " = " + v + "\n"; };
  line("experiment", experiment_name(experiment));
  line("architectures", join(architectures));
  line("n", join(n_values));
  line("L", join(L_values));
  if (!axis.empty()) line("axis", axis);
  line("d", join(degrees));
  line("m", std::to_string(knots));
  line("heads", heads.describe());
  line("blocks", std::to_string(blocks));
  line("ffn", ffn ? "true" : "false");
  if (!ablation.empty()) line("ablation", ablation);
  line("seeds", join(seeds));
  line("epochs", std::to_string(epochs));
  line("batch", std::to_string(batch));
  line("lr", fmt(lr));
  line("init_std", fmt(init_std));
  line("test_size", std::to_string(test_size));
  line("trials", std::to_string(trials));
  line("checkpoints", save_checkpoints ? "true" : "false");
  line("out", out);
  return o;
}

ExperimentConfig parse_config(ExperimentKind kind, const std::string& preset,
                              const std::string& file_text,
                              const std::vector<std::pair<std::string, std::string>>& flags) {
  ExperimentConfig c = preset_config(kind, preset);
  for (const ConfigEntry& e : parse_config_text(file_text)) apply_entry(c, e);
  for (const auto& [k, v] : flags) {
    try {
      apply_entry(c, ConfigEntry{k, v, 0});
    } catch (const ConfigError& ex) {
      throw ConfigError(0, "--" + k + ": " + (ex.what() + 8));
    }
  }
  // Missing fields are reported just past the end of the file.
  const std::size_t lines =
      file_text.empty() ? 0 : static_cast<std::size_t>(std::count(file_text.begin(), file_text.end(), '\n')) + 1;
  c.validate(lines);
  return c;
}

}  // namespace icreg
