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

#include "icreg/tasks.h"

#include "icreg/network_io.h"

namespace icreg {

double RegressionTask::eval(double x) const {
  if (kind == Kind::kLegendre) return legendre_eval(coeffs, x);
  const std::vector<double> basis = bspline_basis(x, grid);
  if (basis.size() != coeffs.size()) {
    throw DimensionError("spline task has " + std::to_string(coeffs.size()) +
                         " coefficients for " + std::to_string(basis.size()) + " basis functions");
  }
  return dot(coeffs, basis);
}

RegressionTask sample_poly_task(std::size_t d, SeededRng& rng) {
  RegressionTask t;
  t.kind = RegressionTask::Kind::kLegendre;
  t.coeffs.resize(d + 1);
  for (double& c : t.coeffs) c = rng.uniform(-1.0, 1.0);
  return t;
}

RegressionTask sample_spline_task(const KnotGrid& grid, double lo, double hi, SeededRng& rng) {
  grid.validate();
  if (grid.q != 1) throw InvalidArgument("spline tasks use degree-1 grids");
  if (hi < lo) throw InvalidArgument("spline task coefficient range is empty");
  RegressionTask t;
  t.kind = RegressionTask::Kind::kLinearSpline;
  t.grid = grid;
  t.coeffs.resize(grid.basis_count());
  for (double& c : t.coeffs) c = rng.uniform(lo, hi);
  return t;
}

Prompt generate_prompt(const RegressionTask& task, std::size_t n, double a, double b,
                       SeededRng& rng) {
  if (n < 1) throw InvalidArgument("generate_prompt: n must be at least 1");
  Prompt p;
  p.xs.resize(n);
  p.ys.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.xs[i] = rng.uniform(a, b);
    p.ys[i] = task.eval(p.xs[i]);
  }
  p.query = rng.uniform(a, b);
  p.target = task.eval(p.query);
  return p;
}

EmbeddedPrompt embed(const Prompt& p, std::size_t d_embed) {
  return embed_prompt(p.xs, p.ys, p.query, d_embed);
}

RegressionTask TaskSource::sample(SeededRng& rng) const {
  return kind == RegressionTask::Kind::kLegendre ? sample_poly_task(degree, rng)
                                                 : sample_spline_task(grid, coeff_lo, coeff_hi, rng);
}

std::size_t TaskSource::embed_dim() const {
  return kind == RegressionTask::Kind::kLegendre ? degree + 7 : grid.m + 7;
}

FeatureSpec TaskSource::feature_spec() const {
  return kind == RegressionTask::Kind::kLegendre ? FeatureSpec::monomial(degree)
                                                 : FeatureSpec::spline(grid);
}

Dataset generate_dataset(const TaskSource& source, std::size_t n, std::size_t count,
                         std::uint64_t seed, Stream stream) {
  if (count < 1) throw InvalidArgument("generate_dataset: need at least one prompt");
  Dataset ds;
  ds.source = source;
  ds.n = n;
  ds.seed = seed;
  ds.stream = static_cast<std::uint64_t>(stream);
  ds.prompts.reserve(count);
  ds.tasks.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SeededRng rng(seed, stream, i);
    ds.tasks.push_back(source.sample(rng));
    ds.prompts.push_back(generate_prompt(ds.tasks.back(), n, source.x_lo, source.x_hi, rng));
  }
  return ds;
}

namespace {
constexpr std::string_view kDataMagic = "ICRGDAT1";
}

std::string encode_dataset(const Dataset& ds) {
  ByteWriter w;
  w.bytes(kDataMagic);
  w.u32(kDatasetVersion);
  w.u8(static_cast<std::uint8_t>(ds.source.kind));
  w.u32(static_cast<std::uint32_t>(ds.source.degree));
  w.u32(static_cast<std::uint32_t>(ds.source.grid.m));
  w.u8(static_cast<std::uint8_t>(ds.source.grid.q));
  w.f64(ds.source.grid.a);
  w.f64(ds.source.grid.b);
  w.f64(ds.source.coeff_lo);
  w.f64(ds.source.coeff_hi);
  w.f64(ds.source.x_lo);
  w.f64(ds.source.x_hi);
  w.u32(static_cast<std::uint32_t>(ds.n));
  w.u32(static_cast<std::uint32_t>(ds.prompts.size()));
  w.u64(ds.seed);
  w.u64(ds.stream);
  for (const Prompt& p : ds.prompts) {
    if (p.xs.size() != ds.n || p.ys.size() != ds.n) {
      throw DimensionError("dataset record does not have n = " + std::to_string(ds.n) + " pairs");
    }
    w.f64s(p.xs);
    w.f64s(p.ys);
    w.f64(p.query);
    w.f64(p.target);
  }
  return w.take();
}

Dataset decode_dataset(const std::string& bytes) {
  ByteReader r(bytes);
  r.expect(kDataMagic);
  const std::uint32_t version = r.u32();
  if (version != kDatasetVersion) {
    throw FormatError("unsupported dataset version " + std::to_string(version));
  }
  Dataset ds;
  const std::uint8_t kind = r.u8();
  if (kind > 1) throw FormatError("bad task kind in dataset header");
  ds.source.kind = static_cast<RegressionTask::Kind>(kind);
  ds.source.degree = r.u32();
  ds.source.grid.m = r.u32();
  ds.source.grid.q = r.u8();
  ds.source.grid.a = r.f64();
  ds.source.grid.b = r.f64();
  ds.source.coeff_lo = r.f64();
  ds.source.coeff_hi = r.f64();
  ds.source.x_lo = r.f64();
  ds.source.x_hi = r.f64();
  ds.n = r.u32();
  const std::uint32_t count = r.u32();
  ds.seed = r.u64();
  ds.stream = r.u64();
  const std::size_t record = 8 * (2 * ds.n + 2);
  if (r.remaining() != record * count) {
    throw FormatError("dataset body has " + std::to_string(r.remaining()) + " bytes, expected " +
                      std::to_string(record * count));
  }
  ds.prompts.resize(count);
  for (Prompt& p : ds.prompts) {
    p.xs.resize(ds.n);
    p.ys.resize(ds.n);
    r.f64s(p.xs);
    r.f64s(p.ys);
    p.query = r.f64();
    p.target = r.f64();
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  write_file(path, encode_dataset(ds));
}

Dataset load_dataset(const std::filesystem::path& path) { return decode_dataset(read_file(path)); }

}  // namespace icreg
