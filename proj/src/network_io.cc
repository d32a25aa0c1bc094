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

#include "icreg/network_io.h"

#include <bit>
#include <fstream>
#include <iterator>
#include <sstream>

namespace icreg {

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::f64s(std::span<const double> v) {
  for (double x : v) f64(x);
}

void ByteReader::need(std::size_t n) const {
  if (in_.size() - pos_ < n) {
    throw FormatError("truncated input at byte " + std::to_string(pos_) + ": need " +
                      std::to_string(n) + " more");
  }
}

std::uint8_t ByteReader::u8() {
  need(1);
  return static_cast<std::uint8_t>(in_[pos_++]);
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(in_[pos_ + i])) << (8 * i);
  }
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(in_[pos_ + i])) << (8 * i);
  }
  pos_ += 8;
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

void ByteReader::f64s(std::span<double> out) {
  need(8 * out.size());
  for (double& x : out) x = f64();
}

std::string_view ByteReader::bytes(std::size_t n) {
  need(n);
  std::string_view s = in_.substr(pos_, n);
  pos_ += n;
  return s;
}

void ByteReader::expect(std::string_view magic) {
  if (remaining() < magic.size() || in_.substr(pos_, magic.size()) != magic) {
    throw FormatError("bad magic at byte " + std::to_string(pos_) + ", expected " +
                      std::string(magic));
  }
  pos_ += magic.size();
}

namespace {

constexpr std::string_view kNetMagic = "ICRGNET1";
// Guards allocation sizes read from untrusted input.
constexpr std::uint32_t kMaxDim = 1u << 20;

std::uint32_t checked_dim(ByteReader& r, const char* what) {
  const std::uint32_t v = r.u32();
  if (v > kMaxDim) throw FormatError(std::string(what) + " out of range");
  return v;
}

Matrix read_matrix(ByteReader& r, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  r.f64s(m.data());
  return m;
}

}  // namespace

std::string encode_network(const TransformerNetwork& net) {
  validate_network(net);
  ByteWriter w;
  w.bytes(kNetMagic);
  w.u32(static_cast<std::uint32_t>(net.d_embed));
  w.u32(static_cast<std::uint32_t>(net.readout_row));
  w.u32(static_cast<std::uint32_t>(net.readout_count));
  w.u32(static_cast<std::uint32_t>(net.metadata.size()));
  w.bytes(net.metadata);
  w.u32(static_cast<std::uint32_t>(net.blocks.size()));
  for (const TransformerBlock& block : net.blocks) {
    w.u8(static_cast<std::uint8_t>(block.activation.kind));
    w.u8(static_cast<std::uint8_t>(block.activation.scaling));
    w.f64(block.activation.fixed_scale);
    w.u32(static_cast<std::uint32_t>(block.heads.size()));
    for (const AttentionHead& head : block.heads) {
      w.u8(head.k ? 1 : 0);
      w.f64s(head.q.data());
      if (head.k) w.f64s(head.k->data());
      w.f64s(head.v.data());
    }
    w.u8(block.ffn ? 1 : 0);
    if (!block.ffn) continue;
    w.u32(static_cast<std::uint32_t>(block.ffn->layers.size()));
    for (const FfnLayer& layer : block.ffn->layers) {
      w.u32(static_cast<std::uint32_t>(layer.weight.rows()));
      w.u32(static_cast<std::uint32_t>(layer.weight.cols()));
      w.f64s(layer.weight.data());
      w.f64s(layer.bias);
    }
  }
  return w.take();
}

TransformerNetwork decode_network(std::string_view bytes) {
  ByteReader r(bytes);
  r.expect(kNetMagic);
  TransformerNetwork net;
  net.d_embed = checked_dim(r, "d_embed");
  net.readout_row = checked_dim(r, "readout_row");
  net.readout_count = checked_dim(r, "readout_count");
  const std::uint32_t meta_len = checked_dim(r, "metadata length");
  net.metadata = std::string(r.bytes(meta_len));
  const std::uint32_t block_count = checked_dim(r, "block count");
  const std::size_t d = net.d_embed;
  for (std::uint32_t b = 0; b < block_count; ++b) {
    TransformerBlock block;
    const std::uint8_t kind = r.u8();
    const std::uint8_t scaling = r.u8();
    if (kind > 2 || scaling > 3) {
      throw FormatError("block " + std::to_string(b) + ": bad activation tag");
    }
    block.activation.kind = static_cast<Activation>(kind);
    block.activation.scaling = static_cast<ScoreScaling>(scaling);
    block.activation.fixed_scale = r.f64();
    const std::uint32_t heads = checked_dim(r, "head count");
    block.heads.reserve(heads);
    for (std::uint32_t h = 0; h < heads; ++h) {
      AttentionHead head;
      const std::uint8_t has_key = r.u8();
      if (has_key > 1) throw FormatError("bad key flag");
      head.q = read_matrix(r, d, d);
      if (has_key) head.k = read_matrix(r, d, d);
      head.v = read_matrix(r, d, d);
      block.heads.push_back(std::move(head));
    }
    const std::uint8_t has_ffn = r.u8();
    if (has_ffn > 1) throw FormatError("bad ffn flag");
    if (has_ffn) {
      Ffn ffn;
      const std::uint32_t layers = checked_dim(r, "ffn layer count");
      for (std::uint32_t l = 0; l < layers; ++l) {
        const std::uint32_t rows = checked_dim(r, "ffn rows");
        const std::uint32_t cols = checked_dim(r, "ffn cols");
        FfnLayer layer;
        layer.weight = read_matrix(r, rows, cols);
        layer.bias.resize(rows);
        r.f64s(layer.bias);
        ffn.layers.push_back(std::move(layer));
      }
      block.ffn = std::move(ffn);
    }
    net.blocks.push_back(std::move(block));
  }
  if (r.remaining() != 0) {
    throw FormatError(std::to_string(r.remaining()) + " trailing bytes after network");
  }
  validate_network(net);
  return net;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

void save_network(const TransformerNetwork& net, const std::filesystem::path& path) {
  write_file(path, encode_network(net));
}

TransformerNetwork load_network(const std::filesystem::path& path) {
  return decode_network(read_file(path));
}

}  // namespace icreg
