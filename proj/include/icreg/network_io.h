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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "icreg/transformer.h"

namespace icreg {

// Binary network container, all integers little-endian:
//
//   magic "ICRGNET1"
//   u32 d_embed, u32 readout_row, u32 readout_count
//   u32 metadata length, metadata bytes
//   u32 block count, then per block:
//     u8 activation, u8 scaling, f64 fixed_scale, u32 head count
//     per head: u8 has_key, f64[d*d] q, [f64[d*d] k], f64[d*d] v
//     u8 has_ffn, [u32 layer count, per layer: u32 out, u32 in,
//                  f64[out*in] weight, f64[out] bias]
//
// Doubles are stored as their IEEE-754 bit patterns, so a decode/encode
// round trip reproduces the input bytes.
std::string encode_network(const TransformerNetwork& net);
TransformerNetwork decode_network(std::string_view bytes);

void save_network(const TransformerNetwork& net, const std::filesystem::path& path);
TransformerNetwork load_network(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

// Little-endian primitive encoding shared by the other container formats.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void f64s(std::span<const double> v);
  void bytes(std::string_view s) { out_.append(s); }
  const std::string& str() const { return out_; }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view in) : in_(in) {}
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  void f64s(std::span<double> out);
  std::string_view bytes(std::size_t n);
  void expect(std::string_view magic);
  std::size_t remaining() const { return in_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const;
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace icreg
