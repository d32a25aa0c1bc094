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

// flip_bit FILE OFFSET BIT: flips one bit of a file in place.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <string>

int main(int argc, char** argv) {
  if (argc != 4) {
    std::fprintf(stderr, "usage: flip_bit FILE OFFSET BIT\n");
    return 2;
  }
  std::string bytes;
  {
    std::ifstream in(argv[1], std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  const long long size = static_cast<long long>(bytes.size());
  long long offset = std::atoll(argv[2]);
  if (offset < 0) offset += size;
  if (offset < 0 || offset >= size) {
    std::fprintf(stderr, "offset out of range\n");
    return 2;
  }
  bytes[static_cast<std::size_t>(offset)] ^= static_cast<char>(1 << (std::atoi(argv[3]) & 7));
  std::ofstream out(argv[1], std::ios::binary | std::ios::trunc);
  out << bytes;
  return out ? 0 : 1;
}
