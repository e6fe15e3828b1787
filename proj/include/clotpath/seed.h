// Copyright 2026 The clotpath Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <string_view>

namespace clotpath {

// Seed derivation used across the pipeline:
//
//   derive_seed(seed, tag) = splitmix64(seed XOR fnv1a64(tag))
//
// Every stage and every tile gets its seed from the single run seed plus a
// textual tag ("synth/CE/3", "augment/<slide>_x<x>_y<y>", ...), so a stage
// can be re-run in isolation and see the same random stream.

constexpr std::uint64_t Fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (char ch : text) {
    hash ^= static_cast<std::uint8_t>(ch);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

constexpr std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view tag) {
  return SplitMix64(seed ^ Fnv1a64(tag));
}

/// Maps a 64-bit draw to [0, 1) using the top 53 bits.
constexpr double UnitInterval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Unbiased draw from [0, n) by rejection; `next` yields raw 64-bit words.
template <typename Engine>
std::uint64_t UniformIndex(Engine& next, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
  for (;;) {
    const std::uint64_t bits = next();
    if (bits < limit) return bits % n;
  }
}

/// Fisher-Yates shuffle driven by UniformIndex.
template <typename Engine, typename T>
void SeededShuffle(Engine& next, T& items) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(UniformIndex(next, i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace clotpath
