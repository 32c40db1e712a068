// Copyright 2026 The dphp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPHP_RNG_HPP_
#define DPHP_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>

namespace dphp {

using Rng = std::mt19937_64;

// 64-bit FNV-1a; stable across platforms, unlike std::hash.
constexpr uint64_t Fnv1a(std::string_view text,
                         uint64_t hash = 0xcbf29ce484222325ULL) {
  for (char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

// Derives an independent generator for a named purpose ("init", "subsample",
// "noise", "latent", "data", ...) from one root seed.
inline Rng Substream(uint64_t root_seed, std::string_view name) {
  const uint64_t tag = Fnv1a(name);
  std::seed_seq seq{static_cast<uint32_t>(root_seed),
                    static_cast<uint32_t>(root_seed >> 32),
                    static_cast<uint32_t>(tag), static_cast<uint32_t>(tag >> 32)};
  return Rng(seq);
}

}  // namespace dphp

#endif  // DPHP_RNG_HPP_
