// Copyright 2026 The amrplan Authors
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

#ifndef AMRPLAN_RNG_HPP_
#define AMRPLAN_RNG_HPP_

#include <cstdint>
#include <string_view>

namespace amrplan {

// 64-bit FNV-1a; used for stream labels and config hashes.
constexpr uint64_t Fnv1a(std::string_view text,
                         uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

constexpr uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Every RNG stream in a run is derived from one root seed and a fixed label,
// so adding a new stream never perturbs existing ones.
constexpr uint64_t DeriveSeed(uint64_t root, std::string_view label) {
  return SplitMix64(root ^ Fnv1a(label));
}

}  // namespace amrplan

#endif  // AMRPLAN_RNG_HPP_
