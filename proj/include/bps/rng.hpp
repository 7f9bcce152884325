// Copyright 2026 The bps-lab Authors.
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

#include <cstdint>
#include <span>

namespace bps {

// SplitMix64 finalizer. Used both for seed derivation and to expand a
// single seed into the xoshiro state.
inline uint64_t split_mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based seed derivation. Stream (a, b, c) of a root seed is
// independent of sampling order, so batch workers can draw their own
// trajectories without sharing generator state.
inline uint64_t derive_seed(uint64_t root, uint64_t a, uint64_t b = 0,
                            uint64_t c = 0) {
  uint64_t s = split_mix64(root ^ 0x8e9c4d1f2b6a5e37ULL);
  s = split_mix64(s ^ split_mix64(a));
  s = split_mix64(s ^ split_mix64(b ^ 0x6c62272e07bb0142ULL));
  s = split_mix64(s ^ split_mix64(c ^ 0x27d4eb2f165667c5ULL));
  return s;
}

// xoshiro256++ (Blackman & Vigna). Cheap to seed per trajectory and
// platform-independent, which the reproducibility contract requires.
class Xoshiro256 {
 public:
  explicit Xoshiro256(uint64_t seed) {
    uint64_t x = seed;
    for (auto& word : state_) {
      x = split_mix64(x);
      word = x;
    }
  }

  uint64_t next() {
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; draws two uniforms per call so the
  // stream position does not depend on caller history.
  double normal();

  // Index into a probability vector by inverse CDF walk.
  int categorical(std::span<const double> probs);

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t state_[4];
};

}  // namespace bps
