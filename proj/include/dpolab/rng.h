// Copyright 2026 The dpolab Authors.
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

#ifndef DPOLAB_RNG_H_
#define DPOLAB_RNG_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace dpolab {

// 64-bit FNV-1a over the bytes of `s`.
uint64_t HashString(std::string_view s);

// SplitMix64 finalizer; used to decorrelate derived seeds.
uint64_t MixSeed(uint64_t x);

// Seed for a named sub-stream of `base`. Distinct tags give independent
// streams, so e.g. generation and annotation never share draws.
uint64_t DeriveSeed(uint64_t base, std::string_view tag);

// Random stream with platform-independent draws. The standard distribution
// classes are implementation-defined, so every draw here is computed directly
// from the raw mt19937_64 output.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits. Consumes one engine output.
  double Uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform index in [0, n). Consumes exactly one engine output.
  size_t UniformIndex(size_t n);

  // Standard normal via Box-Muller. Consumes exactly two engine outputs.
  double Normal();

  bool Bernoulli(double p) { return Uniform01() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dpolab

#endif  // DPOLAB_RNG_H_
