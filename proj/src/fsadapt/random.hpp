// Copyright 2026 The fsadapt Authors.
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

#ifndef FSADAPT_RANDOM_HPP_
#define FSADAPT_RANDOM_HPP_

#include <cstddef>
#include <cstdint>
#include <random>

namespace fsadapt {

// Seeded generator whose derived distributions are fixed here rather than
// delegated to <random>, whose distribution algorithms differ between
// standard libraries. Same seed, same stream, on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n) by rejection; n > 0.
  std::size_t Index(std::size_t n);

  // Standard normal via Box-Muller; caches the second variate.
  double Normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Derives an independent stream seed from a base seed and a tag.
std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t tag);

}  // namespace fsadapt

#endif  // FSADAPT_RANDOM_HPP_
