// Copyright 2026 The dprewrite Authors
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

#ifndef DPRW_RNG_H_
#define DPRW_RNG_H_

#include <cstdint>
#include <random>
#include <vector>

namespace dprw {

// Deterministic pseudo-random stream with explicit seeding and cheap
// derivation of independent substreams (e.g. one per document). All
// floating-point draws are produced from raw 64-bit outputs with fixed
// arithmetic, so sequences are bit-identical across platforms; none of the
// std::*_distribution adapters are used.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  // Independent substream identified by `index`. Derivation only depends on
  // (seed, index), never on how much of this stream has been consumed.
  RngStream Derive(std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }

  std::uint64_t NextU64();

  // Uniform on [0, 1), 53-bit resolution.
  double Uniform01();

  // Uniform on the open interval (0, 1); safe as input to log().
  double UniformOpen();

  // Uniform integer in [0, bound), bound > 0. Uses rejection sampling, so it
  // is exactly uniform.
  std::uint64_t UniformInt(std::uint64_t bound);

  // Laplace(0, scale) via inverse CDF. scale >= 0; scale == 0 returns 0.
  double Laplace(double scale);

  // Normal(0, stddev^2) via Box-Muller. stddev >= 0; stddev == 0 returns 0.
  double Gaussian(double stddev);

  // Fisher-Yates shuffle of [0, n) index order, applied by the caller.
  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(UniformInt(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// splitmix64 finalizer; used for seed mixing and substream derivation.
std::uint64_t MixBits(std::uint64_t x);

}  // namespace dprw

#endif  // DPRW_RNG_H_
