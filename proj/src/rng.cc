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

#include "dprw/rng.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dprw {

std::uint64_t MixBits(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(MixBits(seed)) {}

RngStream RngStream::Derive(std::uint64_t index) const {
  return RngStream(MixBits(seed_ ^ MixBits(index + 1)));
}

std::uint64_t RngStream::NextU64() { return engine_(); }

double RngStream::Uniform01() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

double RngStream::UniformOpen() {
  return (static_cast<double>(NextU64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t RngStream::UniformInt(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("UniformInt: bound must be > 0");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = NextU64();
  } while (x >= limit);
  return x % bound;
}

double RngStream::Laplace(double scale) {
  if (scale < 0.0) throw std::invalid_argument("Laplace: scale must be >= 0");
  if (scale == 0.0) return 0.0;
  const double u = UniformOpen() - 0.5;
  const double sign = (u < 0.0) ? -1.0 : 1.0;
  return -scale * sign * std::log(1.0 - 2.0 * std::fabs(u));
}

double RngStream::Gaussian(double stddev) {
  if (stddev < 0.0) throw std::invalid_argument("Gaussian: stddev must be >= 0");
  if (stddev == 0.0) return 0.0;
  const double u1 = UniformOpen();
  const double u2 = Uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  return stddev * r * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace dprw
