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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"
#include "dprw/rng.h"

namespace dprw {
namespace {

TEST_CASE("same seed reproduces the identical stream") {
  RngStream a(42);
  RngStream b(42);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.NextU64() == b.NextU64());
  }
}

TEST_CASE("different seeds diverge") {
  RngStream a(1);
  RngStream b(2);
  int differing = 0;
  for (int i = 0; i < 64; ++i) {
    if (a.NextU64() != b.NextU64()) ++differing;
  }
  CHECK(differing > 60);
}

TEST_CASE("derivation depends only on seed and index") {
  RngStream parent(99);
  // Consume some of the parent; derivation must not care.
  for (int i = 0; i < 17; ++i) parent.NextU64();
  RngStream d1 = parent.Derive(5);

  RngStream fresh(99);
  RngStream d2 = fresh.Derive(5);
  for (int i = 0; i < 100; ++i) {
    CHECK(d1.NextU64() == d2.NextU64());
  }
}

TEST_CASE("derived substreams with different indices are distinct") {
  RngStream parent(7);
  RngStream a = parent.Derive(0);
  RngStream b = parent.Derive(1);
  int differing = 0;
  for (int i = 0; i < 64; ++i) {
    if (a.NextU64() != b.NextU64()) ++differing;
  }
  CHECK(differing > 60);
}

TEST_CASE("Uniform01 stays in [0, 1) and covers the range") {
  RngStream rng(3);
  double lo = 1.0;
  double hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.Uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.001);
  CHECK(hi > 0.999);
}

TEST_CASE("UniformOpen never returns an endpoint") {
  RngStream rng(4);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.UniformOpen();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("UniformInt respects the bound and hits every bucket") {
  RngStream rng(5);
  std::vector<int> counts(10, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const std::uint64_t v = rng.UniformInt(10);
    REQUIRE(v < 10);
    ++counts[static_cast<std::size_t>(v)];
  }
  // Each bucket within 10% of the expected count.
  for (int c : counts) {
    CHECK(c > draws / 10 * 0.9);
    CHECK(c < draws / 10 * 1.1);
  }
}

TEST_CASE("UniformInt with bound 1 always returns 0") {
  RngStream rng(6);
  for (int i = 0; i < 100; ++i) CHECK(rng.UniformInt(1) == 0);
}

TEST_CASE("Laplace sample moments match the distribution") {
  RngStream rng(8);
  const double b = 1.7;
  const int n = 200000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.Laplace(b);
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(var == doctest::Approx(2.0 * b * b).epsilon(0.02));
}

TEST_CASE("Gaussian sample moments match the distribution") {
  RngStream rng(9);
  const double sigma = 0.73;
  const int n = 200000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.Gaussian(sigma);
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(var == doctest::Approx(sigma * sigma).epsilon(0.02));
}

TEST_CASE("zero scale draws are exactly zero") {
  RngStream rng(10);
  for (int i = 0; i < 10; ++i) {
    CHECK(rng.Laplace(0.0) == 0.0);
    CHECK(rng.Gaussian(0.0) == 0.0);
  }
}

TEST_CASE("Shuffle produces a permutation and is seed-deterministic") {
  std::vector<int> items(50);
  std::iota(items.begin(), items.end(), 0);
  RngStream rng(11);
  rng.Shuffle(items);

  std::vector<int> sorted = items;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);

  std::vector<int> again(50);
  std::iota(again.begin(), again.end(), 0);
  RngStream rng2(11);
  rng2.Shuffle(again);
  CHECK(again == items);
}

TEST_CASE("MixBits is deterministic and spreads single-bit changes") {
  CHECK(MixBits(12345) == MixBits(12345));
  int differing_bits = 0;
  const std::uint64_t a = MixBits(1);
  const std::uint64_t b = MixBits(2);
  for (int bit = 0; bit < 64; ++bit) {
    if (((a >> bit) & 1) != ((b >> bit) & 1)) ++differing_bits;
  }
  // Avalanche: roughly half the bits flip.
  CHECK(differing_bits > 20);
  CHECK(differing_bits < 44);
}

}  // namespace
}  // namespace dprw
