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
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "dprw/clipping.h"
#include "dprw/rng.h"

namespace dprw {
namespace {

double Norm(const std::vector<double>& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  return std::sqrt(sq);
}

TEST_CASE("norm clip rescales long vectors onto the ball") {
  const std::vector<double> z{3.0, 4.0};  // norm 5
  const std::vector<double> out = ClipByNorm(z, 1.0);
  CHECK(Norm(out) == doctest::Approx(1.0));
  // Direction preserved.
  CHECK(out[0] / out[1] == doctest::Approx(3.0 / 4.0));
}

TEST_CASE("norm clip leaves short vectors untouched") {
  const std::vector<double> z{0.3, 0.4};
  CHECK(ClipByNorm(z, 1.0) == z);
}

TEST_CASE("norm clip of the zero vector is the zero vector") {
  const std::vector<double> z{0.0, 0.0, 0.0};
  CHECK(ClipByNorm(z, 0.5) == z);
}

TEST_CASE("value clip clamps coordinates into the box") {
  const ClipSpec spec = ClipSpec::ByValue(0.5);
  const std::vector<double> z{-2.0, -0.2, 0.0, 0.3, 7.0};
  const std::vector<double> out = ClipByValue(z, spec);
  CHECK(out == std::vector<double>{-0.5, -0.2, 0.0, 0.3, 0.5});
}

TEST_CASE("asymmetric value clip respects both edges") {
  const ClipSpec spec = ClipSpec::ByValueRange(-0.25, 1.0);
  const std::vector<double> z{-2.0, 0.5, 3.0};
  const std::vector<double> out = ClipByValue(z, spec);
  CHECK(out == std::vector<double>{-0.25, 0.5, 1.0});
}

TEST_CASE("clip dispatch follows the spec mode") {
  const std::vector<double> z{3.0, 4.0};
  CHECK(Clip(z, ClipSpec::ByNorm(1.0)) == ClipByNorm(z, 1.0));
  CHECK(Clip(z, ClipSpec::ByValue(1.0)) ==
        ClipByValue(z, ClipSpec::ByValue(1.0)));
}

TEST_CASE("clip is idempotent") {
  RngStream rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> z(8);
    for (double& x : z) x = rng.Gaussian(2.0);
    const std::vector<double> once_norm = ClipByNorm(z, 0.9);
    CHECK(ClipByNorm(once_norm, 0.9) == once_norm);
    const ClipSpec spec = ClipSpec::ByValue(0.4);
    const std::vector<double> once_value = ClipByValue(z, spec);
    CHECK(ClipByValue(once_value, spec) == once_value);
  }
}

TEST_CASE("clip spec validation") {
  CHECK_THROWS_AS(ClipSpec::ByNorm(0.0).Validate(), std::invalid_argument);
  CHECK_THROWS_AS(ClipSpec::ByValue(-1.0).Validate(), std::invalid_argument);
  CHECK_THROWS_AS(ClipSpec::ByValueRange(0.5, 0.5).Validate(),
                  std::invalid_argument);
  CHECK_NOTHROW(ClipSpec::ByNorm(2.0).Validate());
  CHECK_NOTHROW(ClipSpec::ByValueRange(-0.1, 0.7).Validate());
}

TEST_CASE("clip mode names round-trip") {
  CHECK(ClipModeFromName(ClipModeName(ClipMode::kByNorm)) == ClipMode::kByNorm);
  CHECK(ClipModeFromName(ClipModeName(ClipMode::kByValue)) ==
        ClipMode::kByValue);
  CHECK_THROWS_AS(ClipModeFromName("by_magic"), std::invalid_argument);
}

TEST_CASE("clip constant estimation recovers Gaussian statistics") {
  RngStream rng(32);
  std::vector<double> pool(200000);
  for (double& x : pool) x = 0.3 + rng.Gaussian(1.2);

  const ClipEstimate half = EstimateClipConstant(pool, ClipRule::kHalfSigma);
  CHECK(half.mu == doctest::Approx(0.3).epsilon(0.05));
  CHECK(half.sigma == doctest::Approx(1.2).epsilon(0.02));
  CHECK(half.recommended_c == doctest::Approx(half.sigma / 2.0));
  CHECK(half.sample_count == 200000);

  const ClipEstimate two = EstimateClipConstant(pool, ClipRule::kTwoSigma);
  CHECK(two.recommended_c == doctest::Approx(two.mu + 2.0 * two.sigma));
}

TEST_CASE("clip constant estimation rejects degenerate pools") {
  CHECK_THROWS_AS(EstimateClipConstant({}, ClipRule::kHalfSigma),
                  std::invalid_argument);
  const std::vector<double> constant(100, 4.2);
  CHECK_THROWS_AS(EstimateClipConstant(constant, ClipRule::kHalfSigma),
                  std::runtime_error);
}

TEST_CASE("clip rule names round-trip") {
  CHECK(ClipRuleFromName(ClipRuleName(ClipRule::kTwoSigma)) ==
        ClipRule::kTwoSigma);
  CHECK(ClipRuleFromName(ClipRuleName(ClipRule::kHalfSigma)) ==
        ClipRule::kHalfSigma);
  CHECK_THROWS_AS(ClipRuleFromName("three_sigma"), std::invalid_argument);
}

}  // namespace
}  // namespace dprw
