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
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "dprw/clipping.h"
#include "dprw/dp_mechanisms.h"
#include "dprw/rng.h"

namespace dprw {
namespace {

// Enumerates all corners of the box [-c, c]^n and returns the maximum
// l1 and l2 distances over all corner pairs. The extreme points of the box
// realize the worst case for coordinate-wise clipped vectors.
std::pair<double, double> BruteForceBoxSensitivity(double c, int n) {
  const int corner_count = 1 << n;
  std::vector<std::vector<double>> corners;
  for (int mask = 0; mask < corner_count; ++mask) {
    std::vector<double> corner(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      corner[static_cast<std::size_t>(j)] = (mask >> j & 1) ? c : -c;
    }
    corners.push_back(std::move(corner));
  }
  double max_l1 = 0.0;
  double max_l2 = 0.0;
  for (const auto& a : corners) {
    for (const auto& b : corners) {
      double l1 = 0.0;
      double sq = 0.0;
      for (int j = 0; j < n; ++j) {
        const double d = a[static_cast<std::size_t>(j)] -
                         b[static_cast<std::size_t>(j)];
        l1 += std::abs(d);
        sq += d * d;
      }
      max_l1 = std::max(max_l1, l1);
      max_l2 = std::max(max_l2, std::sqrt(sq));
    }
  }
  return {max_l1, max_l2};
}

TEST_CASE("value-clip sensitivity formulas match brute-forced box corners") {
  for (int n = 1; n <= 4; ++n) {
    for (double c : {0.1, 0.5, 1.0}) {
      const auto [l1, l2] = BruteForceBoxSensitivity(c, n);
      CHECK(l1 == L1SensitivityClv(c, n));
      // The corner-pair l2 maximum is 2c*sqrt(n) up to floating-point
      // rounding in the square root.
      CHECK(l2 == doctest::Approx(L2SensitivityClv(c, n)).epsilon(1e-12));
    }
  }
}

TEST_CASE("norm-clip sensitivity formulas bound random in-ball pairs") {
  const double c = 0.8;
  const int n = 6;
  const double l1_bound = L1SensitivityNormClip(c, n);
  const double l2_bound = L2SensitivityNormClip(c);
  CHECK(l1_bound == doctest::Approx(2.0 * c * std::sqrt(6.0)));
  CHECK(l2_bound == doctest::Approx(2.0 * c));

  RngStream rng(1234);
  double seen_l1 = 0.0;
  double seen_l2 = 0.0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> a(n);
    std::vector<double> b(n);
    for (int j = 0; j < n; ++j) {
      a[static_cast<std::size_t>(j)] = rng.Gaussian(1.0);
      b[static_cast<std::size_t>(j)] = rng.Gaussian(1.0);
    }
    a = ClipByNorm(a, c);
    b = ClipByNorm(b, c);
    double l1 = 0.0;
    double sq = 0.0;
    for (int j = 0; j < n; ++j) {
      const double d = a[static_cast<std::size_t>(j)] -
                       b[static_cast<std::size_t>(j)];
      l1 += std::abs(d);
      sq += d * d;
    }
    seen_l1 = std::max(seen_l1, l1);
    seen_l2 = std::max(seen_l2, std::sqrt(sq));
  }
  CHECK(seen_l1 <= l1_bound + 1e-12);
  CHECK(seen_l2 <= l2_bound + 1e-12);
  // The l2 diameter is achieved by antipodal points on the sphere.
  std::vector<double> north(n, 0.0);
  std::vector<double> south(n, 0.0);
  north[0] = c;
  south[0] = -c;
  CHECK(std::abs((north[0] - south[0])) == doctest::Approx(l2_bound));
}

TEST_CASE("published sensitivity anchors") {
  // 2 * 0.1 * sqrt(15360) = 24.787..., 2 * 0.1 * sqrt(3640) = 12.066...
  CHECK(L2SensitivityClv(0.1, 15360) == doctest::Approx(24.79).epsilon(2e-4));
  CHECK(L2SensitivityClv(0.1, 3640) == doctest::Approx(12.07).epsilon(4e-4));
}

TEST_CASE("Gaussian sigma anchors and the pruned-to-unpruned ratio") {
  PrivacyParams params;
  params.epsilon = 500.0;
  params.delta = 1e-5;
  params.mechanism = Mechanism::kGaussian;
  const double sigma_full = GaussianSigma(L2SensitivityClv(0.1, 15360),
                                          params);
  const double sigma_pruned = GaussianSigma(L2SensitivityClv(0.1, 3640),
                                            params);
  CHECK(sigma_full == doctest::Approx(0.2402).epsilon(5e-4));
  CHECK(sigma_pruned == doctest::Approx(0.1169).epsilon(1e-3));
  CHECK(sigma_pruned / sigma_full < 0.5);
}

TEST_CASE("Laplace scale is l1 sensitivity over epsilon") {
  PrivacyParams params;
  params.epsilon = 4.0;
  params.mechanism = Mechanism::kLaplace;
  CHECK(LaplaceScale(10.0, params) == doctest::Approx(2.5));
}

TEST_CASE("CalibrateNoise picks the mechanism sensitivity and handles "
          "infinite epsilon") {
  const Sensitivity s = ClvSensitivity(0.5, 16);
  PrivacyParams laplace;
  laplace.epsilon = 2.0;
  laplace.mechanism = Mechanism::kLaplace;
  const NoiseSpec nl = CalibrateNoise(s, laplace);
  CHECK(nl.distribution == Mechanism::kLaplace);
  CHECK(nl.scale == doctest::Approx(s.l1 / 2.0));
  CHECK(nl.dimension == 16);

  PrivacyParams gaussian;
  gaussian.epsilon = 2.0;
  gaussian.delta = 1e-5;
  gaussian.mechanism = Mechanism::kGaussian;
  const NoiseSpec ng = CalibrateNoise(s, gaussian);
  CHECK(ng.distribution == Mechanism::kGaussian);
  CHECK(ng.scale ==
        doctest::Approx(std::sqrt(2.0 * std::log(1.25 / 1e-5)) * s.l2 / 2.0));

  const NoiseSpec none =
      CalibrateNoise(s, PrivacyParams::Infinite(Mechanism::kGaussian));
  CHECK(none.scale == 0.0);
}

TEST_CASE("privacy parameter validation") {
  PrivacyParams bad;
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(bad.Validate(), std::invalid_argument);
  bad.epsilon = -1.0;
  CHECK_THROWS_AS(bad.Validate(), std::invalid_argument);

  PrivacyParams gaussian_no_delta;
  gaussian_no_delta.epsilon = 1.0;
  gaussian_no_delta.delta = 0.0;
  gaussian_no_delta.mechanism = Mechanism::kGaussian;
  CHECK_THROWS_AS(gaussian_no_delta.Validate(), std::invalid_argument);

  PrivacyParams ok;
  ok.epsilon = 1.0;
  ok.mechanism = Mechanism::kLaplace;
  CHECK_NOTHROW(ok.Validate());

  CHECK_NOTHROW(PrivacyParams::Infinite(Mechanism::kLaplace).Validate());
}

TEST_CASE("mechanism names round-trip") {
  CHECK(MechanismFromName(MechanismName(Mechanism::kLaplace)) ==
        Mechanism::kLaplace);
  CHECK(MechanismFromName(MechanismName(Mechanism::kGaussian)) ==
        Mechanism::kGaussian);
  CHECK_THROWS_AS(MechanismFromName("cauchy"), std::invalid_argument);
}

TEST_CASE("sampled noise variance matches the target distribution") {
  const std::int64_t n = 1000000;
  RngStream rng(777);

  NoiseSpec laplace;
  laplace.distribution = Mechanism::kLaplace;
  laplace.scale = 0.9;
  laplace.dimension = n;
  const std::vector<double> ls = SampleNoise(laplace, rng);
  double var = 0.0;
  for (double v : ls) var += v * v;
  var /= static_cast<double>(n);
  CHECK(var == doctest::Approx(2.0 * 0.9 * 0.9).epsilon(0.02));

  NoiseSpec gaussian;
  gaussian.distribution = Mechanism::kGaussian;
  gaussian.scale = 1.3;
  gaussian.dimension = n;
  const std::vector<double> gs = SampleNoise(gaussian, rng);
  var = 0.0;
  for (double v : gs) var += v * v;
  var /= static_cast<double>(n);
  CHECK(var == doctest::Approx(1.3 * 1.3).epsilon(0.02));
}

TEST_CASE("PrivatizeLatent keeps pruned coordinates exactly zero") {
  const std::vector<double> latent{0.5, 0.0, -0.5, 0.0, 0.25, 0.1};
  const std::vector<std::int64_t> pruned{1, 3};
  const Sensitivity s = ClvSensitivity(0.5, 4);  // 4 live coordinates
  PrivacyParams params;
  params.epsilon = 1.0;
  params.mechanism = Mechanism::kLaplace;
  RngStream rng(5);
  const std::vector<double> out =
      PrivatizeLatent(latent, s, params, rng, pruned);
  REQUIRE(out.size() == latent.size());
  CHECK(out[1] == 0.0);
  CHECK(out[3] == 0.0);
  // Live coordinates receive non-zero noise almost surely.
  CHECK(out[0] != latent[0]);
  CHECK(out[4] != latent[4]);
}

TEST_CASE("PrivatizeLatent checks the dimension accounting") {
  const std::vector<double> latent{0.1, 0.2, 0.3};
  const Sensitivity wrong = ClvSensitivity(0.5, 3);  // should be 2
  PrivacyParams params;
  params.epsilon = 1.0;
  params.mechanism = Mechanism::kLaplace;
  RngStream rng(6);
  CHECK_THROWS_AS(
      PrivatizeLatent(latent, wrong, params, rng, {0}),
      std::invalid_argument);
}

TEST_CASE("PrivatizeLatent with infinite epsilon is the identity") {
  const std::vector<double> latent{0.5, -0.25, 0.75};
  const Sensitivity s = ClvSensitivity(1.0, 3);
  RngStream rng(7);
  const std::vector<double> out = PrivatizeLatent(
      latent, s, PrivacyParams::Infinite(Mechanism::kGaussian), rng);
  CHECK(out == latent);
}

TEST_CASE("budget composition is linear in the release count") {
  CHECK(ComposeBudget(1.5, 4) == doctest::Approx(6.0));
  CHECK(ComposeBudget(250.0, 2) == doctest::Approx(500.0));
}

TEST_CASE("delta guideline is the largest power of ten below 1/N") {
  CHECK(DeltaGuideline(1000) == doctest::Approx(1e-4));
  CHECK(DeltaGuideline(608) == doctest::Approx(1e-3));
  CHECK(DeltaGuideline(10) == doctest::Approx(1e-2));
}

// One-dimensional clipped Laplace release; the likelihood-ratio test drives
// it at the worst-case input pair.
double ClippedLaplaceRelease(double x, double c, double b, RngStream& rng) {
  const double clipped = std::clamp(x, -c, c);
  return clipped + rng.Laplace(b);
}

TEST_CASE("empirical likelihood ratio respects the epsilon bound") {
  const double epsilon = 1.0;
  const double c = 1.0;
  const double b = 2.0 * c / epsilon;  // l1 sensitivity of the clamp is 2c
  RngStream rng(2024);
  const double ratio = EmpiricalPrivacyRatio(
      [&](double x, RngStream& r) { return ClippedLaplaceRelease(x, c, b, r); },
      1.0, -1.0, 50, 1000000, rng);
  CHECK(ratio <= std::exp(epsilon) * 1.1);

  // Negative control: halving the noise must break the bound.
  RngStream rng2(2025);
  const double cheat = EmpiricalPrivacyRatio(
      [&](double x, RngStream& r) {
        return ClippedLaplaceRelease(x, c, b / 2.0, r);
      },
      1.0, -1.0, 50, 1000000, rng2);
  CHECK(cheat > std::exp(epsilon));
}

}  // namespace
}  // namespace dprw
