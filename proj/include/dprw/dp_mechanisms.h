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

#ifndef DPRW_DP_MECHANISMS_H_
#define DPRW_DP_MECHANISMS_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dprw/rng.h"

namespace dprw {

enum class Mechanism { kLaplace, kGaussian };

std::string MechanismName(Mechanism mechanism);
Mechanism MechanismFromName(const std::string& name);

// Privacy budget for one privatization. `infinite` marks the no-noise
// configuration used for utility ceilings; it is a distinguished flag rather
// than a floating-point infinity so that downstream arithmetic stays finite.
struct PrivacyParams {
  double epsilon = 1.0;
  double delta = 0.0;
  Mechanism mechanism = Mechanism::kLaplace;
  bool infinite = false;

  static PrivacyParams Infinite(Mechanism mechanism);

  // Throws std::invalid_argument unless (infinite) or (epsilon > 0 and, for
  // the Gaussian mechanism, 0 < delta < 1).
  void Validate() const;
};

// Worst-case distance bounds between clipped latent vectors of dimension
// `dimension`, under the clip constant `clip_constant` that produced them.
struct Sensitivity {
  double l1 = 0.0;
  double l2 = 0.0;
  double clip_constant = 0.0;
  std::int64_t dimension = 0;
};

// Distribution and scale of the noise to add to each coordinate. For the
// Laplace mechanism `scale` is the Laplace scale b; for the Gaussian
// mechanism it is the standard deviation sigma. scale == 0 encodes the
// infinite-epsilon (noiseless) setting.
struct NoiseSpec {
  Mechanism distribution = Mechanism::kLaplace;
  double scale = 0.0;
  std::int64_t dimension = 0;
};

// Sensitivities of clip-by-value to the box [-c, c]^n: l1 = 2cn,
// l2 = 2c*sqrt(n).
double L1SensitivityClv(double clip_constant, std::int64_t dimension);
double L2SensitivityClv(double clip_constant, std::int64_t dimension);

// Sensitivities of clip-by-norm to the l2 ball of radius c: the corrected
// l1 bound 2c*sqrt(n), and the l2 diameter 2c.
double L1SensitivityNormClip(double clip_constant, std::int64_t dimension);
double L2SensitivityNormClip(double clip_constant);

Sensitivity ClvSensitivity(double clip_constant, std::int64_t dimension);
Sensitivity NormClipSensitivity(double clip_constant, std::int64_t dimension);

// Laplace scale b = l1 / epsilon.
double LaplaceScale(double l1_sensitivity, const PrivacyParams& params);

// Gaussian sigma = sqrt(2 ln(1.25/delta)) * l2 / epsilon.
double GaussianSigma(double l2_sensitivity, const PrivacyParams& params);

// Picks the sensitivity matching params.mechanism and returns the calibrated
// per-coordinate noise. Infinite epsilon yields scale 0.
NoiseSpec CalibrateNoise(const Sensitivity& sensitivity,
                         const PrivacyParams& params);

// One i.i.d. noise draw per coordinate.
std::vector<double> SampleNoise(const NoiseSpec& noise, RngStream& rng);

// Adds calibrated noise to the flattened clipped latent, in flat coordinate
// order. Coordinates listed in `pruned_flat_indices` (sorted, unique) carry
// no signal and receive no noise; they stay exactly zero. Requires
// sensitivity.dimension == latent.size() - pruned_flat_indices.size().
std::vector<double> PrivatizeLatent(
    const std::vector<double>& clipped_latent, const Sensitivity& sensitivity,
    const PrivacyParams& params, RngStream& rng,
    const std::vector<std::int64_t>& pruned_flat_indices = {});

// Linear composition: total budget spent by k releases at epsilon each.
double ComposeBudget(double epsilon, int releases);

// Largest power of ten strictly below 1/dataset_size, the usual "delta much
// smaller than 1/N" reading.
double DeltaGuideline(std::uint64_t dataset_size);

// Histogram estimate of the worst-case likelihood ratio
// max_b Pr[M(x) in b] / Pr[M(y) in b] over bins where both empirical
// probabilities are resolvable. `mechanism` maps (input, rng) to one noisy
// release. Bins with fewer than `min_bin_count` samples on either side are
// skipped; 0 picks max(100, sample_count / (bin_count * 10)). Throws
// std::runtime_error if no bin qualifies.
double EmpiricalPrivacyRatio(
    const std::function<double(double, RngStream&)>& mechanism, double x,
    double y, int bin_count, std::int64_t sample_count, RngStream& rng,
    std::int64_t min_bin_count = 0);

}  // namespace dprw

#endif  // DPRW_DP_MECHANISMS_H_
