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

#include "dprw/dp_mechanisms.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dprw {
namespace {

void CheckClipAndDim(double clip_constant, std::int64_t dimension) {
  if (clip_constant <= 0.0) {
    throw std::invalid_argument("sensitivity: clip constant must be > 0");
  }
  if (dimension <= 0) {
    throw std::invalid_argument("sensitivity: dimension must be > 0");
  }
}

}  // namespace

std::string MechanismName(Mechanism mechanism) {
  return mechanism == Mechanism::kLaplace ? "laplace" : "gaussian";
}

Mechanism MechanismFromName(const std::string& name) {
  if (name == "laplace") return Mechanism::kLaplace;
  if (name == "gaussian") return Mechanism::kGaussian;
  throw std::invalid_argument("unknown mechanism: " + name);
}

PrivacyParams PrivacyParams::Infinite(Mechanism mechanism) {
  PrivacyParams params;
  params.mechanism = mechanism;
  params.infinite = true;
  params.epsilon = 0.0;
  params.delta = mechanism == Mechanism::kGaussian ? 1e-5 : 0.0;
  return params;
}

void PrivacyParams::Validate() const {
  if (infinite) return;
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("privacy: epsilon must be finite and > 0");
  }
  if (mechanism == Mechanism::kGaussian) {
    if (!(delta > 0.0) || !(delta < 1.0)) {
      throw std::invalid_argument(
          "privacy: gaussian mechanism needs 0 < delta < 1");
    }
  } else if (delta < 0.0 || delta >= 1.0) {
    throw std::invalid_argument("privacy: delta must be in [0, 1)");
  }
}

double L1SensitivityClv(double clip_constant, std::int64_t dimension) {
  CheckClipAndDim(clip_constant, dimension);
  return 2.0 * clip_constant * static_cast<double>(dimension);
}

double L2SensitivityClv(double clip_constant, std::int64_t dimension) {
  CheckClipAndDim(clip_constant, dimension);
  return 2.0 * clip_constant * std::sqrt(static_cast<double>(dimension));
}

double L1SensitivityNormClip(double clip_constant, std::int64_t dimension) {
  CheckClipAndDim(clip_constant, dimension);
  return 2.0 * clip_constant * std::sqrt(static_cast<double>(dimension));
}

double L2SensitivityNormClip(double clip_constant) {
  CheckClipAndDim(clip_constant, 1);
  return 2.0 * clip_constant;
}

Sensitivity ClvSensitivity(double clip_constant, std::int64_t dimension) {
  return Sensitivity{L1SensitivityClv(clip_constant, dimension),
                     L2SensitivityClv(clip_constant, dimension), clip_constant,
                     dimension};
}

Sensitivity NormClipSensitivity(double clip_constant, std::int64_t dimension) {
  return Sensitivity{L1SensitivityNormClip(clip_constant, dimension),
                     L2SensitivityNormClip(clip_constant), clip_constant,
                     dimension};
}

double LaplaceScale(double l1_sensitivity, const PrivacyParams& params) {
  params.Validate();
  if (l1_sensitivity <= 0.0) {
    throw std::invalid_argument("laplace scale: l1 sensitivity must be > 0");
  }
  if (params.infinite) return 0.0;
  return l1_sensitivity / params.epsilon;
}

double GaussianSigma(double l2_sensitivity, const PrivacyParams& params) {
  params.Validate();
  if (l2_sensitivity <= 0.0) {
    throw std::invalid_argument("gaussian sigma: l2 sensitivity must be > 0");
  }
  if (params.infinite) return 0.0;
  return std::sqrt(2.0 * std::log(1.25 / params.delta)) * l2_sensitivity /
         params.epsilon;
}

NoiseSpec CalibrateNoise(const Sensitivity& sensitivity,
                         const PrivacyParams& params) {
  params.Validate();
  if (sensitivity.dimension <= 0) {
    throw std::invalid_argument("calibrate: sensitivity dimension must be > 0");
  }
  NoiseSpec noise;
  noise.distribution = params.mechanism;
  noise.dimension = sensitivity.dimension;
  if (params.infinite) {
    noise.scale = 0.0;
  } else if (params.mechanism == Mechanism::kLaplace) {
    noise.scale = LaplaceScale(sensitivity.l1, params);
  } else {
    noise.scale = GaussianSigma(sensitivity.l2, params);
  }
  return noise;
}

std::vector<double> SampleNoise(const NoiseSpec& noise, RngStream& rng) {
  if (noise.dimension < 0) {
    throw std::invalid_argument("sample noise: dimension must be >= 0");
  }
  std::vector<double> draw(static_cast<std::size_t>(noise.dimension));
  for (double& value : draw) {
    value = noise.distribution == Mechanism::kLaplace
                ? rng.Laplace(noise.scale)
                : rng.Gaussian(noise.scale);
  }
  return draw;
}

std::vector<double> PrivatizeLatent(
    const std::vector<double>& clipped_latent, const Sensitivity& sensitivity,
    const PrivacyParams& params, RngStream& rng,
    const std::vector<std::int64_t>& pruned_flat_indices) {
  const std::int64_t total = static_cast<std::int64_t>(clipped_latent.size());
  if (!std::is_sorted(pruned_flat_indices.begin(), pruned_flat_indices.end()) ||
      std::adjacent_find(pruned_flat_indices.begin(),
                         pruned_flat_indices.end()) !=
          pruned_flat_indices.end()) {
    throw std::invalid_argument(
        "privatize: pruned indices must be sorted and unique");
  }
  if (!pruned_flat_indices.empty() &&
      (pruned_flat_indices.front() < 0 || pruned_flat_indices.back() >= total)) {
    throw std::invalid_argument("privatize: pruned index out of range");
  }
  const std::int64_t live =
      total - static_cast<std::int64_t>(pruned_flat_indices.size());
  if (sensitivity.dimension != live) {
    throw std::invalid_argument(
        "privatize: sensitivity dimension does not match live coordinates");
  }
  const NoiseSpec noise = CalibrateNoise(sensitivity, params);

  std::vector<double> out = clipped_latent;
  std::size_t next_pruned = 0;
  for (std::int64_t i = 0; i < total; ++i) {
    if (next_pruned < pruned_flat_indices.size() &&
        pruned_flat_indices[next_pruned] == i) {
      out[static_cast<std::size_t>(i)] = 0.0;
      ++next_pruned;
      continue;
    }
    const double draw = noise.distribution == Mechanism::kLaplace
                            ? rng.Laplace(noise.scale)
                            : rng.Gaussian(noise.scale);
    out[static_cast<std::size_t>(i)] += draw;
  }
  return out;
}

double ComposeBudget(double epsilon, int releases) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("compose: epsilon must be > 0");
  }
  if (releases <= 0) {
    throw std::invalid_argument("compose: releases must be > 0");
  }
  return static_cast<double>(releases) * epsilon;
}

double DeltaGuideline(std::uint64_t dataset_size) {
  if (dataset_size == 0) {
    throw std::invalid_argument("delta guideline: dataset size must be > 0");
  }
  // Largest 10^-m strictly below 1/N: smallest m with 10^m > N.
  int m = 0;
  std::uint64_t power = 1;
  while (power <= dataset_size) {
    ++m;
    if (power > UINT64_MAX / 10) {
      break;
    }
    power *= 10;
  }
  return std::pow(10.0, -m);
}

double EmpiricalPrivacyRatio(
    const std::function<double(double, RngStream&)>& mechanism, double x,
    double y, int bin_count, std::int64_t sample_count, RngStream& rng,
    std::int64_t min_bin_count) {
  if (bin_count <= 0) {
    throw std::invalid_argument("privacy ratio: bin_count must be > 0");
  }
  if (sample_count <= 0) {
    throw std::invalid_argument("privacy ratio: sample_count must be > 0");
  }
  if (min_bin_count <= 0) {
    min_bin_count = std::max<std::int64_t>(
        100, sample_count / (static_cast<std::int64_t>(bin_count) * 10));
  }

  const std::size_t n = static_cast<std::size_t>(sample_count);
  std::vector<double> sx(n), sy(n);
  for (std::size_t i = 0; i < n; ++i) sx[i] = mechanism(x, rng);
  for (std::size_t i = 0; i < n; ++i) sy[i] = mechanism(y, rng);

  double lo = sx[0], hi = sx[0];
  for (double v : sx) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : sy) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) {
    throw std::runtime_error("privacy ratio: degenerate sample range");
  }

  const double width = (hi - lo) / bin_count;
  std::vector<std::int64_t> cx(static_cast<std::size_t>(bin_count), 0);
  std::vector<std::int64_t> cy(static_cast<std::size_t>(bin_count), 0);
  auto bin_of = [&](double v) {
    int b = static_cast<int>((v - lo) / width);
    return std::clamp(b, 0, bin_count - 1);
  };
  for (double v : sx) ++cx[static_cast<std::size_t>(bin_of(v))];
  for (double v : sy) ++cy[static_cast<std::size_t>(bin_of(v))];

  double max_ratio = 0.0;
  bool any = false;
  for (int b = 0; b < bin_count; ++b) {
    const std::size_t i = static_cast<std::size_t>(b);
    if (cx[i] < min_bin_count || cy[i] < min_bin_count) continue;
    any = true;
    max_ratio = std::max(max_ratio, static_cast<double>(cx[i]) /
                                        static_cast<double>(cy[i]));
  }
  if (!any) {
    throw std::runtime_error(
        "privacy ratio: no bin has enough samples on both sides; increase "
        "sample_count or lower min_bin_count");
  }
  return max_ratio;
}

}  // namespace dprw
