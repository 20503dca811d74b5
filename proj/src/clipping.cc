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

#include "dprw/clipping.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dprw {

std::string ClipModeName(ClipMode mode) {
  return mode == ClipMode::kByNorm ? "by_norm" : "by_value";
}

ClipMode ClipModeFromName(const std::string& name) {
  if (name == "by_norm") return ClipMode::kByNorm;
  if (name == "by_value") return ClipMode::kByValue;
  throw std::invalid_argument("unknown clip mode: " + name);
}

ClipSpec ClipSpec::ByNorm(double c) {
  ClipSpec spec;
  spec.mode = ClipMode::kByNorm;
  spec.c = c;
  spec.Validate();
  return spec;
}

ClipSpec ClipSpec::ByValue(double c) {
  ClipSpec spec;
  spec.mode = ClipMode::kByValue;
  spec.c = c;
  spec.c_min = -c;
  spec.c_max = c;
  spec.Validate();
  return spec;
}

ClipSpec ClipSpec::ByValueRange(double c_min, double c_max) {
  ClipSpec spec;
  spec.mode = ClipMode::kByValue;
  spec.c_min = c_min;
  spec.c_max = c_max;
  spec.c = std::max(std::fabs(c_min), std::fabs(c_max));
  spec.Validate();
  return spec;
}

void ClipSpec::Validate() const {
  if (mode == ClipMode::kByNorm) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw std::invalid_argument("clip: norm radius must be finite and > 0");
    }
    return;
  }
  if (!(c_min < c_max) || !std::isfinite(c_min) || !std::isfinite(c_max)) {
    throw std::invalid_argument("clip: need finite c_min < c_max");
  }
  if (!(c > 0.0)) {
    throw std::invalid_argument("clip: box magnitude must be > 0");
  }
}

std::vector<double> ClipByNorm(const std::vector<double>& z, double c) {
  if (!(c > 0.0)) {
    throw std::invalid_argument("clip: norm radius must be > 0");
  }
  double sq = 0.0;
  for (double v : z) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm <= c) return z;
  const double scale = c / norm;
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] * scale;
  return out;
}

std::vector<double> ClipByValue(const std::vector<double>& z,
                                const ClipSpec& spec) {
  if (spec.mode != ClipMode::kByValue) {
    throw std::invalid_argument("clip: spec is not a by-value spec");
  }
  spec.Validate();
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::clamp(z[i], spec.c_min, spec.c_max);
  }
  return out;
}

std::vector<double> Clip(const std::vector<double>& z, const ClipSpec& spec) {
  spec.Validate();
  return spec.mode == ClipMode::kByNorm ? ClipByNorm(z, spec.c)
                                        : ClipByValue(z, spec);
}

std::string ClipRuleName(ClipRule rule) {
  return rule == ClipRule::kTwoSigma ? "two_sigma" : "half_sigma";
}

ClipRule ClipRuleFromName(const std::string& name) {
  if (name == "two_sigma") return ClipRule::kTwoSigma;
  if (name == "half_sigma") return ClipRule::kHalfSigma;
  throw std::invalid_argument("unknown clip rule: " + name);
}

ClipEstimate EstimateClipConstant(const std::vector<double>& pooled_values,
                                  ClipRule rule) {
  if (pooled_values.empty()) {
    throw std::invalid_argument("clip estimate: empty value pool");
  }
  const double n = static_cast<double>(pooled_values.size());
  double mean = 0.0;
  for (double v : pooled_values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : pooled_values) var += (v - mean) * (v - mean);
  var /= n;
  const double sigma = std::sqrt(var);
  if (!(sigma > 0.0)) {
    throw std::runtime_error("clip estimate: constant input, sigma is zero");
  }

  ClipEstimate estimate;
  estimate.mu = mean;
  estimate.sigma = sigma;
  estimate.rule = rule;
  estimate.sample_count = static_cast<std::int64_t>(pooled_values.size());
  estimate.recommended_c =
      rule == ClipRule::kTwoSigma ? mean + 2.0 * sigma : sigma / 2.0;
  if (!(estimate.recommended_c > 0.0)) {
    throw std::runtime_error(
        "clip estimate: recommended constant is not positive");
  }
  return estimate;
}

}  // namespace dprw
