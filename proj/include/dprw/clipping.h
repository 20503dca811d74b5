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

#ifndef DPRW_CLIPPING_H_
#define DPRW_CLIPPING_H_

#include <cstdint>
#include <string>
#include <vector>

namespace dprw {

enum class ClipMode { kByNorm, kByValue };

std::string ClipModeName(ClipMode mode);
ClipMode ClipModeFromName(const std::string& name);

// Bounding transform applied to latent vectors before privatization. kByNorm
// rescales into the l2 ball of radius `c`; kByValue clamps each coordinate
// into [c_min, c_max] (by default the symmetric box [-c, c]).
struct ClipSpec {
  ClipMode mode = ClipMode::kByValue;
  double c = 0.0;
  double c_min = 0.0;
  double c_max = 0.0;

  static ClipSpec ByNorm(double c);
  static ClipSpec ByValue(double c);
  static ClipSpec ByValueRange(double c_min, double c_max);

  void Validate() const;
};

// z * min(1, c / ||z||_2); the zero vector is returned unchanged.
std::vector<double> ClipByNorm(const std::vector<double>& z, double c);

// Coordinate-wise clamp into [spec.c_min, spec.c_max].
std::vector<double> ClipByValue(const std::vector<double>& z,
                                const ClipSpec& spec);

std::vector<double> Clip(const std::vector<double>& z, const ClipSpec& spec);

enum class ClipRule {
  kTwoSigma,   // c = mu + 2 sigma, the conservative whole-range choice
  kHalfSigma,  // c = sigma / 2, the aggressive choice
};

std::string ClipRuleName(ClipRule rule);
ClipRule ClipRuleFromName(const std::string& name);

struct ClipEstimate {
  double mu = 0.0;
  double sigma = 0.0;
  double recommended_c = 0.0;
  ClipRule rule = ClipRule::kHalfSigma;
  std::int64_t sample_count = 0;
};

// Gaussian maximum-likelihood fit (mean and biased 1/N standard deviation)
// of the pooled latent coordinates, plus the recommended clip constant under
// `rule`. Throws std::invalid_argument on an empty pool and
// std::runtime_error if the fitted sigma is zero (constant input).
ClipEstimate EstimateClipConstant(const std::vector<double>& pooled_values,
                                  ClipRule rule);

}  // namespace dprw

#endif  // DPRW_CLIPPING_H_
