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

#ifndef DPRW_PRUNING_H_
#define DPRW_PRUNING_H_

#include <cstdint>
#include <vector>

#include "dprw/parameter_store.h"

namespace dprw {

// Input-independent set of pruned latent channels (token-level columns of
// the per-token latent, shared by every position and every document).
struct PruneMask {
  int d_tok = 0;
  std::vector<int> pruned;  // sorted, unique, each in [0, d_tok)

  static PruneMask Empty(int d_tok);

  void Validate() const;
  bool Contains(int channel) const;
  int AliveCount() const { return d_tok - static_cast<int>(pruned.size()); }
  bool IsSubsetOf(const PruneMask& other) const;
};

// Zeroes the pruned columns of a (positions x d_tok) latent in place.
void ApplyPruneMask(Mat& latent, const PruneMask& mask);

// Flat (token-major) coordinate indices covered by the mask over a latent
// with `positions` rows: position * d_tok + channel, ascending.
std::vector<std::int64_t> FlatPrunedIndices(const PruneMask& mask,
                                            int positions);

// Live coordinate count of the flattened latent: (d_tok - pruned) * positions.
std::int64_t EffectiveDim(const PruneMask& mask, int positions);

// Column-wise absolute sums of a weight matrix stored out x in: the
// importance of input channel j is sum_i |W(i, j)|.
std::vector<double> NeuronImportance(const Mat& weight);

// Linearly interpolated quantile with the (N-1)*q index convention.
double Quantile(std::vector<double> values, double q);

// Channels to prune this round: alive channels whose importance is strictly
// below the q-quantile of alive importances. If none qualify, the single
// lowest-importance alive channel is returned (ties to the lowest index).
// Throws std::logic_error when no channel is alive.
std::vector<int> SelectPruneChannels(const std::vector<double>& importance,
                                     const PruneMask& already_pruned,
                                     double quantile);

// Extends `mask` with `channels`, keeping it sorted/unique; the previous
// mask is always a subset of the result.
PruneMask ExtendMask(const PruneMask& mask, const std::vector<int>& channels);

struct PruneRoundLog {
  int round = 0;  // 1-based
  int newly_pruned = 0;
  int total_pruned = 0;
  double threshold = 0.0;
  double retrain_loss = 0.0;
};

struct PruneTrainResult {
  std::vector<PruneMask> history;  // after each round; nested by construction
  PruneMask deployed;              // per use_iteration (0 = empty mask)
  int use_iteration = 0;
  std::vector<PruneRoundLog> logs;
};

struct PruneScheduleConfig {
  int total_iterations = 6;
  // 1-based count of rounds whose mask is deployed; 0 is the empty mask and
  // -1 selects the default total_iterations - 1.
  int use_iteration = -1;
  double quantile = 0.25;
  int retrain_steps = 250;
  double retrain_clip_c = 0.2;

  void Validate() const;
  int ResolvedUseIteration() const;
};

class Autoencoder;
struct TrainOptions;
struct TokenSequence;
class RngStream;

// Alternates importance-based channel pruning with short retraining rounds
// (latents pruned by the growing mask and value-clipped at retrain_clip_c;
// the clip in `base_options` is overridden). The importance source is the
// cross-attention key projection of the first decoder layer. Masks depend
// only on model weights, never on the documents.
PruneTrainResult IterativePruneTrain(Autoencoder& model,
                                     const std::vector<TokenSequence>& train,
                                     const PruneScheduleConfig& schedule,
                                     const TrainOptions& base_options,
                                     int batch_size, RngStream& rng);

}  // namespace dprw

#endif  // DPRW_PRUNING_H_
