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

#include "dprw/pruning.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dprw/model.h"

namespace dprw {

PruneMask PruneMask::Empty(int d_tok) {
  if (d_tok <= 0) {
    throw std::invalid_argument("prune mask: d_tok must be > 0");
  }
  PruneMask mask;
  mask.d_tok = d_tok;
  return mask;
}

void PruneMask::Validate() const {
  if (d_tok <= 0) {
    throw std::invalid_argument("prune mask: d_tok must be > 0");
  }
  if (!std::is_sorted(pruned.begin(), pruned.end()) ||
      std::adjacent_find(pruned.begin(), pruned.end()) != pruned.end()) {
    throw std::invalid_argument("prune mask: channels must be sorted unique");
  }
  if (!pruned.empty() && (pruned.front() < 0 || pruned.back() >= d_tok)) {
    throw std::invalid_argument("prune mask: channel out of range");
  }
}

bool PruneMask::Contains(int channel) const {
  return std::binary_search(pruned.begin(), pruned.end(), channel);
}

bool PruneMask::IsSubsetOf(const PruneMask& other) const {
  if (d_tok != other.d_tok) return false;
  return std::includes(other.pruned.begin(), other.pruned.end(),
                       pruned.begin(), pruned.end());
}

void ApplyPruneMask(Mat& latent, const PruneMask& mask) {
  mask.Validate();
  if (latent.cols() != mask.d_tok) {
    throw std::invalid_argument("prune: latent width does not match mask");
  }
  for (int channel : mask.pruned) latent.col(channel).setZero();
}

std::vector<std::int64_t> FlatPrunedIndices(const PruneMask& mask,
                                            int positions) {
  mask.Validate();
  if (positions <= 0) {
    throw std::invalid_argument("prune: positions must be > 0");
  }
  std::vector<std::int64_t> flat;
  flat.reserve(mask.pruned.size() * static_cast<std::size_t>(positions));
  for (int t = 0; t < positions; ++t) {
    for (int channel : mask.pruned) {
      flat.push_back(static_cast<std::int64_t>(t) * mask.d_tok + channel);
    }
  }
  return flat;
}

std::int64_t EffectiveDim(const PruneMask& mask, int positions) {
  mask.Validate();
  if (positions <= 0) {
    throw std::invalid_argument("prune: positions must be > 0");
  }
  return static_cast<std::int64_t>(mask.AliveCount()) * positions;
}

std::vector<double> NeuronImportance(const Mat& weight) {
  if (weight.size() == 0) {
    throw std::invalid_argument("importance: empty weight matrix");
  }
  std::vector<double> scores(static_cast<std::size_t>(weight.cols()));
  for (Eigen::Index j = 0; j < weight.cols(); ++j) {
    scores[static_cast<std::size_t>(j)] = weight.col(j).cwiseAbs().sum();
  }
  return scores;
}

double Quantile(std::vector<double> values, double q) {
  if (values.empty()) {
    throw std::invalid_argument("quantile: empty input");
  }
  if (q < 0.0 || q > 1.0) {
    throw std::invalid_argument("quantile: q must be in [0, 1]");
  }
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<int> SelectPruneChannels(const std::vector<double>& importance,
                                     const PruneMask& already_pruned,
                                     double quantile) {
  already_pruned.Validate();
  if (static_cast<int>(importance.size()) != already_pruned.d_tok) {
    throw std::invalid_argument("select: importance size mismatch");
  }
  std::vector<int> alive;
  std::vector<double> alive_scores;
  for (int j = 0; j < already_pruned.d_tok; ++j) {
    if (already_pruned.Contains(j)) continue;
    alive.push_back(j);
    alive_scores.push_back(importance[static_cast<std::size_t>(j)]);
  }
  if (alive.empty()) {
    throw std::logic_error("select: every channel is already pruned");
  }
  const double threshold = Quantile(alive_scores, quantile);
  std::vector<int> picked;
  for (std::size_t i = 0; i < alive.size(); ++i) {
    if (alive_scores[i] < threshold) picked.push_back(alive[i]);
  }
  if (picked.empty()) {
    std::size_t lowest = 0;
    for (std::size_t i = 1; i < alive.size(); ++i) {
      if (alive_scores[i] < alive_scores[lowest]) lowest = i;
    }
    picked.push_back(alive[lowest]);
  }
  return picked;
}

PruneMask ExtendMask(const PruneMask& mask, const std::vector<int>& channels) {
  PruneMask extended = mask;
  extended.pruned.insert(extended.pruned.end(), channels.begin(),
                         channels.end());
  std::sort(extended.pruned.begin(), extended.pruned.end());
  extended.pruned.erase(
      std::unique(extended.pruned.begin(), extended.pruned.end()),
      extended.pruned.end());
  extended.Validate();
  return extended;
}

void PruneScheduleConfig::Validate() const {
  if (total_iterations <= 0) {
    throw std::invalid_argument("prune schedule: total_iterations must be > 0");
  }
  if (use_iteration < -1 || use_iteration > total_iterations) {
    throw std::invalid_argument(
        "prune schedule: use_iteration must be in [0, total_iterations]");
  }
  if (quantile <= 0.0 || quantile >= 1.0) {
    throw std::invalid_argument("prune schedule: quantile must be in (0, 1)");
  }
  if (retrain_steps < 0) {
    throw std::invalid_argument("prune schedule: retrain_steps must be >= 0");
  }
  if (!(retrain_clip_c > 0.0)) {
    throw std::invalid_argument("prune schedule: retrain clip must be > 0");
  }
}

int PruneScheduleConfig::ResolvedUseIteration() const {
  if (use_iteration >= 0) return use_iteration;
  return total_iterations > 1 ? total_iterations - 1 : total_iterations;
}

PruneTrainResult IterativePruneTrain(Autoencoder& model,
                                     const std::vector<TokenSequence>& train,
                                     const PruneScheduleConfig& schedule,
                                     const TrainOptions& base_options,
                                     int batch_size, RngStream& rng) {
  schedule.Validate();
  if (model.config().architecture != Architecture::kTinyTransformer) {
    throw std::logic_error("prune: only the transformer latent is prunable");
  }
  if (train.empty()) {
    throw std::invalid_argument("prune: empty training set");
  }
  if (batch_size <= 0) {
    throw std::invalid_argument("prune: batch_size must be > 0");
  }

  PruneTrainResult result;
  result.use_iteration = schedule.ResolvedUseIteration();
  PruneMask mask = PruneMask::Empty(model.config().d_tok);

  // Weights are rolled back to the deployed iteration after the full
  // schedule has run, so the frozen model matches the deployed mask.
  Autoencoder deployed_model = model;

  RngStream order_rng = rng.Derive(1);
  RngStream step_rng = rng.Derive(2);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t cursor = order.size();

  for (int round = 1; round <= schedule.total_iterations; ++round) {
    const std::vector<double> importance =
        NeuronImportance(model.CrossAttentionKeyWeight());
    std::vector<double> alive_scores;
    for (int j = 0; j < mask.d_tok; ++j) {
      if (!mask.Contains(j)) {
        alive_scores.push_back(importance[static_cast<std::size_t>(j)]);
      }
    }
    const std::vector<int> picked =
        SelectPruneChannels(importance, mask, schedule.quantile);
    mask = ExtendMask(mask, picked);
    if (mask.AliveCount() == 0) {
      throw std::logic_error("prune: schedule pruned every channel");
    }
    result.history.push_back(mask);

    TrainOptions options = base_options;
    options.transform.mask = &result.history.back();
    options.transform.clip = ClipSpec::ByValue(schedule.retrain_clip_c);
    options.transform.noise.reset();

    double last_loss = 0.0;
    for (int step = 0; step < schedule.retrain_steps; ++step) {
      std::vector<TokenSequence> batch;
      batch.reserve(static_cast<std::size_t>(batch_size));
      for (int b = 0; b < batch_size; ++b) {
        if (cursor == order.size()) {
          order_rng.Shuffle(order);
          cursor = 0;
        }
        batch.push_back(train[order[cursor++]]);
      }
      last_loss = model.TrainStep(batch, options, step_rng).loss;
    }

    PruneRoundLog log;
    log.round = round;
    log.newly_pruned = static_cast<int>(picked.size());
    log.total_pruned = static_cast<int>(mask.pruned.size());
    log.threshold = Quantile(alive_scores, schedule.quantile);
    log.retrain_loss = last_loss;
    result.logs.push_back(log);

    if (round == result.use_iteration) deployed_model = model;
  }

  const int use = result.use_iteration;
  if (use == 0) {
    result.deployed = PruneMask::Empty(model.config().d_tok);
  } else {
    result.deployed = result.history[static_cast<std::size_t>(use - 1)];
  }
  model = deployed_model;
  return result;
}

}  // namespace dprw
