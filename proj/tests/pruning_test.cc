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
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "dprw/corpus.h"
#include "dprw/model.h"
#include "dprw/pruning.h"
#include "dprw/rng.h"

namespace dprw {
namespace {

TEST_CASE("mask application zeroes exactly the pruned columns") {
  Mat latent(2, 3);
  latent << 1.0, 2.0, 3.0, 4.0, 5.0, 6.0;
  PruneMask mask;
  mask.d_tok = 3;
  mask.pruned = {1};
  ApplyPruneMask(latent, mask);
  CHECK(latent(0, 0) == 1.0);
  CHECK(latent(0, 1) == 0.0);
  CHECK(latent(0, 2) == 3.0);
  CHECK(latent(1, 1) == 0.0);
  CHECK(latent(1, 2) == 6.0);
}

TEST_CASE("empty mask is the identity and masking is idempotent") {
  RngStream rng(3);
  Mat latent(4, 8);
  for (Eigen::Index i = 0; i < latent.rows(); ++i) {
    for (Eigen::Index j = 0; j < latent.cols(); ++j) {
      latent(i, j) = rng.Gaussian(1.0);
    }
  }
  Mat copy = latent;
  ApplyPruneMask(copy, PruneMask::Empty(8));
  CHECK(copy == latent);

  PruneMask mask;
  mask.d_tok = 8;
  mask.pruned = {0, 5, 7};
  Mat once = latent;
  ApplyPruneMask(once, mask);
  Mat twice = once;
  ApplyPruneMask(twice, mask);
  CHECK(once == twice);
}

TEST_CASE("masked output ignores input values at pruned coordinates") {
  PruneMask mask;
  mask.d_tok = 4;
  mask.pruned = {2};
  Mat a(1, 4);
  a << 1.0, 2.0, 3.0, 4.0;
  Mat b = a;
  b(0, 2) = -999.0;  // differs only on the pruned channel
  ApplyPruneMask(a, mask);
  ApplyPruneMask(b, mask);
  CHECK(a == b);
}

TEST_CASE("mask validation rejects malformed masks") {
  PruneMask unsorted;
  unsorted.d_tok = 4;
  unsorted.pruned = {2, 1};
  CHECK_THROWS_AS(unsorted.Validate(), std::invalid_argument);

  PruneMask out_of_range;
  out_of_range.d_tok = 4;
  out_of_range.pruned = {4};
  CHECK_THROWS_AS(out_of_range.Validate(), std::invalid_argument);

  PruneMask duplicate;
  duplicate.d_tok = 4;
  duplicate.pruned = {1, 1};
  CHECK_THROWS_AS(duplicate.Validate(), std::invalid_argument);
}

TEST_CASE("neuron importance is the column-wise absolute sum") {
  Mat w(2, 2);
  w << 1.0, -2.0, 0.5, 0.0;
  const std::vector<double> scores = NeuronImportance(w);
  REQUIRE(scores.size() == 2);
  CHECK(scores[0] == doctest::Approx(1.5));
  CHECK(scores[1] == doctest::Approx(2.0));
}

TEST_CASE("all-zero weights give all-zero importance") {
  const std::vector<double> scores = NeuronImportance(Mat::Zero(3, 5));
  for (double s : scores) CHECK(s == 0.0);
}

TEST_CASE("importance matches an independent reference computation") {
  RngStream rng(17);
  Mat w(6, 9);
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index j = 0; j < 9; ++j) w(i, j) = rng.Gaussian(1.0);
  }
  const std::vector<double> scores = NeuronImportance(w);
  for (Eigen::Index j = 0; j < 9; ++j) {
    double expected = 0.0;
    for (Eigen::Index i = 0; i < 6; ++i) expected += std::abs(w(i, j));
    CHECK(scores[static_cast<std::size_t>(j)] == doctest::Approx(expected));
  }
}

TEST_CASE("quantile uses linear interpolation") {
  CHECK(Quantile({1.0, 2.0, 3.0, 4.0}, 0.25) == doctest::Approx(1.75));
  CHECK(Quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == doctest::Approx(2.5));
  CHECK(Quantile({5.0}, 0.25) == doctest::Approx(5.0));
}

TEST_CASE("first-round selection prunes strictly below the 25% threshold") {
  const std::vector<double> importance{1.0, 2.0, 3.0, 4.0};
  const std::vector<int> picked =
      SelectPruneChannels(importance, PruneMask::Empty(4), 0.25);
  CHECK(picked == std::vector<int>{0});
}

TEST_CASE("second-round selection only considers alive channels") {
  const std::vector<double> importance{1.0, 2.0, 3.0, 4.0};
  PruneMask mask;
  mask.d_tok = 4;
  mask.pruned = {0};
  // Quantile over {2,3,4} at 0.25 -> 2.5; strictly below -> channel 1.
  const std::vector<int> picked = SelectPruneChannels(importance, mask, 0.25);
  CHECK(picked == std::vector<int>{1});
}

TEST_CASE("equal importances force exactly one pruned channel") {
  const std::vector<double> importance{2.0, 2.0, 2.0, 2.0};
  const std::vector<int> picked =
      SelectPruneChannels(importance, PruneMask::Empty(4), 0.25);
  CHECK(picked == std::vector<int>{0});

  PruneMask mask;
  mask.d_tok = 4;
  mask.pruned = {0};
  const std::vector<int> second = SelectPruneChannels(importance, mask, 0.25);
  CHECK(second == std::vector<int>{1});
}

TEST_CASE("selection never returns an already-pruned channel") {
  RngStream rng(23);
  std::vector<double> importance(16);
  for (double& s : importance) s = rng.Uniform01();
  PruneMask mask = PruneMask::Empty(16);
  for (int round = 0; round < 6; ++round) {
    const std::vector<int> picked =
        SelectPruneChannels(importance, mask, 0.3);
    for (int channel : picked) CHECK_FALSE(mask.Contains(channel));
    mask = ExtendMask(mask, picked);
  }
}

TEST_CASE("selection with no alive channel is an invalid state") {
  PruneMask all;
  all.d_tok = 2;
  all.pruned = {0, 1};
  CHECK_THROWS_AS(SelectPruneChannels({1.0, 2.0}, all, 0.25),
                  std::logic_error);
}

TEST_CASE("effective dimension accounting matches the published numbers") {
  PruneMask paper;
  paper.d_tok = 768;
  paper.pruned.resize(586);
  for (int i = 0; i < 586; ++i) paper.pruned[static_cast<std::size_t>(i)] = i;
  CHECK(EffectiveDim(paper, 20) == 3640);
  CHECK(EffectiveDim(PruneMask::Empty(768), 20) == 15360);

  PruneMask toy;
  toy.d_tok = 32;
  toy.pruned.resize(24);
  for (int i = 0; i < 24; ++i) toy.pruned[static_cast<std::size_t>(i)] = i;
  CHECK(EffectiveDim(toy, 20) == 160);
}

TEST_CASE("five quantile rounds at width 768 prune 586 channels") {
  // Pure mask arithmetic at the published scale: distinct importances,
  // five nested quantile-0.25 rounds.
  RngStream rng(29);
  std::vector<double> importance(768);
  for (double& s : importance) s = rng.Uniform01();
  PruneMask mask = PruneMask::Empty(768);
  for (int round = 0; round < 5; ++round) {
    mask = ExtendMask(mask, SelectPruneChannels(importance, mask, 0.25));
  }
  CHECK(static_cast<int>(mask.pruned.size()) == 586);
  const double fraction = 586.0 / 768.0;
  CHECK(fraction == doctest::Approx(0.763).epsilon(0.001));
}

TEST_CASE("flat pruned indices enumerate token-major coordinates") {
  PruneMask mask;
  mask.d_tok = 3;
  mask.pruned = {1};
  const std::vector<std::int64_t> flat = FlatPrunedIndices(mask, 2);
  CHECK(flat == std::vector<std::int64_t>{1, 4});
}

std::vector<TokenSequence> ToySequences(const Vocab& vocab, int max_len) {
  const std::vector<LabeledDocument> docs = GeneratePublicCorpus(64, 11);
  std::vector<TokenSequence> seqs;
  for (const auto& doc : docs) seqs.push_back(Tokenize(doc.text, vocab,
                                                       max_len));
  return seqs;
}

ModelConfig TinyConfig(int vocab_size) {
  ModelConfig config;
  config.vocab_size = vocab_size;
  config.max_len = 8;
  config.embed_dim = 16;
  config.d_tok = 16;
  config.layers = 1;
  config.heads = 2;
  config.hidden = 32;
  return config;
}

TEST_CASE("iterative prune/retrain yields nested input-independent masks") {
  const std::vector<LabeledDocument> docs = GeneratePublicCorpus(64, 11);
  const Vocab vocab = Vocab::Build(docs, 300);
  const ModelConfig config = TinyConfig(vocab.size());
  const std::vector<TokenSequence> seqs = ToySequences(vocab, config.max_len);

  PruneScheduleConfig schedule;
  schedule.total_iterations = 4;
  schedule.use_iteration = -1;  // deploys after round 3
  schedule.quantile = 0.25;
  schedule.retrain_steps = 4;
  schedule.retrain_clip_c = 0.5;

  Autoencoder model = Autoencoder::Create(config, 77);
  TrainOptions options;
  options.learning_rate = 0.05;
  RngStream rng(5);
  const PruneTrainResult result =
      IterativePruneTrain(model, seqs, schedule, options, 16, rng);

  REQUIRE(result.history.size() == 4);
  for (std::size_t i = 0; i + 1 < result.history.size(); ++i) {
    CHECK(result.history[i].IsSubsetOf(result.history[i + 1]));
    CHECK(result.history[i].pruned.size() <
          result.history[i + 1].pruned.size());
  }
  CHECK(result.use_iteration == 3);
  CHECK(result.deployed.pruned == result.history[2].pruned);

  // Identical seeds reproduce identical mask histories.
  Autoencoder model2 = Autoencoder::Create(config, 77);
  RngStream rng2(5);
  const PruneTrainResult result2 =
      IterativePruneTrain(model2, seqs, schedule, options, 16, rng2);
  REQUIRE(result2.history.size() == result.history.size());
  for (std::size_t i = 0; i < result.history.size(); ++i) {
    CHECK(result2.history[i].pruned == result.history[i].pruned);
  }

  // The deployed mask is a constant of the model: encoding any document and
  // applying it zeroes the same channels.
  for (int doc = 0; doc < 100; ++doc) {
    const TokenSequence& seq = seqs[static_cast<std::size_t>(doc) %
                                    seqs.size()];
    Mat latent = model.Encode(seq).values;
    ApplyPruneMask(latent, result.deployed);
    for (int channel : result.deployed.pruned) {
      CHECK(latent.col(channel).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("use_iteration zero deploys the empty mask") {
  const std::vector<LabeledDocument> docs = GeneratePublicCorpus(32, 11);
  const Vocab vocab = Vocab::Build(docs, 300);
  const ModelConfig config = TinyConfig(vocab.size());
  const std::vector<TokenSequence> seqs = ToySequences(vocab, config.max_len);

  PruneScheduleConfig schedule;
  schedule.total_iterations = 1;
  schedule.use_iteration = 0;
  schedule.quantile = 0.25;
  schedule.retrain_steps = 2;
  schedule.retrain_clip_c = 0.5;

  Autoencoder model = Autoencoder::Create(config, 3);
  TrainOptions options;
  RngStream rng(4);
  const PruneTrainResult result =
      IterativePruneTrain(model, seqs, schedule, options, 16, rng);
  CHECK(result.deployed.pruned.empty());
  REQUIRE(result.history.size() == 1);
  CHECK(result.history[0].pruned.size() ==
        static_cast<std::size_t>(result.logs[0].newly_pruned));
}

TEST_CASE("schedule validation") {
  PruneScheduleConfig bad = {};
  bad.total_iterations = 0;
  CHECK_THROWS_AS(bad.Validate(), std::invalid_argument);

  PruneScheduleConfig wrong_use = {};
  wrong_use.total_iterations = 3;
  wrong_use.use_iteration = 4;
  CHECK_THROWS_AS(wrong_use.Validate(), std::invalid_argument);

  PruneScheduleConfig quantile = {};
  quantile.quantile = 1.0;
  CHECK_THROWS_AS(quantile.Validate(), std::invalid_argument);

  PruneScheduleConfig fine = {};
  CHECK_NOTHROW(fine.Validate());
  CHECK(fine.ResolvedUseIteration() == fine.total_iterations - 1);
}

}  // namespace
}  // namespace dprw
