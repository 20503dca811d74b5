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

#ifndef DPRW_PIPELINE_H_
#define DPRW_PIPELINE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dprw/checkpoint.h"
#include "dprw/clipping.h"
#include "dprw/corpus.h"
#include "dprw/dp_mechanisms.h"
#include "dprw/evaluation.h"
#include "dprw/model.h"
#include "dprw/pruning.h"

namespace dprw {

// The four rewriting systems: the norm-clipped recurrent baseline and the
// value-clipped transformer, the latter optionally pruned (PR) and
// noise-adapted (PR+).
enum class Variant { kBaselineNormClip, kClv, kPr, kPrPlus };

std::string VariantName(Variant variant);  // baseline | clv | pr | pr-plus
Variant VariantFromName(const std::string& name);

// Handling of datasets where one individual contributed several documents:
// ignore the grouping, charge the composed budget k*eps per document, or
// concatenate each individual's documents and rewrite them as one.
enum class GroupingPolicy { kNone, kCompose, kConcat };

std::string GroupingPolicyName(GroupingPolicy policy);
GroupingPolicy GroupingPolicyFromName(const std::string& name);

struct PipelinePaths {
  std::string public_corpus;  // plain-text file; empty selects the generator
  std::string dataset;        // JSONL file; empty selects the generator
  std::string work_dir = "runs";
};

struct TrainingSettings {
  int pretrain_steps = 800;
  int batch_size = 32;
  double learning_rate = 0.12;
  double momentum = 0.9;
  double mask_prob = 0.12;
  double delete_prob = 0.03;
  int patience = 4;       // epochs without validation improvement per plateau
  // On a plateau the trainer rewinds to the best weights and multiplies the
  // learning rate by lr_decay, up to lr_reductions times; the next plateau
  // after that stops training.
  int lr_reductions = 2;
  double lr_decay = 0.5;
  int public_docs = 1200;  // generated corpus sizes
  int dataset_docs = 760;
  int vocab_max = 600;

  void Validate() const;
};

// Default PR+ epoch schedule: epochs = clamp(ceil(base * eps_ref / eps),
// 1, max_epochs); lower budgets get more adaptation.
struct PrPlusSettings {
  double base = 3.0;
  double eps_ref = 500.0;
  int max_epochs = 10;
  std::optional<int> epochs;  // explicit override

  int ResolveEpochs(const PrivacyParams& privacy) const;
};

struct ExperimentConfig {
  Variant variant = Variant::kClv;
  ModelConfig model;
  PrivacyParams privacy;
  // Clip constant source: estimated from public held-out latents by default
  // (two_sigma for the norm-clipped baseline, half_sigma otherwise), or
  // fixed by setting clip_c > 0.
  double clip_c = 0.0;
  std::optional<PruneScheduleConfig> schedule;  // PR / PR+ only
  PrPlusSettings prplus;
  std::uint64_t seed = 7;
  int beam_width = 10;
  bool audit = false;  // include original text in rewrite records
  GroupingPolicy grouping = GroupingPolicy::kNone;
  PipelinePaths paths;
  TrainingSettings training;

  void Validate() const;
  ClipRule clip_rule() const;
  ClipMode clip_mode() const;

  static ExperimentConfig FromJsonText(const std::string& text);
  static ExperimentConfig FromJsonFile(const std::string& path);
  std::string ToJsonText() const;  // canonical echo used in reports/digests
};

struct RewriteRecord {
  int doc_id = 0;
  std::string original_text;  // empty unless the audit flag is set
  std::string rewritten_text;
  std::string label;
  std::string individual_id;
  double epsilon_charged = 0.0;  // 0 stands for the infinite budget
};

void SaveRewriteRecords(const std::vector<RewriteRecord>& records,
                        const std::string& path);
std::vector<RewriteRecord> LoadRewriteRecords(const std::string& path);

// Data prepared once per experiment: pretraining splits from the public
// corpus, the labeled downstream splits, and the shared vocabulary (built
// from public text only).
struct PreparedData {
  std::vector<LabeledDocument> public_train;
  std::vector<LabeledDocument> public_val;
  CorpusSplit dataset;
  Vocab vocab;
};

PreparedData PrepareData(const ExperimentConfig& config);

std::vector<TokenSequence> TokenizeAll(
    const std::vector<LabeledDocument>& docs, const Vocab& vocab,
    int length);

struct PretrainStats {
  int steps_run = 0;
  int epochs_run = 0;
  int lr_reductions_used = 0;
  double final_train_loss = 0.0;
  double best_val_loss = 0.0;
};

// Reconstruction training on the public corpus with epoch-level early
// stopping on validation loss (no transform applied).
Autoencoder Pretrain(const ExperimentConfig& config,
                     const std::vector<TokenSequence>& train,
                     const std::vector<TokenSequence>& val,
                     PretrainStats* stats);

// Clip-constant estimate from encoder latents of `docs`: pooled coordinate
// values for value clipping, per-document l2 norms for norm clipping.
ClipEstimate EstimateClipFromModel(const Autoencoder& model,
                                   const std::vector<TokenSequence>& docs,
                                   ClipRule rule, ClipMode mode);

// PR+ stage: continue training with prune + clip + per-step fresh noise on
// the latent, noise calibrated from the mask's effective dimension.
void TrainNoisy(Autoencoder& model, const PruneMask& mask,
                const ExperimentConfig& config, double clip_c,
                const std::vector<TokenSequence>& train, int epochs,
                RngStream& rng);

// The variant's sensitivity at clip constant `c` over the live latent
// coordinates of `mask` (empty mask for unpruned variants).
Sensitivity VariantSensitivity(const ExperimentConfig& config, double c,
                               const PruneMask& mask);

// Rewrites every document: encode, prune, clip, noise, beam decode. The
// infinite budget short-circuits the whole transform to the plain
// reconstruction path. Per-document noise streams are derived from
// (seed, doc id); `doc_id_base` offsets the ids so different partitions use
// disjoint streams. Requires a frozen model.
std::vector<RewriteRecord> RewriteDataset(
    const Autoencoder& model, const Vocab& vocab, const PruneMask& mask,
    const ExperimentConfig& config, double clip_c,
    const std::vector<LabeledDocument>& docs, int doc_id_base = 0);

// Original documents arranged into the same units as the rewrite output
// (one per record, aligned by position) for reference-based evaluation.
std::vector<LabeledDocument> RewriteUnitsAsDocuments(
    const std::vector<LabeledDocument>& docs, GroupingPolicy grouping);

struct EvaluationResult {
  BleuResult bleu;                  // original vs rewritten training text
  double f1_rewritten = 0.0;        // trained on rewrites, original test set
  double f1_original = 0.0;         // trained on originals, same test set
  double chance_level = 0.0;        // 1 / class count
  int class_count = 0;
};

EvaluationResult EvaluateRewrites(
    const std::vector<LabeledDocument>& original_train,
    const std::vector<LabeledDocument>& original_val,
    const std::vector<LabeledDocument>& original_test,
    const std::vector<RewriteRecord>& rewritten_train,
    const std::vector<RewriteRecord>& rewritten_val, std::uint64_t seed);

struct ExperimentResult {
  std::string report_json;  // full report (the only timing-bearing field
                            // is the top-level "timings" object)
  std::vector<RewriteRecord> rewritten_train;
  std::vector<RewriteRecord> rewritten_val;
  EvaluationResult evaluation;
  ClipEstimate clip_estimate;
  PruneMask deployed_mask;
  double noise_scale = 0.0;
};

// Staged entry points used by the CLI. Each one makes sure its stage
// checkpoint exists under paths.work_dir, reusing a checkpoint whose
// recorded settings digest matches, and returns the checkpoint directory.
// Later stages imply the earlier ones.
std::string EnsurePretrainCheckpoint(const ExperimentConfig& config);
std::string EnsurePruneCheckpoint(const ExperimentConfig& config);
std::string EnsureNoisyCheckpoint(const ExperimentConfig& config);

// Parses "inf" or a positive real into epsilon; the textual inverse.
void SetEpsilon(PrivacyParams& params, const std::string& text);
std::string EpsilonText(const PrivacyParams& params);

// Full pipeline: prepare data, pretrain (or reuse the stage checkpoint),
// prune / noise-adapt per variant, rewrite the train and val partitions,
// evaluate, and write report.json plus the rewritten corpus under
// paths.work_dir.
ExperimentResult RunExperiment(const ExperimentConfig& config);

}  // namespace dprw

#endif  // DPRW_PIPELINE_H_
