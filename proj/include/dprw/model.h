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

#ifndef DPRW_MODEL_H_
#define DPRW_MODEL_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dprw/clipping.h"
#include "dprw/corpus.h"
#include "dprw/dp_mechanisms.h"
#include "dprw/parameter_store.h"
#include "dprw/pruning.h"
#include "dprw/rng.h"

namespace dprw {

enum class Architecture { kTinyTransformer, kRecurrentBaseline };

std::string ArchitectureName(Architecture architecture);
Architecture ArchitectureFromName(const std::string& name);

struct ModelConfig {
  Architecture architecture = Architecture::kTinyTransformer;
  int vocab_size = 0;  // includes the 5 reserved ids
  int max_len = 20;    // fixed sequence length l
  int embed_dim = 32;  // token embedding width
  int d_tok = 32;      // transformer per-token latent width (== embed_dim)
  int layers = 2;      // transformer encoder/decoder depth
  int heads = 2;
  int hidden = 64;     // transformer feed-forward width; LSTM state size

  void Validate() const;

  // Latent shape: (max_len x d_tok) for the transformer, a single row of
  // 2*hidden (final hidden and cell state) for the recurrent baseline.
  Eigen::Index LatentRows() const;
  Eigen::Index LatentCols() const;
  std::int64_t LatentDim() const {
    return static_cast<std::int64_t>(LatentRows()) * LatentCols();
  }
};

struct LatentVector {
  Mat values;  // LatentRows() x LatentCols()
};

// Row-major (token-major) flattening: coordinate t * cols + j.
std::vector<double> FlattenLatent(const Mat& latent);
Mat UnflattenLatent(const std::vector<double>& flat, Eigen::Index rows,
                    Eigen::Index cols);

struct CorruptionOptions {
  double mask_prob = 0.0;    // replace a non-pad token with <mask>
  double delete_prob = 0.0;  // drop it and re-pad at the end
};

// BART-style input corruption; each non-pad token independently masked or
// deleted. mask_prob + delete_prob must be <= 1.
TokenSequence Corrupt(const TokenSequence& seq,
                      const CorruptionOptions& options, RngStream& rng);

// Transform applied to the encoder output before the decoder sees it, in
// fixed order: prune, clip, then noise. Noise is treated as a constant in
// the backward pass. The prune mask is transformer-only.
struct LatentTransform {
  const PruneMask* mask = nullptr;
  std::optional<ClipSpec> clip;
  std::optional<NoiseSpec> noise;
};

struct DecodeStrategy {
  int beam_width = 1;
  static DecodeStrategy Greedy() { return DecodeStrategy{1}; }
  static DecodeStrategy Beam(int width);
};

struct StepDiagnostics {
  double loss = 0.0;
  // Largest |coordinate| of the transformed latent; with a value clip this
  // never exceeds c, with a norm clip the latent norm never exceeds c.
  double latent_abs_max = 0.0;
  double latent_norm_max = 0.0;
  // Largest |coordinate| on pruned channels after the transform (always 0).
  double masked_abs_max = 0.0;
};

struct TrainOptions {
  double learning_rate = 0.1;
  double momentum = 0.9;
  CorruptionOptions corruption;
  LatentTransform transform;
};

// Toy sequence autoencoder trained from scratch: a tiny pre-norm transformer
// encoder/decoder, or a single-layer unidirectional LSTM encoder/decoder
// whose latent is the concatenated final hidden and cell state. All
// gradients are computed by hand; see transformer.cc and lstm.cc.
class Autoencoder {
 public:
  static Autoencoder Create(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  bool frozen() const { return frozen_; }
  void Freeze() { frozen_ = true; }

  // Deterministic map from token ids to the latent. Throws
  // std::invalid_argument if an id is outside [0, vocab_size) or the
  // sequence length differs from max_len.
  LatentVector Encode(const TokenSequence& seq) const;

  // Greedy or beam search from <bos>, stopping at <eos> or max_len; ties
  // break toward the lower token id, so decoding is deterministic.
  TokenSequence Decode(const LatentVector& latent,
                       const DecodeStrategy& strategy) const;

  // Teacher-forced mean cross-entropy of reconstructing `targets` from
  // (corrupted) `inputs`, encoder latents passed through `transform`.
  // Accumulates parameter gradients when compute_grads is true; throws
  // std::logic_error for any gradient work on a frozen model.
  StepDiagnostics ComputeLoss(const std::vector<TokenSequence>& inputs,
                              const std::vector<TokenSequence>& targets,
                              const LatentTransform& transform,
                              RngStream* noise_rng, bool compute_grads);

  // ZeroGrads + corrupt inputs + ComputeLoss(grads) + SGD step.
  StepDiagnostics TrainStep(const std::vector<TokenSequence>& batch,
                            const TrainOptions& options, RngStream& rng);

  // Cross-attention key projection of the first decoder layer, the source
  // of channel importance scores. Transformer only.
  const Mat& CrossAttentionKeyWeight() const;

 private:
  explicit Autoencoder(const ModelConfig& config);

  ModelConfig config_;
  ParameterStore params_;
  bool frozen_ = false;
};

// Shared helper: applies `transform` to a latent, optionally recording what
// the backward pass and training diagnostics need. Defined in model.cc.
struct TransformRecord {
  Mat pre_clip;  // latent after prune, before clip
  bool norm_scaled = false;
  double pre_clip_norm = 0.0;  // Frobenius norm before a norm clip
  // Diagnostics measured after the clip and before any noise.
  double post_clip_abs_max = 0.0;
  double post_clip_norm = 0.0;
};

Mat ApplyLatentTransform(const Mat& latent, const LatentTransform& transform,
                         const ModelConfig& config, RngStream* noise_rng,
                         TransformRecord* record);

// Backward of ApplyLatentTransform (noise is constant; clip and prune have
// the usual subgradients).
Mat LatentTransformBackward(const Mat& d_transformed,
                            const LatentTransform& transform,
                            const TransformRecord& record);

}  // namespace dprw

#endif  // DPRW_MODEL_H_
