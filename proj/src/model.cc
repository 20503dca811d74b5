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

#include "dprw/model.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <tuple>
#include <utility>

#include "nets.h"

namespace dprw {
namespace {

using internal::RecurrentIds;
using internal::Shaper;
using internal::TransformerIds;

// Gaussian init with per-tensor derived streams so layout changes in one
// tensor never reshuffle another tensor's values.
void InitParams(ParameterStore& params, const ModelConfig& config,
                std::uint64_t seed) {
  RngStream root(seed);
  for (int id = 0; id < params.count(); ++id) {
    RngStream rng = root.Derive(static_cast<std::uint64_t>(id));
    Mat& value = params.value(id);
    const std::string& name = params.name(id);
    const bool is_bias = value.rows() == 1 && name.find(".b") != std::string::npos;
    const bool is_ln_gain = name.size() > 2 && name.substr(name.size() - 2) == ".g";
    if (is_ln_gain && value.rows() == 1) {
      value.setOnes();
      continue;
    }
    if (is_bias) {
      value.setZero();
      // Classic LSTM forget-gate bias lift.
      if (config.architecture == Architecture::kRecurrentBaseline &&
          (name == "enc.b" || name == "dec.b")) {
        value.row(0).segment(config.hidden, config.hidden).setConstant(1.0);
      }
      continue;
    }
    double stddev;
    if (name == "tok_embed") {
      stddev = 0.1;
    } else if (name == "enc_pos" || name == "dec_pos") {
      stddev = 0.05;
    } else {
      stddev = 0.6 / std::sqrt(static_cast<double>(value.cols()));
    }
    for (Eigen::Index r = 0; r < value.rows(); ++r) {
      for (Eigen::Index c = 0; c < value.cols(); ++c) {
        value(r, c) = rng.Gaussian(stddev);
      }
    }
  }
}

void CheckSequence(const TokenSequence& seq, const ModelConfig& config) {
  if (static_cast<int>(seq.ids.size()) != config.max_len) {
    throw std::invalid_argument("model: sequence length must equal max_len");
  }
  for (int id : seq.ids) {
    if (id < 0 || id >= config.vocab_size) {
      throw std::invalid_argument("model: token id out of vocabulary");
    }
  }
}

// Type-erased incremental decoder: `advance` copies the given state,
// consumes one token, and returns the next-token log-probabilities together
// with the advanced state.
struct DecoderStepper {
  using StatePtr = std::shared_ptr<void>;
  std::function<StatePtr()> init;
  std::function<std::pair<Eigen::RowVectorXd, StatePtr>(const StatePtr&, int)>
      advance;
};

// Deterministic beam search. Candidates are ranked by total
// log-probability; ties break toward the earlier parent and then the lower
// token id.
TokenSequence BeamDecode(int vocab_size, int max_len, int beam_width,
                         const DecoderStepper& stepper) {
  struct Candidate {
    std::vector<int> ids;
    double logp = 0.0;
    bool done = false;
    DecoderStepper::StatePtr state;
    Eigen::RowVectorXd next_logp;  // distribution after `ids`
  };
  struct PoolEntry {
    double logp;
    std::size_t parent;
    int token;  // -1 marks a finished candidate carried forward
    bool done;
  };

  std::vector<Candidate> beam(1);
  {
    auto [logp, state] = stepper.advance(stepper.init(), Vocab::kBosId);
    beam.front() = Candidate{{Vocab::kBosId}, 0.0, false, std::move(state),
                             std::move(logp)};
  }

  for (int step = 1; step < max_len; ++step) {
    bool all_done = true;
    std::vector<PoolEntry> pool;
    for (std::size_t parent = 0; parent < beam.size(); ++parent) {
      const Candidate& cand = beam[parent];
      if (cand.done) {
        pool.push_back(PoolEntry{cand.logp, parent, -1, true});
        continue;
      }
      all_done = false;
      // Top beam_width continuations of this candidate suffice.
      const Eigen::RowVectorXd& logp = cand.next_logp;
      std::vector<int> tokens(static_cast<std::size_t>(vocab_size));
      for (int v = 0; v < vocab_size; ++v) {
        tokens[static_cast<std::size_t>(v)] = v;
      }
      const std::size_t keep = std::min<std::size_t>(
          static_cast<std::size_t>(beam_width), tokens.size());
      std::partial_sort(tokens.begin(),
                        tokens.begin() + static_cast<std::ptrdiff_t>(keep),
                        tokens.end(), [&](int a, int b) {
                          if (logp(a) != logp(b)) return logp(a) > logp(b);
                          return a < b;
                        });
      for (std::size_t k = 0; k < keep; ++k) {
        const int token = tokens[k];
        pool.push_back(PoolEntry{cand.logp + logp(token), parent, token,
                                 token == Vocab::kEosId});
      }
    }
    if (all_done) break;

    std::sort(pool.begin(), pool.end(),
              [](const PoolEntry& a, const PoolEntry& b) {
                if (a.logp != b.logp) return a.logp > b.logp;
                if (a.parent != b.parent) return a.parent < b.parent;
                return a.token < b.token;
              });
    const std::size_t keep =
        std::min<std::size_t>(static_cast<std::size_t>(beam_width),
                              pool.size());
    std::vector<Candidate> next;
    next.reserve(keep);
    const bool last_step = step == max_len - 1;
    for (std::size_t k = 0; k < keep; ++k) {
      const PoolEntry& entry = pool[k];
      const Candidate& parent = beam[entry.parent];
      Candidate cand;
      cand.ids = parent.ids;
      cand.logp = entry.logp;
      if (entry.token >= 0) {
        cand.ids.push_back(entry.token);
        cand.done = entry.done;
        if (!cand.done && !last_step) {
          auto [logp, state] = stepper.advance(parent.state, entry.token);
          cand.next_logp = std::move(logp);
          cand.state = std::move(state);
        }
      } else {
        cand.done = true;
      }
      next.push_back(std::move(cand));
    }
    beam = std::move(next);
  }

  const Candidate& best = beam.front();
  TokenSequence out;
  out.ids = best.ids;
  out.true_length = static_cast<int>(out.ids.size());
  out.ids.resize(static_cast<std::size_t>(max_len), Vocab::kPadId);
  return out;
}

}  // namespace

std::string ArchitectureName(Architecture architecture) {
  return architecture == Architecture::kTinyTransformer ? "tiny_transformer"
                                                        : "recurrent_baseline";
}

Architecture ArchitectureFromName(const std::string& name) {
  if (name == "tiny_transformer") return Architecture::kTinyTransformer;
  if (name == "recurrent_baseline") return Architecture::kRecurrentBaseline;
  throw std::invalid_argument("unknown architecture: " + name);
}

void ModelConfig::Validate() const {
  if (vocab_size <= Vocab::kReservedCount) {
    throw std::invalid_argument("model: vocab_size must exceed reserved ids");
  }
  if (vocab_size > 2048) {
    throw std::invalid_argument("model: vocab_size must be at most 2048");
  }
  if (max_len < 3) {
    throw std::invalid_argument("model: max_len must be at least 3");
  }
  if (embed_dim <= 0 || hidden <= 0) {
    throw std::invalid_argument("model: widths must be positive");
  }
  if (architecture == Architecture::kTinyTransformer) {
    if (d_tok != embed_dim) {
      throw std::invalid_argument(
          "model: transformer requires d_tok == embed_dim");
    }
    if (layers <= 0 || heads <= 0 || embed_dim % heads != 0) {
      throw std::invalid_argument(
          "model: need layers > 0 and heads dividing embed_dim");
    }
  }
}

Eigen::Index ModelConfig::LatentRows() const {
  return architecture == Architecture::kTinyTransformer ? max_len : 1;
}

Eigen::Index ModelConfig::LatentCols() const {
  return architecture == Architecture::kTinyTransformer ? d_tok : 2 * hidden;
}

std::vector<double> FlattenLatent(const Mat& latent) {
  std::vector<double> flat(static_cast<std::size_t>(latent.size()));
  Eigen::Map<Mat>(flat.data(), latent.rows(), latent.cols()) = latent;
  return flat;
}

Mat UnflattenLatent(const std::vector<double>& flat, Eigen::Index rows,
                    Eigen::Index cols) {
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols) {
    throw std::invalid_argument("latent: flat size does not match shape");
  }
  return Eigen::Map<const Mat>(flat.data(), rows, cols);
}

TokenSequence Corrupt(const TokenSequence& seq,
                      const CorruptionOptions& options, RngStream& rng) {
  if (options.mask_prob < 0.0 || options.delete_prob < 0.0 ||
      options.mask_prob + options.delete_prob > 1.0) {
    throw std::invalid_argument(
        "corrupt: need mask_prob, delete_prob >= 0 with sum <= 1");
  }
  TokenSequence out;
  out.ids.reserve(seq.ids.size());
  for (int id : seq.ids) {
    if (id == Vocab::kPadId) continue;
    const double u = rng.Uniform01();
    if (u < options.mask_prob) {
      out.ids.push_back(Vocab::kMaskId);
    } else if (u < options.mask_prob + options.delete_prob) {
      continue;
    } else {
      out.ids.push_back(id);
    }
  }
  out.true_length = static_cast<int>(out.ids.size());
  out.ids.resize(seq.ids.size(), Vocab::kPadId);
  return out;
}

DecodeStrategy DecodeStrategy::Beam(int width) {
  if (width <= 0) {
    throw std::invalid_argument("decode: beam width must be > 0");
  }
  return DecodeStrategy{width};
}

Mat ApplyLatentTransform(const Mat& latent, const LatentTransform& transform,
                         const ModelConfig& config, RngStream* noise_rng,
                         TransformRecord* record) {
  Mat z = latent;
  if (transform.mask != nullptr) {
    if (config.architecture != Architecture::kTinyTransformer) {
      throw std::invalid_argument(
          "transform: prune masks apply to the transformer latent only");
    }
    ApplyPruneMask(z, *transform.mask);
  }

  TransformRecord local;
  TransformRecord& rec = record != nullptr ? *record : local;
  rec.pre_clip = z;
  rec.norm_scaled = false;
  rec.pre_clip_norm = z.norm();

  if (transform.clip.has_value()) {
    const ClipSpec& spec = *transform.clip;
    spec.Validate();
    if (spec.mode == ClipMode::kByNorm) {
      if (rec.pre_clip_norm > spec.c) {
        z *= spec.c / rec.pre_clip_norm;
        rec.norm_scaled = true;
      }
    } else {
      z = z.unaryExpr([&spec](double v) {
        return std::clamp(v, spec.c_min, spec.c_max);
      });
    }
  }
  rec.post_clip_abs_max = z.size() > 0 ? z.cwiseAbs().maxCoeff() : 0.0;
  rec.post_clip_norm = z.norm();

  if (transform.noise.has_value() && transform.noise->scale > 0.0) {
    if (noise_rng == nullptr) {
      throw std::invalid_argument("transform: noise requires an rng");
    }
    const NoiseSpec& noise = *transform.noise;
    std::int64_t live = static_cast<std::int64_t>(z.size());
    if (transform.mask != nullptr) {
      live = EffectiveDim(*transform.mask, static_cast<int>(z.rows()));
    }
    if (noise.dimension != live) {
      throw std::invalid_argument(
          "transform: noise dimension must match live coordinates");
    }
    // Flat (row-major) order over live coordinates, matching the rewrite
    // path's privatization order.
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      for (Eigen::Index c = 0; c < z.cols(); ++c) {
        if (transform.mask != nullptr &&
            transform.mask->Contains(static_cast<int>(c))) {
          continue;
        }
        const double draw = noise.distribution == Mechanism::kLaplace
                                ? noise_rng->Laplace(noise.scale)
                                : noise_rng->Gaussian(noise.scale);
        z(r, c) += draw;
      }
    }
  }
  return z;
}

Mat LatentTransformBackward(const Mat& d_transformed,
                            const LatentTransform& transform,
                            const TransformRecord& record) {
  Mat dz = d_transformed;  // noise is a constant shift
  if (transform.clip.has_value()) {
    const ClipSpec& spec = *transform.clip;
    if (spec.mode == ClipMode::kByNorm) {
      if (record.norm_scaled) {
        const double r = record.pre_clip_norm;
        const double s = spec.c / r;
        const double dot = (record.pre_clip.array() * dz.array()).sum();
        dz = s * (dz - record.pre_clip * (dot / (r * r)));
      }
    } else {
      for (Eigen::Index i = 0; i < dz.rows(); ++i) {
        for (Eigen::Index j = 0; j < dz.cols(); ++j) {
          const double v = record.pre_clip(i, j);
          if (v < spec.c_min || v > spec.c_max) dz(i, j) = 0.0;
        }
      }
    }
  }
  if (transform.mask != nullptr) {
    for (int channel : transform.mask->pruned) dz.col(channel).setZero();
  }
  return dz;
}

Autoencoder::Autoencoder(const ModelConfig& config) : config_(config) {}

Autoencoder Autoencoder::Create(const ModelConfig& config,
                                std::uint64_t seed) {
  config.Validate();
  Autoencoder model(config);
  Shaper shaper;
  shaper.add_to = &model.params_;
  if (config.architecture == Architecture::kTinyTransformer) {
    TransformerIds::Wire(config, shaper);
  } else {
    RecurrentIds::Wire(config, shaper);
  }
  InitParams(model.params_, config, seed);
  return model;
}

LatentVector Autoencoder::Encode(const TokenSequence& seq) const {
  CheckSequence(seq, config_);
  LatentVector latent;
  if (config_.architecture == Architecture::kTinyTransformer) {
    latent.values = internal::TfEncodeStates(params_, config_, seq.ids);
  } else {
    latent.values = internal::RnnEncodeStates(params_, config_, seq.ids);
  }
  return latent;
}

TokenSequence Autoencoder::Decode(const LatentVector& latent,
                                  const DecodeStrategy& strategy) const {
  if (latent.values.rows() != config_.LatentRows() ||
      latent.values.cols() != config_.LatentCols()) {
    throw std::invalid_argument("decode: latent shape mismatch");
  }
  if (strategy.beam_width <= 0) {
    throw std::invalid_argument("decode: beam width must be > 0");
  }
  DecoderStepper stepper;
  if (config_.architecture == Architecture::kTinyTransformer) {
    auto cross = std::make_shared<internal::TfCrossContext>(
        internal::TfMakeCrossContext(params_, config_, latent.values));
    stepper.init = [this]() -> DecoderStepper::StatePtr {
      return std::make_shared<internal::TfIncState>(
          internal::TfInitState(config_));
    };
    stepper.advance = [this, cross](const DecoderStepper::StatePtr& state,
                                    int token) {
      auto next = std::make_shared<internal::TfIncState>(
          *std::static_pointer_cast<internal::TfIncState>(state));
      Eigen::RowVectorXd logp =
          internal::TfAdvance(params_, config_, *cross, *next, token);
      return std::make_pair(std::move(logp),
                            DecoderStepper::StatePtr(std::move(next)));
    };
  } else {
    const Mat z = latent.values;
    stepper.init = [this, z]() -> DecoderStepper::StatePtr {
      return std::make_shared<internal::RnnIncState>(
          internal::RnnInitState(config_, z));
    };
    stepper.advance = [this](const DecoderStepper::StatePtr& state,
                             int token) {
      auto next = std::make_shared<internal::RnnIncState>(
          *std::static_pointer_cast<internal::RnnIncState>(state));
      Eigen::RowVectorXd logp =
          internal::RnnAdvance(params_, config_, *next, token);
      return std::make_pair(std::move(logp),
                            DecoderStepper::StatePtr(std::move(next)));
    };
  }

  if (strategy.beam_width == 1) {
    // Greedy: argmax walk with lowest-id tie breaking.
    auto [logp, state] = stepper.advance(stepper.init(), Vocab::kBosId);
    std::vector<int> ids = {Vocab::kBosId};
    while (static_cast<int>(ids.size()) < config_.max_len) {
      int best = 0;
      for (int v = 1; v < config_.vocab_size; ++v) {
        if (logp(v) > logp(best)) best = v;
      }
      ids.push_back(best);
      if (best == Vocab::kEosId ||
          static_cast<int>(ids.size()) == config_.max_len) {
        break;
      }
      std::tie(logp, state) = stepper.advance(state, best);
    }
    TokenSequence out;
    out.ids = ids;
    out.true_length = static_cast<int>(ids.size());
    out.ids.resize(static_cast<std::size_t>(config_.max_len), Vocab::kPadId);
    return out;
  }
  return BeamDecode(config_.vocab_size, config_.max_len, strategy.beam_width,
                    stepper);
}

StepDiagnostics Autoencoder::ComputeLoss(
    const std::vector<TokenSequence>& inputs,
    const std::vector<TokenSequence>& targets,
    const LatentTransform& transform, RngStream* noise_rng,
    bool compute_grads) {
  if (compute_grads && frozen_) {
    throw std::logic_error("model: gradient work on a frozen model");
  }
  if (inputs.empty() || inputs.size() != targets.size()) {
    throw std::invalid_argument(
        "model: inputs and targets must be non-empty and aligned");
  }
  for (const TokenSequence& seq : inputs) CheckSequence(seq, config_);
  for (const TokenSequence& seq : targets) CheckSequence(seq, config_);
  if (config_.architecture == Architecture::kTinyTransformer) {
    return internal::TfComputeLoss(params_, config_, inputs, targets,
                                   transform, noise_rng, compute_grads);
  }
  return internal::RnnComputeLoss(params_, config_, inputs, targets,
                                  transform, noise_rng, compute_grads);
}

StepDiagnostics Autoencoder::TrainStep(const std::vector<TokenSequence>& batch,
                                       const TrainOptions& options,
                                       RngStream& rng) {
  if (frozen_) {
    throw std::logic_error("model: train step on a frozen model");
  }
  std::vector<TokenSequence> inputs;
  inputs.reserve(batch.size());
  for (const TokenSequence& seq : batch) {
    inputs.push_back(Corrupt(seq, options.corruption, rng));
  }
  params_.ZeroGrads();
  const StepDiagnostics diag =
      ComputeLoss(inputs, batch, options.transform, &rng,
                  /*compute_grads=*/true);
  params_.Step(options.learning_rate, options.momentum);
  return diag;
}

const Mat& Autoencoder::CrossAttentionKeyWeight() const {
  if (config_.architecture != Architecture::kTinyTransformer) {
    throw std::logic_error(
        "model: cross-attention weights exist only in the transformer");
  }
  return params_.value(internal::TfCrossKeyWeightId(config_));
}

}  // namespace dprw
