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

// Single-layer unidirectional LSTM encoder/decoder. The latent is the
// concatenated final hidden and cell state of the encoder (1 x 2*hidden);
// the decoder starts from that state split back into (h0, c0). Gate order
// in the stacked weight matrices is [input, forget, candidate, output].
// The encoder reads the source right-to-left: with no attention, the final
// state then sits closest to the tokens the decoder must emit first, which
// substantially shortens the worst dependency span.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "nets.h"

namespace dprw {
namespace internal {
namespace {

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct CellState {
  Eigen::RowVectorXd h, c;
};

struct CellCache {
  Eigen::RowVectorXd x, h_prev, c_prev;
  Eigen::RowVectorXd i, f, g, o, c, tanh_c;
};

CellState LstmStep(const ParameterStore& params, int wx, int wh, int b,
                   const Eigen::RowVectorXd& x, const CellState& prev,
                   CellCache* cache) {
  const Eigen::Index hidden = prev.h.size();
  Eigen::RowVectorXd gates = x * params.value(wx).transpose() +
                             prev.h * params.value(wh).transpose() +
                             params.value(b).row(0);
  Eigen::RowVectorXd i(hidden), f(hidden), g(hidden), o(hidden);
  for (Eigen::Index j = 0; j < hidden; ++j) {
    i(j) = Sigmoid(gates(j));
    f(j) = Sigmoid(gates(hidden + j));
    g(j) = std::tanh(gates(2 * hidden + j));
    o(j) = Sigmoid(gates(3 * hidden + j));
  }
  CellState next;
  next.c = f.cwiseProduct(prev.c) + i.cwiseProduct(g);
  const Eigen::RowVectorXd tanh_c =
      next.c.unaryExpr([](double v) { return std::tanh(v); });
  next.h = o.cwiseProduct(tanh_c);
  if (cache != nullptr) {
    cache->x = x;
    cache->h_prev = prev.h;
    cache->c_prev = prev.c;
    cache->i = i;
    cache->f = f;
    cache->g = g;
    cache->o = o;
    cache->c = next.c;
    cache->tanh_c = tanh_c;
  }
  return next;
}

// Backward through one cell. dh/dc are the incoming state gradients; returns
// gradients for (x, h_prev, c_prev) and accumulates parameter gradients.
struct CellGrads {
  Eigen::RowVectorXd dx, dh_prev, dc_prev;
};

CellGrads LstmStepBackward(ParameterStore& params, int wx, int wh, int b,
                           const CellCache& cache,
                           const Eigen::RowVectorXd& dh,
                           const Eigen::RowVectorXd& dc_in) {
  const Eigen::Index hidden = dh.size();
  const Eigen::RowVectorXd d_o = dh.cwiseProduct(cache.tanh_c);
  Eigen::RowVectorXd dc = dc_in;
  dc += dh.cwiseProduct(cache.o)
            .cwiseProduct((1.0 - cache.tanh_c.array().square()).matrix());

  const Eigen::RowVectorXd d_i = dc.cwiseProduct(cache.g);
  const Eigen::RowVectorXd d_g = dc.cwiseProduct(cache.i);
  const Eigen::RowVectorXd d_f = dc.cwiseProduct(cache.c_prev);
  const Eigen::RowVectorXd dc_prev = dc.cwiseProduct(cache.f);

  Eigen::RowVectorXd da(4 * hidden);
  for (Eigen::Index j = 0; j < hidden; ++j) {
    da(j) = d_i(j) * cache.i(j) * (1.0 - cache.i(j));
    da(hidden + j) = d_f(j) * cache.f(j) * (1.0 - cache.f(j));
    da(2 * hidden + j) = d_g(j) * (1.0 - cache.g(j) * cache.g(j));
    da(3 * hidden + j) = d_o(j) * cache.o(j) * (1.0 - cache.o(j));
  }

  params.grad(wx) += da.transpose() * cache.x;
  params.grad(wh) += da.transpose() * cache.h_prev;
  params.grad(b).row(0) += da;

  CellGrads grads;
  grads.dx = da * params.value(wx);
  grads.dh_prev = da * params.value(wh);
  grads.dc_prev = dc_prev;
  return grads;
}

Eigen::RowVectorXd EmbedToken(const ParameterStore& params,
                              const ModelConfig& config, int embed_id,
                              int token) {
  if (token < 0 || token >= config.vocab_size) {
    throw std::invalid_argument("model: token id out of vocabulary");
  }
  return params.value(embed_id).row(token);
}

// Number of real tokens before trailing padding. Padding only ever follows
// the end token, so the first pad id marks the sequence length; running the
// recurrent cells past it would dilute the final-state latent.
int SeqLen(const std::vector<int>& ids) {
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] == Vocab::kPadId) return static_cast<int>(t);
  }
  return static_cast<int>(ids.size());
}

}  // namespace

RecurrentIds RecurrentIds::Wire(const ModelConfig& config, Shaper& shaper) {
  const int e = config.embed_dim;
  const int h = config.hidden;
  RecurrentIds ids;
  ids.tok_embed = shaper.Tensor("tok_embed", config.vocab_size, e);
  ids.enc_wx = shaper.Tensor("enc.wx", 4 * h, e);
  ids.enc_wh = shaper.Tensor("enc.wh", 4 * h, h);
  ids.enc_b = shaper.Tensor("enc.b", 1, 4 * h);
  ids.dec_wx = shaper.Tensor("dec.wx", 4 * h, e);
  ids.dec_wh = shaper.Tensor("dec.wh", 4 * h, h);
  ids.dec_b = shaper.Tensor("dec.b", 1, 4 * h);
  ids.out_w = shaper.Tensor("out.w", config.vocab_size, h);
  ids.out_b = shaper.Tensor("out.b", 1, config.vocab_size);
  return ids;
}

Mat RnnEncodeStates(const ParameterStore& params, const ModelConfig& config,
                    const std::vector<int>& ids) {
  Shaper shaper;
  const RecurrentIds net = RecurrentIds::Wire(config, shaper);
  CellState state;
  state.h = Eigen::RowVectorXd::Zero(config.hidden);
  state.c = Eigen::RowVectorXd::Zero(config.hidden);
  const int len = SeqLen(ids);
  for (int t = len - 1; t >= 0; --t) {
    const Eigen::RowVectorXd x = EmbedToken(params, config, net.tok_embed,
                                            ids[static_cast<std::size_t>(t)]);
    state = LstmStep(params, net.enc_wx, net.enc_wh, net.enc_b, x, state,
                     nullptr);
  }
  Mat latent(1, 2 * config.hidden);
  latent.row(0).head(config.hidden) = state.h;
  latent.row(0).tail(config.hidden) = state.c;
  return latent;
}

StepDiagnostics RnnComputeLoss(ParameterStore& params,
                               const ModelConfig& config,
                               const std::vector<TokenSequence>& inputs,
                               const std::vector<TokenSequence>& targets,
                               const LatentTransform& transform,
                               RngStream* noise_rng, bool compute_grads) {
  Shaper shaper;
  const RecurrentIds net = RecurrentIds::Wire(config, shaper);
  const int l = config.max_len;
  const int hidden = config.hidden;
  const double norm = 1.0 / (static_cast<double>(inputs.size()) *
                             static_cast<double>(l - 1));

  StepDiagnostics diag;
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    // Encoder over the real tokens only, read right-to-left, caching by
    // read step when gradients are needed.
    const int in_len = SeqLen(inputs[s].ids);
    std::vector<CellCache> enc_caches(
        compute_grads ? static_cast<std::size_t>(in_len) : 0);
    CellState state;
    state.h = Eigen::RowVectorXd::Zero(hidden);
    state.c = Eigen::RowVectorXd::Zero(hidden);
    for (int k = 0; k < in_len; ++k) {
      const int pos = in_len - 1 - k;
      const int token = inputs[s].ids[static_cast<std::size_t>(pos)];
      const Eigen::RowVectorXd x =
          EmbedToken(params, config, net.tok_embed, token);
      state = LstmStep(params, net.enc_wx, net.enc_wh, net.enc_b, x, state,
                       compute_grads ? &enc_caches[static_cast<std::size_t>(k)]
                                     : nullptr);
    }
    Mat states(1, 2 * hidden);
    states.row(0).head(hidden) = state.h;
    states.row(0).tail(hidden) = state.c;

    TransformRecord record;
    const Mat latent =
        ApplyLatentTransform(states, transform, config, noise_rng, &record);
    diag.latent_abs_max =
        std::max(diag.latent_abs_max, record.post_clip_abs_max);
    diag.latent_norm_max =
        std::max(diag.latent_norm_max, record.post_clip_norm);

    // Decoder from the transformed state, teacher-forced up to the end
    // token; positions past it are padding and carry no loss.
    const int dec_steps = SeqLen(targets[s].ids) - 1;
    CellState dec_state;
    dec_state.h = latent.row(0).head(hidden);
    dec_state.c = latent.row(0).tail(hidden);
    std::vector<CellCache> dec_caches(
        compute_grads ? static_cast<std::size_t>(dec_steps) : 0);
    std::vector<Eigen::RowVectorXd> dec_h(static_cast<std::size_t>(dec_steps));
    for (int t = 0; t < dec_steps; ++t) {
      const int token = targets[s].ids[static_cast<std::size_t>(t)];
      const Eigen::RowVectorXd x =
          EmbedToken(params, config, net.tok_embed, token);
      dec_state = LstmStep(params, net.dec_wx, net.dec_wh, net.dec_b, x,
                           dec_state,
                           compute_grads
                               ? &dec_caches[static_cast<std::size_t>(t)]
                               : nullptr);
      dec_h[static_cast<std::size_t>(t)] = dec_state.h;
    }

    Mat stream(dec_steps, hidden);
    for (int t = 0; t < dec_steps; ++t) {
      stream.row(t) = dec_h[static_cast<std::size_t>(t)];
    }
    const Mat logits = LinearForward(params, net.out_w, net.out_b, stream);

    Mat dlogits;
    if (compute_grads) dlogits = Mat::Zero(logits.rows(), logits.cols());
    for (int t = 0; t < dec_steps; ++t) {
      const int gold = targets[s].ids[static_cast<std::size_t>(t + 1)];
      const Eigen::RowVectorXd logp = LogSoftmaxRow(logits.row(t));
      diag.loss -= norm * logp(gold);
      if (compute_grads) {
        dlogits.row(t) = norm * logp.array().exp().matrix();
        dlogits(t, gold) -= norm;
      }
    }
    if (!compute_grads) continue;

    const Mat dstream = LinearBackward(params, net.out_w, net.out_b, stream,
                                       dlogits, /*compute_grads=*/true);

    Mat& dembed = params.grad(net.tok_embed);
    Eigen::RowVectorXd dh = Eigen::RowVectorXd::Zero(hidden);
    Eigen::RowVectorXd dc = Eigen::RowVectorXd::Zero(hidden);
    for (int t = dec_steps - 1; t >= 0; --t) {
      dh += dstream.row(t);
      const CellGrads grads = LstmStepBackward(
          params, net.dec_wx, net.dec_wh, net.dec_b,
          dec_caches[static_cast<std::size_t>(t)], dh, dc);
      dembed.row(targets[s].ids[static_cast<std::size_t>(t)]) += grads.dx;
      dh = grads.dh_prev;
      dc = grads.dc_prev;
    }

    Mat dlatent = Mat::Zero(1, 2 * hidden);
    dlatent.row(0).head(hidden) = dh;
    dlatent.row(0).tail(hidden) = dc;
    const Mat dstates = LatentTransformBackward(dlatent, transform, record);

    Eigen::RowVectorXd enc_dh = dstates.row(0).head(hidden);
    Eigen::RowVectorXd enc_dc = dstates.row(0).tail(hidden);
    for (int k = in_len - 1; k >= 0; --k) {
      const int pos = in_len - 1 - k;
      const CellGrads grads = LstmStepBackward(
          params, net.enc_wx, net.enc_wh, net.enc_b,
          enc_caches[static_cast<std::size_t>(k)], enc_dh, enc_dc);
      dembed.row(inputs[s].ids[static_cast<std::size_t>(pos)]) += grads.dx;
      enc_dh = grads.dh_prev;
      enc_dc = grads.dc_prev;
    }
  }
  return diag;
}

Eigen::RowVectorXd RnnNextLogProbs(const ParameterStore& params,
                                   const ModelConfig& config,
                                   const Mat& latent,
                                   const std::vector<int>& prefix) {
  Shaper shaper;
  const RecurrentIds net = RecurrentIds::Wire(config, shaper);
  const int hidden = config.hidden;
  CellState state;
  state.h = latent.row(0).head(hidden);
  state.c = latent.row(0).tail(hidden);
  for (int token : prefix) {
    const Eigen::RowVectorXd x =
        EmbedToken(params, config, net.tok_embed, token);
    state = LstmStep(params, net.dec_wx, net.dec_wh, net.dec_b, x, state,
                     nullptr);
  }
  Eigen::RowVectorXd logits = state.h * params.value(net.out_w).transpose() +
                              params.value(net.out_b).row(0);
  return LogSoftmaxRow(logits);
}

RnnIncState RnnInitState(const ModelConfig& config, const Mat& latent) {
  RnnIncState state;
  state.h = latent.row(0).head(config.hidden);
  state.c = latent.row(0).tail(config.hidden);
  return state;
}

Eigen::RowVectorXd RnnAdvance(const ParameterStore& params,
                              const ModelConfig& config, RnnIncState& state,
                              int token) {
  Shaper shaper;
  const RecurrentIds net = RecurrentIds::Wire(config, shaper);
  const Eigen::RowVectorXd x =
      EmbedToken(params, config, net.tok_embed, token);
  CellState cell;
  cell.h = state.h;
  cell.c = state.c;
  cell = LstmStep(params, net.dec_wx, net.dec_wh, net.dec_b, x, cell,
                  nullptr);
  state.h = cell.h;
  state.c = cell.c;
  Eigen::RowVectorXd logits = state.h * params.value(net.out_w).transpose() +
                              params.value(net.out_b).row(0);
  return LogSoftmaxRow(logits);
}

}  // namespace internal
}  // namespace dprw
