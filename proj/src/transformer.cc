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

// Pre-norm transformer encoder/decoder with hand-written backward passes.
// Layout conventions: activations are (positions x width) row-major, linear
// weights are (out x in) applied as y = x * W^T + b, and the encoder output
// stream (without a final norm) is the latent.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "nets.h"

namespace dprw {
namespace internal {
namespace {

constexpr double kLnEps = 1e-5;
constexpr double kNegInf = -1e30;

std::string LayerName(const char* side, int layer, const char* part) {
  return std::string(side) + "." + std::to_string(layer) + "." + part;
}

AttnIds WireAttention(Shaper& shaper, const std::string& prefix, int d) {
  AttnIds ids;
  ids.wq = shaper.Tensor(prefix + ".wq", d, d);
  ids.bq = shaper.Tensor(prefix + ".bq", 1, d);
  ids.wk = shaper.Tensor(prefix + ".wk", d, d);
  ids.bk = shaper.Tensor(prefix + ".bk", 1, d);
  ids.wv = shaper.Tensor(prefix + ".wv", d, d);
  ids.bv = shaper.Tensor(prefix + ".bv", 1, d);
  ids.wo = shaper.Tensor(prefix + ".wo", d, d);
  ids.bo = shaper.Tensor(prefix + ".bo", 1, d);
  return ids;
}

struct LnCache {
  Mat xhat;
  Eigen::VectorXd inv_std;
};

Mat LayerNormForward(const ParameterStore& params, int g_id, int b_id,
                     const Mat& x, LnCache* cache) {
  const Eigen::RowVectorXd gamma = params.value(g_id).row(0);
  const Eigen::RowVectorXd beta = params.value(b_id).row(0);
  Mat xhat(x.rows(), x.cols());
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var =
        (x.row(r).array() - mean).square().sum() / static_cast<double>(x.cols());
    const double inv = 1.0 / std::sqrt(var + kLnEps);
    inv_std(r) = inv;
    xhat.row(r) = (x.row(r).array() - mean) * inv;
  }
  Mat y = xhat;
  y.array().rowwise() *= gamma.array();
  y.rowwise() += beta;
  if (cache != nullptr) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Mat LayerNormBackward(ParameterStore& params, int g_id, int b_id,
                      const LnCache& cache, const Mat& dy,
                      bool compute_grads) {
  const Eigen::RowVectorXd gamma = params.value(g_id).row(0);
  if (compute_grads) {
    params.grad(g_id).row(0) +=
        (dy.array() * cache.xhat.array()).colwise().sum().matrix();
    params.grad(b_id).row(0) += dy.colwise().sum();
  }
  Mat dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const Eigen::ArrayXd dxhat =
        dy.row(r).array().transpose() * gamma.array().transpose();
    const Eigen::ArrayXd xhat = cache.xhat.row(r).array().transpose();
    const double mean_dxhat = dxhat.mean();
    const double mean_dxhat_xhat = (dxhat * xhat).mean();
    dx.row(r) =
        (cache.inv_std(r) * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat))
            .matrix()
            .transpose();
  }
  return dx;
}

struct AttnCache {
  Mat q, k, v;               // (rows x d)
  std::vector<Mat> probs;    // per head, (q_rows x k_rows)
  Mat ctx;                   // (q_rows x d), pre output projection
};

// Attention of `queries_in` over `keys_in` (self-attention when they are the
// same matrix). The caller applies any layer norms beforehand.
Mat AttentionForward(const ParameterStore& params, const AttnIds& ids,
                     int heads, const Mat& queries_in, const Mat& keys_in,
                     bool causal, AttnCache* cache) {
  const Eigen::Index d = queries_in.cols();
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Mat q = LinearForward(params, ids.wq, ids.bq, queries_in);
  Mat k = LinearForward(params, ids.wk, ids.bk, keys_in);
  Mat v = LinearForward(params, ids.wv, ids.bv, keys_in);

  Mat ctx(q.rows(), d);
  std::vector<Mat> probs(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const Mat qh = q.middleCols(h * dh, dh);
    const Mat kh = k.middleCols(h * dh, dh);
    const Mat vh = v.middleCols(h * dh, dh);
    Mat scores = scale * (qh * kh.transpose());
    if (causal) {
      for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        for (Eigen::Index c = r + 1; c < scores.cols(); ++c) {
          scores(r, c) = kNegInf;
        }
      }
    }
    Mat p(scores.rows(), scores.cols());
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
      const double m = scores.row(r).maxCoeff();
      Eigen::ArrayXd e = (scores.row(r).array() - m).exp().transpose();
      p.row(r) = (e / e.sum()).matrix().transpose();
    }
    ctx.middleCols(h * dh, dh) = p * vh;
    probs[static_cast<std::size_t>(h)] = std::move(p);
  }

  Mat out = LinearForward(params, ids.wo, ids.bo, ctx);
  if (cache != nullptr) {
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->probs = std::move(probs);
    cache->ctx = std::move(ctx);
  }
  return out;
}

// Returns d(queries_in); adds d(keys_in) into `dkeys_in`.
Mat AttentionBackward(ParameterStore& params, const AttnIds& ids, int heads,
                      const Mat& queries_in, const Mat& keys_in,
                      const AttnCache& cache, const Mat& dout, Mat& dkeys_in,
                      bool compute_grads) {
  const Eigen::Index d = queries_in.cols();
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  const Mat dctx =
      LinearBackward(params, ids.wo, ids.bo, cache.ctx, dout, compute_grads);

  Mat dq(cache.q.rows(), d), dk(cache.k.rows(), d), dv(cache.v.rows(), d);
  for (int h = 0; h < heads; ++h) {
    const Mat qh = cache.q.middleCols(h * dh, dh);
    const Mat kh = cache.k.middleCols(h * dh, dh);
    const Mat vh = cache.v.middleCols(h * dh, dh);
    const Mat& p = cache.probs[static_cast<std::size_t>(h)];
    const Mat dctx_h = dctx.middleCols(h * dh, dh);

    const Mat dp = dctx_h * vh.transpose();
    dv.middleCols(h * dh, dh) = p.transpose() * dctx_h;

    Mat dscores(p.rows(), p.cols());
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      const double dot = dp.row(r).dot(p.row(r));
      dscores.row(r) =
          (p.row(r).array() * (dp.row(r).array() - dot)).matrix();
    }
    dscores *= scale;
    dq.middleCols(h * dh, dh) = dscores * kh;
    dk.middleCols(h * dh, dh) = dscores.transpose() * qh;
  }

  Mat dqueries =
      LinearBackward(params, ids.wq, ids.bq, queries_in, dq, compute_grads);
  dkeys_in +=
      LinearBackward(params, ids.wk, ids.bk, keys_in, dk, compute_grads);
  dkeys_in +=
      LinearBackward(params, ids.wv, ids.bv, keys_in, dv, compute_grads);
  return dqueries;
}

double Gelu(double x) {
  return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
}

double GeluGrad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf =
      std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

struct FfnCache {
  Mat pre;  // before GELU
};

Mat FfnForward(const ParameterStore& params, int w1, int b1, int w2, int b2,
               const Mat& x, FfnCache* cache) {
  Mat pre = LinearForward(params, w1, b1, x);
  Mat act = pre.unaryExpr([](double v) { return Gelu(v); });
  Mat out = LinearForward(params, w2, b2, act);
  if (cache != nullptr) cache->pre = std::move(pre);
  return out;
}

Mat FfnBackward(ParameterStore& params, int w1, int b1, int w2, int b2,
                const Mat& x, const FfnCache& cache, const Mat& dout,
                bool compute_grads) {
  const Mat act = cache.pre.unaryExpr([](double v) { return Gelu(v); });
  const Mat dact =
      LinearBackward(params, w2, b2, act, dout, compute_grads);
  const Mat dpre = dact.cwiseProduct(
      cache.pre.unaryExpr([](double v) { return GeluGrad(v); }));
  return LinearBackward(params, w1, b1, x, dpre, compute_grads);
}

struct EncLayerCache {
  Mat x_in;
  LnCache ln1;
  Mat ln1_out;
  AttnCache attn;
  Mat x_mid;
  LnCache ln2;
  Mat ln2_out;
  FfnCache ffn;
};

struct DecLayerCache {
  Mat x_in;
  LnCache ln1;
  Mat ln1_out;
  AttnCache self_attn;
  Mat x_after_self;
  LnCache lnc;
  Mat lnc_out;
  AttnCache cross_attn;
  Mat x_after_cross;
  LnCache ln2;
  Mat ln2_out;
  FfnCache ffn;
};

Mat EmbedTokens(const ParameterStore& params, const ModelConfig& config,
                int embed_id, int pos_id, const std::vector<int>& ids) {
  const Mat& embed = params.value(embed_id);
  const Mat& pos = params.value(pos_id);
  Mat x(static_cast<Eigen::Index>(ids.size()), embed.cols());
  for (std::size_t t = 0; t < ids.size(); ++t) {
    const int id = ids[t];
    if (id < 0 || id >= config.vocab_size) {
      throw std::invalid_argument("model: token id out of vocabulary");
    }
    x.row(static_cast<Eigen::Index>(t)) =
        embed.row(id) + pos.row(static_cast<Eigen::Index>(t));
  }
  return x;
}

Mat EncoderForward(const ParameterStore& params, const ModelConfig& config,
                   const TransformerIds& ids, const std::vector<int>& tokens,
                   std::vector<EncLayerCache>* caches) {
  Mat x = EmbedTokens(params, config, ids.tok_embed, ids.enc_pos, tokens);
  for (std::size_t layer = 0; layer < ids.enc.size(); ++layer) {
    const TfEncLayerIds& lids = ids.enc[layer];
    EncLayerCache* cache =
        caches != nullptr ? &(*caches)[layer] : nullptr;
    if (cache != nullptr) cache->x_in = x;
    Mat ln1 = LayerNormForward(params, lids.ln1_g, lids.ln1_b, x,
                               cache != nullptr ? &cache->ln1 : nullptr);
    Mat attn = AttentionForward(params, lids.attn, config.heads, ln1, ln1,
                                /*causal=*/false,
                                cache != nullptr ? &cache->attn : nullptr);
    if (cache != nullptr) cache->ln1_out = ln1;
    x += attn;
    if (cache != nullptr) cache->x_mid = x;
    Mat ln2 = LayerNormForward(params, lids.ln2_g, lids.ln2_b, x,
                               cache != nullptr ? &cache->ln2 : nullptr);
    Mat ffn = FfnForward(params, lids.w1, lids.b1, lids.w2, lids.b2, ln2,
                         cache != nullptr ? &cache->ffn : nullptr);
    if (cache != nullptr) cache->ln2_out = ln2;
    x += ffn;
  }
  return x;
}

void EncoderBackward(ParameterStore& params, const ModelConfig& config,
                     const TransformerIds& ids,
                     const std::vector<int>& tokens,
                     std::vector<EncLayerCache>& caches, Mat dx) {
  for (std::size_t layer = ids.enc.size(); layer-- > 0;) {
    const TfEncLayerIds& lids = ids.enc[layer];
    EncLayerCache& cache = caches[layer];

    const Mat dffn_out = dx;
    const Mat dln2_out = FfnBackward(params, lids.w1, lids.b1, lids.w2,
                                     lids.b2, cache.ln2_out, cache.ffn,
                                     dffn_out, /*compute_grads=*/true);
    dx += LayerNormBackward(params, lids.ln2_g, lids.ln2_b, cache.ln2,
                            dln2_out, /*compute_grads=*/true);

    const Mat dattn_out = dx;
    Mat dkeys = Mat::Zero(cache.ln1_out.rows(), cache.ln1_out.cols());
    Mat dln1_out = AttentionBackward(params, lids.attn, config.heads,
                                     cache.ln1_out, cache.ln1_out, cache.attn,
                                     dattn_out, dkeys,
                                     /*compute_grads=*/true);
    dln1_out += dkeys;
    dx += LayerNormBackward(params, lids.ln1_g, lids.ln1_b, cache.ln1,
                            dln1_out, /*compute_grads=*/true);
  }
  // Embedding scatter.
  Mat& dembed = params.grad(ids.tok_embed);
  Mat& dpos = params.grad(ids.enc_pos);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    dembed.row(tokens[t]) += dx.row(static_cast<Eigen::Index>(t));
    dpos.row(static_cast<Eigen::Index>(t)) +=
        dx.row(static_cast<Eigen::Index>(t));
  }
}

Mat DecoderForward(const ParameterStore& params, const ModelConfig& config,
                   const TransformerIds& ids, const std::vector<int>& tokens,
                   const Mat& latent, std::vector<DecLayerCache>* caches,
                   LnCache* lnf_cache) {
  Mat x = EmbedTokens(params, config, ids.tok_embed, ids.dec_pos, tokens);
  for (std::size_t layer = 0; layer < ids.dec.size(); ++layer) {
    const TfDecLayerIds& lids = ids.dec[layer];
    DecLayerCache* cache = caches != nullptr ? &(*caches)[layer] : nullptr;
    if (cache != nullptr) cache->x_in = x;

    Mat ln1 = LayerNormForward(params, lids.ln1_g, lids.ln1_b, x,
                               cache != nullptr ? &cache->ln1 : nullptr);
    Mat self = AttentionForward(params, lids.self_attn, config.heads, ln1,
                                ln1, /*causal=*/true,
                                cache != nullptr ? &cache->self_attn : nullptr);
    if (cache != nullptr) cache->ln1_out = ln1;
    x += self;
    if (cache != nullptr) cache->x_after_self = x;

    Mat lnc = LayerNormForward(params, lids.lnc_g, lids.lnc_b, x,
                               cache != nullptr ? &cache->lnc : nullptr);
    Mat cross = AttentionForward(
        params, lids.cross_attn, config.heads, lnc, latent,
        /*causal=*/false, cache != nullptr ? &cache->cross_attn : nullptr);
    if (cache != nullptr) cache->lnc_out = lnc;
    x += cross;
    if (cache != nullptr) cache->x_after_cross = x;

    Mat ln2 = LayerNormForward(params, lids.ln2_g, lids.ln2_b, x,
                               cache != nullptr ? &cache->ln2 : nullptr);
    Mat ffn = FfnForward(params, lids.w1, lids.b1, lids.w2, lids.b2, ln2,
                         cache != nullptr ? &cache->ffn : nullptr);
    if (cache != nullptr) cache->ln2_out = ln2;
    x += ffn;
  }
  return LayerNormForward(params, ids.lnf_g, ids.lnf_b, x, lnf_cache);
}

// Returns the latent gradient.
Mat DecoderBackward(ParameterStore& params, const ModelConfig& config,
                    const TransformerIds& ids, const std::vector<int>& tokens,
                    const Mat& latent, std::vector<DecLayerCache>& caches,
                    const LnCache& lnf_cache, const Mat& dstream_out) {
  Mat dx = LayerNormBackward(params, ids.lnf_g, ids.lnf_b, lnf_cache,
                             dstream_out, /*compute_grads=*/true);
  Mat dlatent = Mat::Zero(latent.rows(), latent.cols());
  for (std::size_t layer = ids.dec.size(); layer-- > 0;) {
    const TfDecLayerIds& lids = ids.dec[layer];
    DecLayerCache& cache = caches[layer];

    const Mat dln2_out = FfnBackward(params, lids.w1, lids.b1, lids.w2,
                                     lids.b2, cache.ln2_out, cache.ffn, dx,
                                     /*compute_grads=*/true);
    dx += LayerNormBackward(params, lids.ln2_g, lids.ln2_b, cache.ln2,
                            dln2_out, /*compute_grads=*/true);

    Mat dlnc_out = AttentionBackward(params, lids.cross_attn, config.heads,
                                     cache.lnc_out, latent, cache.cross_attn,
                                     dx, dlatent, /*compute_grads=*/true);
    dx += LayerNormBackward(params, lids.lnc_g, lids.lnc_b, cache.lnc,
                            dlnc_out, /*compute_grads=*/true);

    Mat dkeys = Mat::Zero(cache.ln1_out.rows(), cache.ln1_out.cols());
    Mat dln1_out = AttentionBackward(params, lids.self_attn, config.heads,
                                     cache.ln1_out, cache.ln1_out,
                                     cache.self_attn, dx, dkeys,
                                     /*compute_grads=*/true);
    dln1_out += dkeys;
    dx += LayerNormBackward(params, lids.ln1_g, lids.ln1_b, cache.ln1,
                            dln1_out, /*compute_grads=*/true);
  }
  Mat& dembed = params.grad(ids.tok_embed);
  Mat& dpos = params.grad(ids.dec_pos);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    dembed.row(tokens[t]) += dx.row(static_cast<Eigen::Index>(t));
    dpos.row(static_cast<Eigen::Index>(t)) +=
        dx.row(static_cast<Eigen::Index>(t));
  }
  return dlatent;
}

std::vector<int> ShiftRight(const std::vector<int>& target) {
  // Decoder input: position t sees target[t]; position t predicts
  // target[t+1]. The sequence already starts with <bos>.
  return std::vector<int>(target.begin(), target.end() - 1);
}

}  // namespace

TransformerIds TransformerIds::Wire(const ModelConfig& config,
                                    Shaper& shaper) {
  const int d = config.embed_dim;
  TransformerIds ids;
  ids.tok_embed = shaper.Tensor("tok_embed", config.vocab_size, d);
  ids.enc_pos = shaper.Tensor("enc_pos", config.max_len, d);
  ids.dec_pos = shaper.Tensor("dec_pos", config.max_len, d);
  for (int layer = 0; layer < config.layers; ++layer) {
    TfEncLayerIds lids;
    lids.ln1_g = shaper.Tensor(LayerName("enc", layer, "ln1.g"), 1, d);
    lids.ln1_b = shaper.Tensor(LayerName("enc", layer, "ln1.b"), 1, d);
    lids.attn = WireAttention(shaper, LayerName("enc", layer, "attn"), d);
    lids.ln2_g = shaper.Tensor(LayerName("enc", layer, "ln2.g"), 1, d);
    lids.ln2_b = shaper.Tensor(LayerName("enc", layer, "ln2.b"), 1, d);
    lids.w1 = shaper.Tensor(LayerName("enc", layer, "ffn.w1"), config.hidden, d);
    lids.b1 = shaper.Tensor(LayerName("enc", layer, "ffn.b1"), 1, config.hidden);
    lids.w2 = shaper.Tensor(LayerName("enc", layer, "ffn.w2"), d, config.hidden);
    lids.b2 = shaper.Tensor(LayerName("enc", layer, "ffn.b2"), 1, d);
    ids.enc.push_back(lids);
  }
  for (int layer = 0; layer < config.layers; ++layer) {
    TfDecLayerIds lids;
    lids.ln1_g = shaper.Tensor(LayerName("dec", layer, "ln1.g"), 1, d);
    lids.ln1_b = shaper.Tensor(LayerName("dec", layer, "ln1.b"), 1, d);
    lids.self_attn =
        WireAttention(shaper, LayerName("dec", layer, "self"), d);
    lids.lnc_g = shaper.Tensor(LayerName("dec", layer, "lnc.g"), 1, d);
    lids.lnc_b = shaper.Tensor(LayerName("dec", layer, "lnc.b"), 1, d);
    lids.cross_attn =
        WireAttention(shaper, LayerName("dec", layer, "cross"), d);
    lids.ln2_g = shaper.Tensor(LayerName("dec", layer, "ln2.g"), 1, d);
    lids.ln2_b = shaper.Tensor(LayerName("dec", layer, "ln2.b"), 1, d);
    lids.w1 = shaper.Tensor(LayerName("dec", layer, "ffn.w1"), config.hidden, d);
    lids.b1 = shaper.Tensor(LayerName("dec", layer, "ffn.b1"), 1, config.hidden);
    lids.w2 = shaper.Tensor(LayerName("dec", layer, "ffn.w2"), d, config.hidden);
    lids.b2 = shaper.Tensor(LayerName("dec", layer, "ffn.b2"), 1, d);
    ids.dec.push_back(lids);
  }
  ids.lnf_g = shaper.Tensor("dec.lnf.g", 1, d);
  ids.lnf_b = shaper.Tensor("dec.lnf.b", 1, d);
  ids.out_w = shaper.Tensor("out.w", config.vocab_size, d);
  ids.out_b = shaper.Tensor("out.b", 1, config.vocab_size);
  return ids;
}

Mat LinearForward(const ParameterStore& params, int w_id, int b_id,
                  const Mat& x) {
  Mat y = x * params.value(w_id).transpose();
  y.rowwise() += params.value(b_id).row(0);
  return y;
}

Mat LinearBackward(ParameterStore& params, int w_id, int b_id, const Mat& x,
                   const Mat& dy, bool compute_grads) {
  if (compute_grads) {
    params.grad(w_id) += dy.transpose() * x;
    params.grad(b_id).row(0) += dy.colwise().sum();
  }
  return dy * params.value(w_id);
}

Eigen::RowVectorXd LogSoftmaxRow(const Eigen::RowVectorXd& logits) {
  const double m = logits.maxCoeff();
  const double lse = std::log((logits.array() - m).exp().sum()) + m;
  return logits.array() - lse;
}

Mat TfEncodeStates(const ParameterStore& params, const ModelConfig& config,
                   const std::vector<int>& ids) {
  Shaper shaper;
  const TransformerIds net = TransformerIds::Wire(config, shaper);
  return EncoderForward(params, config, net, ids, nullptr);
}

int TfCrossKeyWeightId(const ModelConfig& config) {
  Shaper shaper;
  const TransformerIds net = TransformerIds::Wire(config, shaper);
  return net.dec[0].cross_attn.wk;
}

StepDiagnostics TfComputeLoss(ParameterStore& params,
                              const ModelConfig& config,
                              const std::vector<TokenSequence>& inputs,
                              const std::vector<TokenSequence>& targets,
                              const LatentTransform& transform,
                              RngStream* noise_rng, bool compute_grads) {
  Shaper shaper;
  const TransformerIds net = TransformerIds::Wire(config, shaper);
  const Eigen::Index l = config.max_len;
  const double norm = 1.0 / (static_cast<double>(inputs.size()) *
                             static_cast<double>(l - 1));

  StepDiagnostics diag;
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    std::vector<EncLayerCache> enc_caches(
        static_cast<std::size_t>(config.layers));
    const Mat states = EncoderForward(params, config, net, inputs[s].ids,
                                      compute_grads ? &enc_caches : nullptr);

    TransformRecord record;
    const Mat latent = ApplyLatentTransform(states, transform, config,
                                            noise_rng, &record);
    diag.latent_abs_max =
        std::max(diag.latent_abs_max, record.post_clip_abs_max);
    diag.latent_norm_max =
        std::max(diag.latent_norm_max, record.post_clip_norm);
    if (transform.mask != nullptr) {
      for (int channel : transform.mask->pruned) {
        diag.masked_abs_max = std::max(
            diag.masked_abs_max, latent.col(channel).cwiseAbs().maxCoeff());
      }
    }

    const std::vector<int> dec_in = ShiftRight(targets[s].ids);
    std::vector<DecLayerCache> dec_caches(
        static_cast<std::size_t>(config.layers));
    LnCache lnf_cache;
    const Mat stream =
        DecoderForward(params, config, net, dec_in, latent,
                       compute_grads ? &dec_caches : nullptr,
                       compute_grads ? &lnf_cache : nullptr);
    const Mat logits = LinearForward(params, net.out_w, net.out_b, stream);

    Mat dlogits;
    if (compute_grads) dlogits = Mat::Zero(logits.rows(), logits.cols());
    for (Eigen::Index t = 0; t < l - 1; ++t) {
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
    Mat dlatent = DecoderBackward(params, config, net, dec_in, latent,
                                  dec_caches, lnf_cache, dstream);
    Mat dstates = LatentTransformBackward(dlatent, transform, record);
    EncoderBackward(params, config, net, inputs[s].ids, enc_caches,
                    std::move(dstates));
  }
  return diag;
}

Eigen::RowVectorXd TfNextLogProbs(const ParameterStore& params,
                                  const ModelConfig& config, const Mat& latent,
                                  const std::vector<int>& prefix) {
  Shaper shaper;
  const TransformerIds net = TransformerIds::Wire(config, shaper);
  const Mat stream =
      DecoderForward(params, config, net, prefix, latent, nullptr, nullptr);
  const Eigen::RowVectorXd last = stream.row(stream.rows() - 1);
  Eigen::RowVectorXd logits =
      last * params.value(net.out_w).transpose() + params.value(net.out_b).row(0);
  return LogSoftmaxRow(logits);
}

namespace {

// Attention of one query row over cached key/value rows.
Eigen::RowVectorXd AttendRow(const Eigen::RowVectorXd& q, const Mat& k,
                             const Mat& v, int heads) {
  const Eigen::Index d = q.size();
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Eigen::RowVectorXd ctx(d);
  for (int h = 0; h < heads; ++h) {
    const Eigen::RowVectorXd qh = q.segment(h * dh, dh);
    const Mat kh = k.middleCols(h * dh, dh);
    const Mat vh = v.middleCols(h * dh, dh);
    Eigen::RowVectorXd scores = scale * (qh * kh.transpose());
    const double m = scores.maxCoeff();
    Eigen::RowVectorXd p = (scores.array() - m).exp();
    p /= p.sum();
    ctx.segment(h * dh, dh) = p * vh;
  }
  return ctx;
}

void AppendRow(Mat& cache, const Mat& row) {
  cache.conservativeResize(cache.rows() + 1, Eigen::NoChange);
  cache.row(cache.rows() - 1) = row.row(0);
}

}  // namespace

TfCrossContext TfMakeCrossContext(const ParameterStore& params,
                                  const ModelConfig& config,
                                  const Mat& latent) {
  Shaper shaper;
  const TransformerIds net = TransformerIds::Wire(config, shaper);
  TfCrossContext ctx;
  ctx.k.reserve(net.dec.size());
  ctx.v.reserve(net.dec.size());
  for (const TfDecLayerIds& lids : net.dec) {
    ctx.k.push_back(LinearForward(params, lids.cross_attn.wk,
                                  lids.cross_attn.bk, latent));
    ctx.v.push_back(LinearForward(params, lids.cross_attn.wv,
                                  lids.cross_attn.bv, latent));
  }
  return ctx;
}

TfIncState TfInitState(const ModelConfig& config) {
  TfIncState state;
  state.self_k.assign(static_cast<std::size_t>(config.layers),
                      Mat(0, config.embed_dim));
  state.self_v.assign(static_cast<std::size_t>(config.layers),
                      Mat(0, config.embed_dim));
  return state;
}

Eigen::RowVectorXd TfAdvance(const ParameterStore& params,
                             const ModelConfig& config,
                             const TfCrossContext& cross, TfIncState& state,
                             int token) {
  Shaper shaper;
  const TransformerIds net = TransformerIds::Wire(config, shaper);
  if (state.length >= config.max_len) {
    throw std::logic_error("decode: advanced past max_len");
  }
  if (token < 0 || token >= config.vocab_size) {
    throw std::invalid_argument("model: token id out of vocabulary");
  }
  Mat x(1, config.embed_dim);
  x.row(0) = params.value(net.tok_embed).row(token) +
             params.value(net.dec_pos).row(state.length);
  for (std::size_t layer = 0; layer < net.dec.size(); ++layer) {
    const TfDecLayerIds& lids = net.dec[layer];
    const Mat ln1 = LayerNormForward(params, lids.ln1_g, lids.ln1_b, x,
                                     nullptr);
    AppendRow(state.self_k[layer],
              LinearForward(params, lids.self_attn.wk, lids.self_attn.bk,
                            ln1));
    AppendRow(state.self_v[layer],
              LinearForward(params, lids.self_attn.wv, lids.self_attn.bv,
                            ln1));
    const Mat q =
        LinearForward(params, lids.self_attn.wq, lids.self_attn.bq, ln1);
    Mat ctx(1, config.embed_dim);
    ctx.row(0) = AttendRow(q.row(0), state.self_k[layer],
                           state.self_v[layer], config.heads);
    x += LinearForward(params, lids.self_attn.wo, lids.self_attn.bo, ctx);

    const Mat lnc = LayerNormForward(params, lids.lnc_g, lids.lnc_b, x,
                                     nullptr);
    const Mat qc =
        LinearForward(params, lids.cross_attn.wq, lids.cross_attn.bq, lnc);
    Mat cctx(1, config.embed_dim);
    cctx.row(0) =
        AttendRow(qc.row(0), cross.k[layer], cross.v[layer], config.heads);
    x += LinearForward(params, lids.cross_attn.wo, lids.cross_attn.bo, cctx);

    const Mat ln2 = LayerNormForward(params, lids.ln2_g, lids.ln2_b, x,
                                     nullptr);
    x += FfnForward(params, lids.w1, lids.b1, lids.w2, lids.b2, ln2, nullptr);
  }
  const Mat lnf = LayerNormForward(params, net.lnf_g, net.lnf_b, x, nullptr);
  Eigen::RowVectorXd logits = lnf.row(0) * params.value(net.out_w).transpose() +
                              params.value(net.out_b).row(0);
  ++state.length;
  return LogSoftmaxRow(logits);
}

}  // namespace internal
}  // namespace dprw
