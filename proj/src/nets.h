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

// Internal wiring of the two architectures. Tensor ids equal creation order,
// so the same Wire() call either registers tensors (when `add_to` is set) or
// just recounts them for an existing store.

#ifndef DPRW_SRC_NETS_H_
#define DPRW_SRC_NETS_H_

#include <string>
#include <vector>

#include "dprw/model.h"

namespace dprw {
namespace internal {

struct Shaper {
  ParameterStore* add_to = nullptr;
  int next = 0;

  int Tensor(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    if (add_to != nullptr) return add_to->Add(name, rows, cols);
    return next++;
  }
};

struct AttnIds {
  int wq, bq, wk, bk, wv, bv, wo, bo;
};

struct TfEncLayerIds {
  int ln1_g, ln1_b;
  AttnIds attn;
  int ln2_g, ln2_b;
  int w1, b1, w2, b2;
};

struct TfDecLayerIds {
  int ln1_g, ln1_b;
  AttnIds self_attn;
  int lnc_g, lnc_b;
  AttnIds cross_attn;
  int ln2_g, ln2_b;
  int w1, b1, w2, b2;
};

struct TransformerIds {
  int tok_embed, enc_pos, dec_pos;
  std::vector<TfEncLayerIds> enc;
  std::vector<TfDecLayerIds> dec;
  int lnf_g, lnf_b;
  int out_w, out_b;

  static TransformerIds Wire(const ModelConfig& config, Shaper& shaper);
};

struct RecurrentIds {
  int tok_embed;
  int enc_wx, enc_wh, enc_b;
  int dec_wx, dec_wh, dec_b;
  int out_w, out_b;

  static RecurrentIds Wire(const ModelConfig& config, Shaper& shaper);
};

// Architecture entry points used by Autoencoder.
Mat TfEncodeStates(const ParameterStore& params, const ModelConfig& config,
                   const std::vector<int>& ids);
StepDiagnostics TfComputeLoss(ParameterStore& params,
                              const ModelConfig& config,
                              const std::vector<TokenSequence>& inputs,
                              const std::vector<TokenSequence>& targets,
                              const LatentTransform& transform,
                              RngStream* noise_rng, bool compute_grads);
// Next-token log-probabilities given the decoded prefix (starting at <bos>)
// and the transformed latent.
Eigen::RowVectorXd TfNextLogProbs(const ParameterStore& params,
                                  const ModelConfig& config, const Mat& latent,
                                  const std::vector<int>& prefix);
int TfCrossKeyWeightId(const ModelConfig& config);

Mat RnnEncodeStates(const ParameterStore& params, const ModelConfig& config,
                    const std::vector<int>& ids);
StepDiagnostics RnnComputeLoss(ParameterStore& params,
                               const ModelConfig& config,
                               const std::vector<TokenSequence>& inputs,
                               const std::vector<TokenSequence>& targets,
                               const LatentTransform& transform,
                               RngStream* noise_rng, bool compute_grads);
Eigen::RowVectorXd RnnNextLogProbs(const ParameterStore& params,
                                   const ModelConfig& config,
                                   const Mat& latent,
                                   const std::vector<int>& prefix);

// Incremental decoding. Cross-attention keys/values over a fixed latent are
// projected once per document; each beam candidate then carries only the
// decoder self-attention cache (transformer) or the recurrent state (LSTM).
// Advancing by one token matches the corresponding *NextLogProbs on the same
// prefix up to floating-point roundoff.
struct TfCrossContext {
  std::vector<Mat> k;  // per decoder layer: latent rows x embed_dim
  std::vector<Mat> v;
};
TfCrossContext TfMakeCrossContext(const ParameterStore& params,
                                  const ModelConfig& config,
                                  const Mat& latent);

struct TfIncState {
  std::vector<Mat> self_k;  // per decoder layer: decoded positions x embed_dim
  std::vector<Mat> self_v;
  int length = 0;
};
TfIncState TfInitState(const ModelConfig& config);

// Appends `token` at position state.length and returns log-probabilities for
// the next position.
Eigen::RowVectorXd TfAdvance(const ParameterStore& params,
                             const ModelConfig& config,
                             const TfCrossContext& cross, TfIncState& state,
                             int token);

struct RnnIncState {
  Eigen::RowVectorXd h;
  Eigen::RowVectorXd c;
};
RnnIncState RnnInitState(const ModelConfig& config, const Mat& latent);
Eigen::RowVectorXd RnnAdvance(const ParameterStore& params,
                              const ModelConfig& config, RnnIncState& state,
                              int token);

// Shared numeric helpers (transformer.cc).
Mat LinearForward(const ParameterStore& params, int w_id, int b_id,
                  const Mat& x);
Mat LinearBackward(ParameterStore& params, int w_id, int b_id, const Mat& x,
                   const Mat& dy, bool compute_grads);
Eigen::RowVectorXd LogSoftmaxRow(const Eigen::RowVectorXd& logits);

}  // namespace internal
}  // namespace dprw

#endif  // DPRW_SRC_NETS_H_
