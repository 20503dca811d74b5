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

#include "dprw/evaluation.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "dprw/rng.h"

namespace dprw {
namespace {

// Joins an n-gram into a map key; \x1f cannot occur inside tokens.
std::string NgramKey(const std::vector<std::string>& tokens, std::size_t start,
                     std::size_t n) {
  std::string key;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) key.push_back('\x1f');
    key += tokens[start + i];
  }
  return key;
}

std::map<std::string, std::int64_t> CountNgrams(
    const std::vector<std::string>& tokens, std::size_t n) {
  std::map<std::string, std::int64_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t start = 0; start + n <= tokens.size(); ++start) {
    ++counts[NgramKey(tokens, start, n)];
  }
  return counts;
}

}  // namespace

BleuResult CorpusBleu(const std::vector<std::vector<std::string>>& references,
                      const std::vector<std::vector<std::string>>& hypotheses) {
  if (references.size() != hypotheses.size()) {
    throw std::invalid_argument(
        "bleu: references and hypotheses must align one to one");
  }
  BleuResult result;
  std::array<std::int64_t, 4> matched = {0, 0, 0, 0};
  std::array<std::int64_t, 4> total = {0, 0, 0, 0};
  for (std::size_t d = 0; d < references.size(); ++d) {
    result.reference_length +=
        static_cast<std::int64_t>(references[d].size());
    result.hypothesis_length +=
        static_cast<std::int64_t>(hypotheses[d].size());
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto ref_counts = CountNgrams(references[d], n);
      const auto hyp_counts = CountNgrams(hypotheses[d], n);
      for (const auto& [key, count] : hyp_counts) {
        total[n - 1] += count;
        const auto it = ref_counts.find(key);
        if (it != ref_counts.end()) {
          matched[n - 1] += std::min(count, it->second);
        }
      }
    }
  }

  for (std::size_t n = 1; n <= 4; ++n) {
    const double add = n == 1 ? 0.0 : 1.0;
    const double denom = static_cast<double>(total[n - 1]) + add;
    result.precisions[n - 1] =
        denom > 0.0 ? (static_cast<double>(matched[n - 1]) + add) / denom
                    : 0.0;
  }

  if (result.hypothesis_length == 0) {
    result.brevity_penalty = 0.0;
  } else if (result.hypothesis_length >= result.reference_length) {
    result.brevity_penalty = 1.0;
  } else {
    result.brevity_penalty =
        std::exp(1.0 - static_cast<double>(result.reference_length) /
                           static_cast<double>(result.hypothesis_length));
  }

  double log_sum = 0.0;
  for (double p : result.precisions) {
    if (p <= 0.0) {
      result.score = 0.0;
      return result;
    }
    log_sum += std::log(p);
  }
  result.score = 100.0 * result.brevity_penalty * std::exp(log_sum / 4.0);
  return result;
}

BleuResult CorpusBleuText(const std::vector<std::string>& reference_texts,
                          const std::vector<std::string>& hypothesis_texts) {
  std::vector<std::vector<std::string>> refs, hyps;
  refs.reserve(reference_texts.size());
  hyps.reserve(hypothesis_texts.size());
  for (const std::string& text : reference_texts) {
    refs.push_back(SplitWords(text));
  }
  for (const std::string& text : hypothesis_texts) {
    hyps.push_back(SplitWords(text));
  }
  return CorpusBleu(refs, hyps);
}

double MacroF1(const std::vector<std::string>& gold,
               const std::vector<std::string>& predicted,
               const std::vector<std::string>& classes) {
  if (gold.size() != predicted.size()) {
    throw std::invalid_argument("macro f1: gold/predicted length mismatch");
  }
  if (classes.empty()) {
    throw std::invalid_argument("macro f1: empty class list");
  }
  double f1_sum = 0.0;
  for (const std::string& cls : classes) {
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const bool is_gold = gold[i] == cls;
      const bool is_pred = predicted[i] == cls;
      if (is_gold && is_pred) ++tp;
      if (!is_gold && is_pred) ++fp;
      if (is_gold && !is_pred) ++fn;
    }
    const double precision =
        tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
    const double recall =
        tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
    const double f1 = precision + recall == 0.0
                          ? 0.0
                          : 2.0 * precision * recall / (precision + recall);
    f1_sum += f1;
  }
  return f1_sum / static_cast<double>(classes.size());
}

std::vector<std::pair<int, double>> TextClassifier::Featurize(
    const std::string& text) const {
  const std::vector<std::string> words = SplitWords(text);
  std::map<int, double> counts;
  for (std::size_t i = 0; i < words.size(); ++i) {
    auto it = feature_ids_.find(words[i]);
    if (it != feature_ids_.end()) counts[it->second] += 1.0;
    if (i + 1 < words.size()) {
      it = feature_ids_.find(words[i] + '\x1f' + words[i + 1]);
      if (it != feature_ids_.end()) counts[it->second] += 1.0;
    }
  }
  double norm = 0.0;
  for (const auto& [id, value] : counts) norm += value * value;
  norm = std::sqrt(norm);
  std::vector<std::pair<int, double>> features(counts.begin(), counts.end());
  if (norm > 0.0) {
    for (auto& [id, value] : features) value /= norm;
  }
  return features;
}

int TextClassifier::PredictId(
    const std::vector<std::pair<int, double>>& features) const {
  const int bias = static_cast<int>(feature_ids_.size());
  int best = 0;
  double best_score = 0.0;
  for (std::size_t c = 0; c < weights_.size(); ++c) {
    double score = weights_[c][static_cast<std::size_t>(bias)];
    for (const auto& [id, value] : features) {
      score += weights_[c][static_cast<std::size_t>(id)] * value;
    }
    if (c == 0 || score > best_score) {
      best = static_cast<int>(c);
      best_score = score;
    }
  }
  return best;
}

TextClassifier TextClassifier::Train(const std::vector<LabeledDocument>& train,
                                     const std::vector<LabeledDocument>& val,
                                     const ClassifierOptions& options) {
  if (train.empty()) {
    throw std::invalid_argument("classifier: empty training set");
  }
  if (options.max_epochs <= 0 || options.batch_size <= 0 ||
      !(options.learning_rate > 0.0)) {
    throw std::invalid_argument("classifier: bad training options");
  }

  TextClassifier model;
  std::set<std::string> class_set;
  for (const LabeledDocument& doc : train) class_set.insert(doc.label);
  model.classes_.assign(class_set.begin(), class_set.end());
  if (model.classes_.size() < 2) {
    throw std::invalid_argument("classifier: need at least two classes");
  }

  for (const LabeledDocument& doc : train) {
    const std::vector<std::string> words = SplitWords(doc.text);
    for (std::size_t i = 0; i < words.size(); ++i) {
      model.feature_ids_.emplace(
          words[i], static_cast<int>(model.feature_ids_.size()));
      if (i + 1 < words.size()) {
        model.feature_ids_.emplace(
            words[i] + '\x1f' + words[i + 1],
            static_cast<int>(model.feature_ids_.size()));
      }
    }
  }

  const std::size_t width = model.feature_ids_.size() + 1;
  model.weights_.assign(model.classes_.size(),
                        std::vector<double>(width, 0.0));

  std::vector<std::vector<std::pair<int, double>>> feats;
  std::vector<int> labels;
  feats.reserve(train.size());
  for (const LabeledDocument& doc : train) {
    feats.push_back(model.Featurize(doc.text));
    labels.push_back(static_cast<int>(
        std::lower_bound(model.classes_.begin(), model.classes_.end(),
                         doc.label) -
        model.classes_.begin()));
  }

  std::vector<std::string> val_gold;
  for (const LabeledDocument& doc : val) val_gold.push_back(doc.label);

  auto val_score = [&]() {
    if (val.empty()) return 0.0;
    std::vector<std::string> predicted;
    predicted.reserve(val.size());
    for (const LabeledDocument& doc : val) {
      predicted.push_back(model.Predict(doc.text));
    }
    return MacroF1(val_gold, predicted, model.classes_);
  };

  RngStream rng(options.seed);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const std::size_t num_classes = model.classes_.size();
  const std::size_t bias = width - 1;
  std::vector<double> scores(num_classes);
  std::vector<std::vector<double>> best_weights = model.weights_;
  double best_val = -1.0;
  int since_best = 0;

  for (int epoch = 0; epoch < options.max_epochs; ++epoch) {
    rng.Shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(options.batch_size)) {
      const std::size_t stop =
          std::min(order.size(),
                   start + static_cast<std::size_t>(options.batch_size));
      const double step =
          options.learning_rate / static_cast<double>(stop - start);
      for (std::size_t k = start; k < stop; ++k) {
        const auto& x = feats[order[k]];
        const int y = labels[order[k]];
        double max_score = -1e300;
        for (std::size_t c = 0; c < num_classes; ++c) {
          double s = model.weights_[c][bias];
          for (const auto& [id, value] : x) {
            s += model.weights_[c][static_cast<std::size_t>(id)] * value;
          }
          scores[c] = s;
          max_score = std::max(max_score, s);
        }
        double z = 0.0;
        for (std::size_t c = 0; c < num_classes; ++c) {
          scores[c] = std::exp(scores[c] - max_score);
          z += scores[c];
        }
        for (std::size_t c = 0; c < num_classes; ++c) {
          const double p = scores[c] / z;
          const double g = p - (static_cast<int>(c) == y ? 1.0 : 0.0);
          if (g == 0.0) continue;
          auto& w = model.weights_[c];
          for (const auto& [id, value] : x) {
            w[static_cast<std::size_t>(id)] -= step * g * value;
          }
          w[bias] -= step * g;
        }
      }
    }
    if (!val.empty()) {
      const double score = val_score();
      if (score > best_val + 1e-12) {
        best_val = score;
        best_weights = model.weights_;
        since_best = 0;
      } else if (++since_best >= options.patience) {
        break;
      }
    }
  }
  if (!val.empty()) model.weights_ = std::move(best_weights);
  return model;
}

std::string TextClassifier::Predict(const std::string& text) const {
  return classes_[static_cast<std::size_t>(PredictId(Featurize(text)))];
}

double TextClassifier::EvaluateMacroF1(
    const std::vector<LabeledDocument>& test) const {
  std::vector<std::string> gold, predicted;
  gold.reserve(test.size());
  predicted.reserve(test.size());
  for (const LabeledDocument& doc : test) {
    gold.push_back(doc.label);
    predicted.push_back(Predict(doc.text));
  }
  return MacroF1(gold, predicted, classes_);
}

}  // namespace dprw
