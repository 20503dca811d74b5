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

#ifndef DPRW_EVALUATION_H_
#define DPRW_EVALUATION_H_

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dprw/corpus.h"

namespace dprw {

struct BleuResult {
  double score = 0.0;  // 0..100
  std::array<double, 4> precisions = {0.0, 0.0, 0.0, 0.0};
  double brevity_penalty = 0.0;
  std::int64_t hypothesis_length = 0;
  std::int64_t reference_length = 0;
};

// Corpus-level BLEU-4 against a single reference per hypothesis, with
// add-one smoothing on orders 2..4 (order 1 is left raw, so fully disjoint
// corpora score exactly 0) and the standard brevity penalty.
BleuResult CorpusBleu(const std::vector<std::vector<std::string>>& references,
                      const std::vector<std::vector<std::string>>& hypotheses);

// Convenience wrapper: tokenizes both sides with SplitWords.
BleuResult CorpusBleuText(const std::vector<std::string>& reference_texts,
                          const std::vector<std::string>& hypothesis_texts);

// Macro-averaged F1 over `classes`; a class that is never predicted
// contributes 0. gold and predicted must have equal length.
double MacroF1(const std::vector<std::string>& gold,
               const std::vector<std::string>& predicted,
               const std::vector<std::string>& classes);

struct ClassifierOptions {
  std::uint64_t seed = 0;
  int max_epochs = 80;
  int batch_size = 32;
  double learning_rate = 0.4;
  int patience = 8;  // epochs without val macro-F1 improvement
};

// Multinomial logistic regression over unigram+bigram counts, trained with
// mini-batch SGD and early stopping on validation macro-F1.
class TextClassifier {
 public:
  static TextClassifier Train(const std::vector<LabeledDocument>& train,
                              const std::vector<LabeledDocument>& val,
                              const ClassifierOptions& options);

  std::string Predict(const std::string& text) const;
  const std::vector<std::string>& classes() const { return classes_; }
  double EvaluateMacroF1(const std::vector<LabeledDocument>& test) const;

 private:
  std::unordered_map<std::string, int> feature_ids_;
  std::vector<std::string> classes_;
  // classes x (features + 1); the last column is the bias.
  std::vector<std::vector<double>> weights_;

  std::vector<std::pair<int, double>> Featurize(const std::string& text) const;
  int PredictId(const std::vector<std::pair<int, double>>& features) const;
};

}  // namespace dprw

#endif  // DPRW_EVALUATION_H_
