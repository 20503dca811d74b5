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
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "dprw/corpus.h"
#include "dprw/evaluation.h"

namespace dprw {
namespace {

TEST_CASE("identical corpora score BLEU 100") {
  const std::vector<std::string> texts{
      "the cat sat on the mat",
      "a quick brown fox jumps over the lazy dog",
  };
  const BleuResult r = CorpusBleuText(texts, texts);
  CHECK(r.score == doctest::Approx(100.0));
  CHECK(r.brevity_penalty == doctest::Approx(1.0));
  for (double p : r.precisions) CHECK(p == doctest::Approx(1.0));
}

TEST_CASE("fully disjoint corpora score BLEU 0") {
  const BleuResult r = CorpusBleuText({"aa bb cc dd"}, {"ee ff gg hh"});
  CHECK(r.score == 0.0);
  CHECK(r.precisions[0] == 0.0);
}

TEST_CASE("single-substitution BLEU matches the hand computation") {
  const BleuResult r =
      CorpusBleuText({"the quick brown fox jumps over the lazy dog"},
                     {"the quick brown fox jumped over the lazy dog"});
  // 9 tokens; unigrams 8/9 raw; higher orders add-one smoothed:
  // bigrams (6+1)/(8+1), trigrams (4+1)/(7+1), 4-grams (2+1)/(6+1).
  CHECK(r.precisions[0] == doctest::Approx(8.0 / 9.0));
  CHECK(r.precisions[1] == doctest::Approx(7.0 / 9.0));
  CHECK(r.precisions[2] == doctest::Approx(5.0 / 8.0));
  CHECK(r.precisions[3] == doctest::Approx(3.0 / 7.0));
  const double expected =
      100.0 * std::exp(0.25 * (std::log(8.0 / 9.0) + std::log(7.0 / 9.0) +
                               std::log(5.0 / 8.0) + std::log(3.0 / 7.0)));
  CHECK(r.score == doctest::Approx(expected));
  CHECK(r.brevity_penalty == doctest::Approx(1.0));
}

TEST_CASE("brevity penalty punishes short hypotheses") {
  const BleuResult r = CorpusBleuText({"a b c d"}, {"a b"});
  CHECK(r.hypothesis_length == 2);
  CHECK(r.reference_length == 4);
  CHECK(r.brevity_penalty == doctest::Approx(std::exp(1.0 - 4.0 / 2.0)));
}

TEST_CASE("clipped counts cap repeated n-grams") {
  // "the the the" against "the cat": only one "the" is creditable.
  const BleuResult r = CorpusBleuText({"the cat"}, {"the the the"});
  CHECK(r.precisions[0] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("corpus BLEU pools counts over all pairs") {
  // Pooled unigrams: (2 + 0) matches over (2 + 2) hypothesis tokens.
  const BleuResult r = CorpusBleuText({"a b", "c d"}, {"a b", "x y"});
  CHECK(r.precisions[0] == doctest::Approx(0.5));
}

TEST_CASE("BLEU checks input sizes") {
  CHECK_THROWS_AS(CorpusBleuText({"a"}, {"a", "b"}), std::invalid_argument);
  CHECK_THROWS_AS(CorpusBleuText({}, {}), std::invalid_argument);
}

TEST_CASE("perfect predictions reach macro-F1 1") {
  const std::vector<std::string> gold{"pos", "neg", "pos", "neg"};
  CHECK(MacroF1(gold, gold, {"pos", "neg"}) == doctest::Approx(1.0));
}

TEST_CASE("constant predictor on balanced binary data scores one third") {
  const std::vector<std::string> gold{"pos", "neg", "pos", "neg"};
  const std::vector<std::string> pred{"pos", "pos", "pos", "pos"};
  // pos: precision 0.5, recall 1 -> F1 2/3; neg: never predicted -> 0.
  CHECK(MacroF1(gold, pred, {"pos", "neg"}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("macro F1 validates lengths") {
  CHECK_THROWS_AS(MacroF1({"a"}, {"a", "b"}, {"a", "b"}),
                  std::invalid_argument);
}

std::vector<LabeledDocument> SeparableDocs(int count, std::uint64_t seed) {
  // Trivially separable by the marker words.
  std::vector<LabeledDocument> docs;
  for (int i = 0; i < count; ++i) {
    if (i % 2 == 0) {
      docs.push_back({"the food was wonderful and great", "positive", ""});
    } else {
      docs.push_back({"the food was terrible and awful", "negative", ""});
    }
  }
  (void)seed;
  return docs;
}

TEST_CASE("classifier separates trivially separable data") {
  const auto train = SeparableDocs(200, 1);
  const auto val = SeparableDocs(40, 2);
  const auto test = SeparableDocs(40, 3);
  ClassifierOptions options;
  options.seed = 9;
  const TextClassifier clf = TextClassifier::Train(train, val, options);
  CHECK(clf.EvaluateMacroF1(test) == doctest::Approx(1.0));
  CHECK(clf.Predict("wonderful stuff") == "positive");
  CHECK(clf.Predict("awful stuff") == "negative");
}

TEST_CASE("classifier training is seed-deterministic") {
  const auto docs = GenerateSentimentCorpus(400, 22);
  const CorpusSplit split = SplitCorpus(docs, 0.7, 0.15, 0.15, 44);
  ClassifierOptions options;
  options.seed = 5;
  const TextClassifier a = TextClassifier::Train(split.train, split.val,
                                                 options);
  const TextClassifier b = TextClassifier::Train(split.train, split.val,
                                                 options);
  for (const auto& doc : split.test) {
    CHECK(a.Predict(doc.text) == b.Predict(doc.text));
  }
  CHECK(a.EvaluateMacroF1(split.test) == b.EvaluateMacroF1(split.test));
}

TEST_CASE("classifier learns the synthetic sentiment task") {
  const auto docs = GenerateSentimentCorpus(800, 22);
  const CorpusSplit split = SplitCorpus(docs, 0.7, 0.15, 0.15, 44);
  ClassifierOptions options;
  options.seed = 5;
  const TextClassifier clf = TextClassifier::Train(split.train, split.val,
                                                   options);
  CHECK(clf.EvaluateMacroF1(split.test) > 0.9);
}

}  // namespace
}  // namespace dprw
