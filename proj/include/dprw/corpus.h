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

#ifndef DPRW_CORPUS_H_
#define DPRW_CORPUS_H_

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace dprw {

struct LabeledDocument {
  std::string text;
  std::string label;
  std::string individual_id;  // empty when absent
};

// Lowercases ASCII letters, keeps alphanumeric runs as words and emits every
// other non-space character as its own single-character token.
std::vector<std::string> SplitWords(const std::string& text);

// SplitWords then rejoin with single spaces; the canonical surface form.
std::string NormalizeText(const std::string& text);

// Word-level vocabulary with five reserved ids at the front.
class Vocab {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;
  static constexpr int kMaskId = 2;
  static constexpr int kBosId = 3;
  static constexpr int kEosId = 4;
  static constexpr int kReservedCount = 5;

  // Most frequent words first, ties broken lexicographically; keeps at most
  // max_size - 5 words. max_size must exceed the reserved count.
  static Vocab Build(const std::vector<LabeledDocument>& docs, int max_size);

  static Vocab FromWordList(const std::vector<std::string>& words);

  int size() const;  // includes reserved ids
  int Id(const std::string& word) const;  // kUnkId when absent
  bool Contains(const std::string& word) const;
  const std::string& TokenText(int id) const;  // throws on out-of-range id
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
};

// Fixed-length token ids: bos, words (truncated to length - 2), eos, then
// pad. true_length counts the non-pad ids.
struct TokenSequence {
  std::vector<int> ids;
  int true_length = 0;
};

TokenSequence Tokenize(const std::string& text, const Vocab& vocab,
                       int length);

// Drops reserved ids and joins the remaining words with single spaces.
std::string Detokenize(const std::vector<int>& ids, const Vocab& vocab);

// JSONL records {"text": ..., "label": ..., "individual_id"?: ...}. Throws
// std::runtime_error listing all offending 1-based line numbers if any
// record is malformed; warns on stderr and returns empty for an empty file.
std::vector<LabeledDocument> LoadJsonl(const std::string& path);
void SaveJsonl(const std::vector<LabeledDocument>& docs,
               const std::string& path);

// One document per non-empty line, empty label.
std::vector<LabeledDocument> LoadTextLines(const std::string& path);

struct CorpusSplit {
  std::vector<LabeledDocument> train;
  std::vector<LabeledDocument> val;
  std::vector<LabeledDocument> test;
};

// Seeded shuffle then contiguous partition; fractions must be non-negative
// and sum to 1. The three parts are disjoint and exhaustive.
CorpusSplit SplitCorpus(const std::vector<LabeledDocument>& docs,
                        double train_fraction, double val_fraction,
                        double test_fraction, std::uint64_t seed);

// Deterministic toy corpora. The public corpus is unlabeled template text
// for autoencoder pretraining; the sentiment corpus is a balanced binary
// classification set over a related but disjoint set of sentences.
std::vector<LabeledDocument> GeneratePublicCorpus(int count,
                                                  std::uint64_t seed);
std::vector<LabeledDocument> GenerateSentimentCorpus(int count,
                                                     std::uint64_t seed);

// Fraction of word occurrences in `docs` that fall outside `vocab`.
double OovRate(const std::vector<LabeledDocument>& docs, const Vocab& vocab);

}  // namespace dprw

#endif  // DPRW_CORPUS_H_
