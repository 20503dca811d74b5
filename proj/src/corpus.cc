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

#include "dprw/corpus.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "dprw/rng.h"
#include "json.hpp"

namespace dprw {
namespace {

using nlohmann::json;

bool IsWordChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

}  // namespace

std::vector<std::string> SplitWords(const std::string& text) {
  std::vector<std::string> words;
  std::string current;
  for (char raw : text) {
    const char c =
        static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
    if (IsWordChar(c)) {
      current.push_back(c);
      continue;
    }
    if (!current.empty()) {
      words.push_back(current);
      current.clear();
    }
    if (!std::isspace(static_cast<unsigned char>(c))) {
      words.push_back(std::string(1, c));
    }
  }
  if (!current.empty()) words.push_back(current);
  return words;
}

std::string NormalizeText(const std::string& text) {
  const std::vector<std::string> words = SplitWords(text);
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += words[i];
  }
  return out;
}

Vocab Vocab::Build(const std::vector<LabeledDocument>& docs, int max_size) {
  if (max_size <= kReservedCount) {
    throw std::invalid_argument("vocab: max_size must exceed reserved ids");
  }
  std::unordered_map<std::string, std::int64_t> counts;
  for (const LabeledDocument& doc : docs) {
    for (const std::string& word : SplitWords(doc.text)) ++counts[word];
  }
  std::vector<std::pair<std::string, std::int64_t>> ranked(counts.begin(),
                                                           counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const std::size_t keep = std::min(
      ranked.size(), static_cast<std::size_t>(max_size - kReservedCount));
  std::vector<std::string> words;
  words.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) words.push_back(ranked[i].first);
  return FromWordList(words);
}

Vocab Vocab::FromWordList(const std::vector<std::string>& words) {
  Vocab vocab;
  vocab.words_ = words;
  vocab.ids_.reserve(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto [it, inserted] =
        vocab.ids_.emplace(words[i], static_cast<int>(i) + kReservedCount);
    if (!inserted) {
      throw std::invalid_argument("vocab: duplicate word " + words[i]);
    }
  }
  return vocab;
}

int Vocab::size() const {
  return static_cast<int>(words_.size()) + kReservedCount;
}

int Vocab::Id(const std::string& word) const {
  const auto it = ids_.find(word);
  return it == ids_.end() ? kUnkId : it->second;
}

bool Vocab::Contains(const std::string& word) const {
  return ids_.find(word) != ids_.end();
}

const std::string& Vocab::TokenText(int id) const {
  static const std::vector<std::string> kReserved = {"<pad>", "<unk>",
                                                     "<mask>", "<bos>",
                                                     "<eos>"};
  if (id < 0 || id >= size()) {
    throw std::invalid_argument("vocab: token id out of range");
  }
  if (id < kReservedCount) return kReserved[static_cast<std::size_t>(id)];
  return words_[static_cast<std::size_t>(id - kReservedCount)];
}

TokenSequence Tokenize(const std::string& text, const Vocab& vocab,
                       int length) {
  if (length < 3) {
    throw std::invalid_argument("tokenize: length must be at least 3");
  }
  const std::vector<std::string> words = SplitWords(text);
  TokenSequence seq;
  seq.ids.reserve(static_cast<std::size_t>(length));
  seq.ids.push_back(Vocab::kBosId);
  const std::size_t keep =
      std::min(words.size(), static_cast<std::size_t>(length - 2));
  for (std::size_t i = 0; i < keep; ++i) seq.ids.push_back(vocab.Id(words[i]));
  seq.ids.push_back(Vocab::kEosId);
  seq.true_length = static_cast<int>(seq.ids.size());
  seq.ids.resize(static_cast<std::size_t>(length), Vocab::kPadId);
  return seq;
}

std::string Detokenize(const std::vector<int>& ids, const Vocab& vocab) {
  std::string out;
  for (int id : ids) {
    if (id < Vocab::kReservedCount) continue;
    if (!out.empty()) out.push_back(' ');
    out += vocab.TokenText(id);
  }
  return out;
}

std::vector<LabeledDocument> LoadJsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::vector<LabeledDocument> docs;
  std::vector<std::size_t> bad_lines;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object() ||
        !record.contains("text") || !record["text"].is_string() ||
        !record.contains("label") || !record["label"].is_string()) {
      bad_lines.push_back(line_number);
      continue;
    }
    LabeledDocument doc;
    doc.text = record["text"].get<std::string>();
    doc.label = record["label"].get<std::string>();
    if (record.contains("individual_id") &&
        record["individual_id"].is_string()) {
      doc.individual_id = record["individual_id"].get<std::string>();
    }
    docs.push_back(std::move(doc));
  }
  if (!bad_lines.empty()) {
    std::ostringstream msg;
    msg << "malformed dataset records (need string \"text\" and \"label\") in "
        << path << " at line";
    if (bad_lines.size() > 1) msg << "s";
    for (std::size_t i = 0; i < bad_lines.size(); ++i) {
      msg << (i == 0 ? " " : ", ") << bad_lines[i];
    }
    throw std::runtime_error(msg.str());
  }
  if (docs.empty()) {
    std::cerr << "warning: dataset file " << path << " is empty" << std::endl;
  }
  return docs;
}

void SaveJsonl(const std::vector<LabeledDocument>& docs,
               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  for (const LabeledDocument& doc : docs) {
    json record;
    record["text"] = doc.text;
    record["label"] = doc.label;
    if (!doc.individual_id.empty()) record["individual_id"] = doc.individual_id;
    out << record.dump() << "\n";
  }
}

std::vector<LabeledDocument> LoadTextLines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open text file: " + path);
  std::vector<LabeledDocument> docs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    LabeledDocument doc;
    doc.text = line;
    docs.push_back(std::move(doc));
  }
  if (docs.empty()) {
    std::cerr << "warning: text file " << path << " is empty" << std::endl;
  }
  return docs;
}

CorpusSplit SplitCorpus(const std::vector<LabeledDocument>& docs,
                        double train_fraction, double val_fraction,
                        double test_fraction, std::uint64_t seed) {
  if (train_fraction < 0.0 || val_fraction < 0.0 || test_fraction < 0.0 ||
      std::fabs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) {
    throw std::invalid_argument(
        "split: fractions must be non-negative and sum to 1");
  }
  std::vector<std::size_t> order(docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  RngStream rng(seed);
  rng.Shuffle(order);

  const double n = static_cast<double>(docs.size());
  const std::size_t cut1 =
      static_cast<std::size_t>(std::llround(train_fraction * n));
  const std::size_t cut2 = static_cast<std::size_t>(
      std::llround((train_fraction + val_fraction) * n));

  CorpusSplit split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const LabeledDocument& doc = docs[order[i]];
    if (i < cut1) {
      split.train.push_back(doc);
    } else if (i < cut2) {
      split.val.push_back(doc);
    } else {
      split.test.push_back(doc);
    }
  }
  return split;
}

double OovRate(const std::vector<LabeledDocument>& docs, const Vocab& vocab) {
  std::int64_t total = 0, oov = 0;
  for (const LabeledDocument& doc : docs) {
    for (const std::string& word : SplitWords(doc.text)) {
      ++total;
      if (!vocab.Contains(word)) ++oov;
    }
  }
  return total == 0 ? 0.0
                    : static_cast<double>(oov) / static_cast<double>(total);
}

}  // namespace dprw
