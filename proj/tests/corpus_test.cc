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
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "dprw/corpus.h"

namespace dprw {
namespace {

namespace fs = std::filesystem;

struct TempFile {
  fs::path path;
  explicit TempFile(const std::string& contents) {
    path = fs::temp_directory_path() /
           ("corpus_test_" + std::to_string(std::rand()) + ".jsonl");
    std::ofstream out(path);
    out << contents;
  }
  ~TempFile() { std::error_code ec; fs::remove(path, ec); }
};

TEST_CASE("SplitWords lowercases and isolates punctuation") {
  CHECK(SplitWords("Hello, world") ==
        std::vector<std::string>{"hello", ",", "world"});
  CHECK(SplitWords("it's fine.") ==
        std::vector<std::string>{"it", "'", "s", "fine", "."});
  CHECK(SplitWords("  spaced   out  ") ==
        std::vector<std::string>{"spaced", "out"});
  CHECK(SplitWords("") == std::vector<std::string>{});
}

TEST_CASE("NormalizeText is the canonical join") {
  CHECK(NormalizeText("Hello,  WORLD!") == "hello , world !");
  CHECK(NormalizeText("a1b2") == "a1b2");
}

TEST_CASE("vocabulary keeps the most frequent words with lexical ties") {
  std::vector<LabeledDocument> docs{
      {"b b b a a c", "", ""},
  };
  // Room for exactly two words beyond the reserved ids.
  const Vocab vocab = Vocab::Build(docs, Vocab::kReservedCount + 2);
  CHECK(vocab.size() == Vocab::kReservedCount + 2);
  CHECK(vocab.Contains("b"));
  CHECK(vocab.Contains("a"));
  CHECK_FALSE(vocab.Contains("c"));
  CHECK(vocab.Id("c") == Vocab::kUnkId);
}

TEST_CASE("frequency ties admit the lexicographically smaller word first") {
  std::vector<LabeledDocument> docs{{"y x", "", ""}};
  const Vocab vocab = Vocab::Build(docs, Vocab::kReservedCount + 1);
  CHECK(vocab.Contains("x"));
  CHECK_FALSE(vocab.Contains("y"));
}

TEST_CASE("tokenize produces fixed-length id sequences") {
  std::vector<LabeledDocument> docs{{"hello world again", "", ""}};
  const Vocab vocab = Vocab::Build(docs, 100);
  const TokenSequence seq = Tokenize("Hello, world", vocab, 10);
  REQUIRE(seq.ids.size() == 10);
  CHECK(seq.ids[0] == Vocab::kBosId);
  CHECK(seq.ids[1] == vocab.Id("hello"));
  CHECK(seq.ids[2] == vocab.Id(","));  // "," maps to unk here
  CHECK(seq.ids[3] == vocab.Id("world"));
  CHECK(seq.ids[4] == Vocab::kEosId);
  for (std::size_t i = 5; i < 10; ++i) CHECK(seq.ids[i] == Vocab::kPadId);
  CHECK(seq.true_length == 5);
}

TEST_CASE("tokenize truncates long inputs to exactly the target length") {
  std::vector<LabeledDocument> docs{{"w", "", ""}};
  const Vocab vocab = Vocab::Build(docs, 100);
  std::string text;
  for (int i = 0; i < 30; ++i) text += "w ";
  const TokenSequence seq = Tokenize(text, vocab, 8);
  REQUIRE(seq.ids.size() == 8);
  CHECK(seq.true_length == 8);
  for (int id : seq.ids) CHECK(id != Vocab::kPadId);
}

TEST_CASE("detokenize inverts tokenize for in-vocabulary text") {
  const std::vector<LabeledDocument> docs =
      GeneratePublicCorpus(200, 11);
  const Vocab vocab = Vocab::Build(docs, 2048);
  for (int i = 0; i < 50; ++i) {
    const std::string normalized =
        NormalizeText(docs[static_cast<std::size_t>(i)].text);
    const TokenSequence seq = Tokenize(normalized, vocab, 20);
    if (seq.true_length >= 20) continue;  // truncated, not invertible
    CHECK(Detokenize(seq.ids, vocab) == normalized);
  }
}

TEST_CASE("detokenize drops every reserved id") {
  const Vocab vocab = Vocab::FromWordList({"alpha", "beta"});
  const std::vector<int> ids{Vocab::kBosId, vocab.Id("alpha"), Vocab::kMaskId,
                             Vocab::kUnkId, vocab.Id("beta"), Vocab::kEosId,
                             Vocab::kPadId};
  CHECK(Detokenize(ids, vocab) == "alpha beta");
}

TEST_CASE("JSONL round trip preserves documents") {
  std::vector<LabeledDocument> docs{
      {"first text", "pos", "person-1"},
      {"second text", "neg", ""},
  };
  TempFile file("");
  SaveJsonl(docs, file.path.string());
  const std::vector<LabeledDocument> loaded = LoadJsonl(file.path.string());
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].text == "first text");
  CHECK(loaded[0].label == "pos");
  CHECK(loaded[0].individual_id == "person-1");
  CHECK(loaded[1].individual_id.empty());
}

TEST_CASE("malformed JSONL lines are reported with line numbers") {
  TempFile file(
      "{\"text\": \"ok\", \"label\": \"pos\"}\n"
      "{\"label\": \"missing text\"}\n"
      "not json at all\n");
  try {
    LoadJsonl(file.path.string());
    FAIL("expected a parse failure");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2") != std::string::npos);
    CHECK(msg.find("3") != std::string::npos);
  }
}

TEST_CASE("empty JSONL file loads as an empty corpus") {
  TempFile file("");
  CHECK(LoadJsonl(file.path.string()).empty());
}

TEST_CASE("seeded splits are deterministic, disjoint and exhaustive") {
  const std::vector<LabeledDocument> docs = GeneratePublicCorpus(100, 5);
  const CorpusSplit a = SplitCorpus(docs, 0.6, 0.2, 0.2, 17);
  const CorpusSplit b = SplitCorpus(docs, 0.6, 0.2, 0.2, 17);
  CHECK(a.train.size() == 60);
  CHECK(a.val.size() == 20);
  CHECK(a.test.size() == 20);
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].text == b.train[i].text);
  }
  std::multiset<std::string> original;
  for (const auto& d : docs) original.insert(d.text);
  std::multiset<std::string> recombined;
  for (const auto& part : {a.train, a.val, a.test}) {
    for (const auto& d : part) recombined.insert(d.text);
  }
  CHECK(original == recombined);
}

TEST_CASE("split rejects fractions that do not sum to one") {
  const std::vector<LabeledDocument> docs = GeneratePublicCorpus(10, 5);
  CHECK_THROWS_AS(SplitCorpus(docs, 0.5, 0.2, 0.2, 1), std::invalid_argument);
}

TEST_CASE("generators are pure functions of count and seed") {
  const auto a = GeneratePublicCorpus(50, 123);
  const auto b = GeneratePublicCorpus(50, 123);
  const auto c = GeneratePublicCorpus(50, 124);
  REQUIRE(a.size() == 50);
  bool all_equal = true;
  bool any_diff = false;
  for (std::size_t i = 0; i < 50; ++i) {
    all_equal = all_equal && a[i].text == b[i].text;
    any_diff = any_diff || a[i].text != c[i].text;
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("sentiment corpus is balanced by construction") {
  const auto docs = GenerateSentimentCorpus(1000, 22);
  int positive = 0;
  int negative = 0;
  for (const auto& d : docs) {
    if (d.label == "positive") ++positive;
    if (d.label == "negative") ++negative;
  }
  CHECK(positive == 500);
  CHECK(negative == 500);
}

TEST_CASE("public and sentiment corpora are sentence-disjoint but share "
          "structure") {
  const auto pub = GeneratePublicCorpus(2000, 11);
  const auto sent = GenerateSentimentCorpus(2000, 22);
  std::set<std::string> public_sentences;
  for (const auto& d : pub) public_sentences.insert(NormalizeText(d.text));
  for (const auto& d : sent) {
    CHECK(public_sentences.count(NormalizeText(d.text)) == 0);
  }
}

TEST_CASE("shared vocabulary is large enough for transfer yet below half") {
  const auto pub = GeneratePublicCorpus(2000, 11);
  const auto sent = GenerateSentimentCorpus(2000, 22);
  std::set<std::string> pub_words;
  std::set<std::string> sent_words;
  for (const auto& d : pub) {
    for (const auto& w : SplitWords(d.text)) pub_words.insert(w);
  }
  for (const auto& d : sent) {
    for (const auto& w : SplitWords(d.text)) sent_words.insert(w);
  }
  std::vector<std::string> both;
  std::set_intersection(pub_words.begin(), pub_words.end(),
                        sent_words.begin(), sent_words.end(),
                        std::back_inserter(both));
  std::vector<std::string> either;
  std::set_union(pub_words.begin(), pub_words.end(), sent_words.begin(),
                 sent_words.end(), std::back_inserter(either));
  const double overlap =
      static_cast<double>(both.size()) / static_cast<double>(either.size());
  CHECK(overlap <= 0.5);
  CHECK(overlap > 0.1);
}

TEST_CASE("out-of-vocabulary rate on a held-out split stays under 2%") {
  const auto pub = GeneratePublicCorpus(2000, 11);
  const auto sent = GenerateSentimentCorpus(2000, 22);
  std::vector<LabeledDocument> train_pool = pub;
  train_pool.insert(train_pool.end(), sent.begin(), sent.end());
  const CorpusSplit split = SplitCorpus(train_pool, 0.8, 0.1, 0.1, 33);
  const Vocab vocab = Vocab::Build(split.train, 2048);
  CHECK(OovRate(split.test, vocab) <= 0.02);
}

TEST_CASE("text-lines loader keeps one document per non-empty line") {
  TempFile file("first line\n\nsecond line\n");
  const auto docs = LoadTextLines(file.path.string());
  REQUIRE(docs.size() == 2);
  CHECK(docs[0].text == "first line");
  CHECK(docs[1].text == "second line");
  CHECK(docs[0].label.empty());
}

}  // namespace
}  // namespace dprw
