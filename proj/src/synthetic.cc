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

// Deterministic template-based toy corpora. The public corpus covers a
// superset of the sentiment corpus vocabulary (so the autoencoder can encode
// review-domain words), and every sentiment sentence shape has a public
// mirror with the identical function-word skeleton. Mirrors always differ in
// at least one slot pool (for example venues are replaced by kPublicPlaces,
// or a food slot by kThings), so no sentence can be produced by both
// generators even though the shapes and most slot fillers coincide.

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include "dprw/corpus.h"
#include "dprw/rng.h"

namespace dprw {
namespace {

using Pool = std::vector<const char*>;

const Pool kDeterminers = {"the", "a", "every", "this", "that",
                           "each", "some", "another"};

const Pool kPeople = {
    "engineer",  "teacher",   "violinist", "captain",  "gardener",
    "painter",   "librarian", "pilot",     "farmer",   "carpenter",
    "astronomer", "baker",    "sailor",    "tailor",   "historian",
    "chemist",   "poet",      "dancer",    "architect", "nurse",
    "blacksmith", "clerk",    "ranger",    "weaver",   "sculptor",
    "surveyor",  "printer",   "fisherman", "shepherd", "merchant",
    "scholar",   "apprentice", "guide",    "keeper",   "watchman",
    "botanist",  "geologist", "mapmaker",  "courier",  "drummer",
    "singer",    "juggler",   "magician",  "inspector", "conductor",
    "machinist", "welder",    "miller",    "brewer",   "mason",
    "potter",    "tanner",    "scribe",    "falconer", "waiter",
    "host"};

const Pool kActions = {
    "calibrated", "painted",  "described", "measured", "repaired",
    "polished",   "sketched", "carried",   "examined", "assembled",
    "tuned",      "arranged", "labeled",   "weighed",  "sorted",
    "mounted",    "traced",   "copied",    "tested",   "balanced",
    "sharpened",  "folded",   "stacked",   "wrapped",  "opened",
    "closed",     "moved",    "lifted",    "cleaned",  "inspected",
    "restored",   "adjusted", "built",     "carved",   "printed",
    "recorded",   "played",   "studied",   "observed", "collected",
    "mapped",     "mended",   "rinsed",    "dried",    "counted",
    "packed",     "stored",   "ordered"};

const Pool kThings = {
    "telescope", "ledger",  "melody",  "lantern", "compass", "barrel",
    "canvas",    "engine",  "bridge",  "violin",  "sail",    "anchor",
    "furnace",   "bicycle", "window",  "cabinet", "saddle",  "kettle",
    "mirror",    "globe",   "clock",   "bell",    "rope",    "wheel",
    "hammer",    "chisel",  "loom",    "kiln",    "quill",   "atlas",
    "sextant",   "pulley",  "valve",   "piston",  "gear",    "spring",
    "lens",      "prism",   "beaker",  "flask",   "crate",   "basket",
    "bench",     "easel",   "scroll",  "tablet",  "drum",    "flute",
    "harp",      "organ",   "pump",    "turbine", "dynamo",  "boiler",
    "grate",     "hinge",   "latch",   "panel",   "plank",   "beam",
    "rafter",    "column",  "arch",    "gate"};

const Pool kPublicPlaces = {
    "harbor",  "village", "workshop", "market", "meadow",  "orchard",
    "station", "library", "foundry",  "mill",   "tower",   "cellar",
    "attic",   "courtyard", "garden", "quarry", "dock",    "barn",
    "forge",   "plaza",  "observatory"};

const Pool kTimeWords = {"yesterday", "today", "carefully", "slowly",
                         "quietly",   "twice", "again",     "early",
                         "late",      "often"};

const Pool kNeutralAdj = {
    "wooden", "copper", "narrow", "ancient", "heavy",   "bright",
    "small",  "large",  "round",  "square",  "silver",  "iron",
    "quiet",  "smooth", "rough",  "tall",    "short",   "broad",
    "pale",   "dark",   "crooked", "steep",  "hollow",  "dusty"};

const Pool kPositiveAdj = {
    "wonderful", "delightful", "superb",     "excellent", "charming",
    "brilliant", "pleasant",   "marvelous",  "graceful",  "splendid",
    "lovely",    "refreshing", "generous",   "friendly",  "cozy",
    "elegant",   "cheerful",   "satisfying", "memorable", "perfect"};

const Pool kNegativeAdj = {
    "terrible", "dreadful", "awful",   "disappointing", "bland",
    "dull",     "dirty",    "noisy",   "rude",          "sluggish",
    "cold",     "stale",    "cramped", "gloomy",        "broken",
    "bitter",   "chaotic",  "shabby",  "tedious",       "miserable"};

const Pool kFoods = {"meal",   "soup", "bread",   "coffee",
                     "tea",    "stew", "dessert", "pie"};
const Pool kServiceNouns = {"service", "staff", "menu", "seating"};
const Pool kRoomNouns = {"room", "bed", "view", "balcony"};
const Pool kShows = {"film", "show", "concert", "play", "novel", "story"};
const Pool kVenues = {"restaurant", "cafe", "inn", "hotel", "theater",
                      "diner"};
const Pool kOpinionVerbs = {"loved", "enjoyed", "hated", "disliked"};

// Domain nouns folded into neutral public sentences so every sentiment-side
// word also occurs in the public corpus.
Pool DomainNouns() {
  Pool all;
  for (const Pool* pool : {&kFoods, &kServiceNouns, &kRoomNouns, &kShows}) {
    all.insert(all.end(), pool->begin(), pool->end());
  }
  return all;
}

const char* Pick(const Pool& pool, RngStream& rng) {
  return pool[static_cast<std::size_t>(rng.UniformInt(pool.size()))];
}

std::string PublicSentence(RngStream& rng) {
  const Pool domain = DomainNouns();
  std::string s;
  auto add = [&s](const std::string& w) {
    if (!s.empty()) s.push_back(' ');
    s += w;
  };
  auto opinion = [&rng]() -> const Pool& {
    return rng.Uniform01() < 0.5 ? kPositiveAdj : kNegativeAdj;
  };
  switch (rng.UniformInt(32)) {
    case 0:
      add("the"), add(Pick(kPeople, rng)), add(Pick(kActions, rng));
      add("the"), add(Pick(kNeutralAdj, rng)), add(Pick(kThings, rng));
      add(".");
      break;
    case 1:
      add(Pick(kDeterminers, rng)), add(Pick(kNeutralAdj, rng));
      add(Pick(kPeople, rng)), add(Pick(kActions, rng));
      add(Pick(kDeterminers, rng)), add(Pick(kThings, rng));
      add(Pick(kTimeWords, rng)), add(".");
      break;
    case 2:
      add("the"), add(Pick(kPeople, rng)), add(Pick(kActions, rng));
      add("the"), add(Pick(kThings, rng)), add("at"), add("the");
      add(Pick(kPublicPlaces, rng)), add(".");
      break;
    case 3:
      add(Pick(kTimeWords, rng)), add("the"), add(Pick(kPeople, rng));
      add(Pick(kActions, rng)), add("the"), add(Pick(kThings, rng));
      add("again"), add(".");
      break;
    case 4:
      add("the"), add(Pick(kPeople, rng)), add("and"), add("the");
      add(Pick(kPeople, rng)), add(Pick(kActions, rng)), add("the");
      add(Pick(kThings, rng)), add(".");
      break;
    case 5:
      // Mirrors the sentiment "i <verb> the <noun> because it was <adj>"
      // shape, but the adjective slot is neutral-only.
      add("i"), add(Pick(kOpinionVerbs, rng)), add("the");
      add(Pick(kThings, rng)), add("because"), add("it"), add("was");
      add(Pick(kNeutralAdj, rng)), add(".");
      break;
    case 6:
      add("we"), add("visited"), add("the"), add(Pick(kPublicPlaces, rng));
      add("and"), add(Pick(kActions, rng)), add("the"), add(Pick(kThings, rng));
      add(".");
      break;
    case 7: {
      // Sentiment adjectives in a public-only frame ("in the <place>").
      const Pool& adj = rng.Uniform01() < 0.5 ? kPositiveAdj : kNegativeAdj;
      add("the"), add(Pick(kThings, rng)), add("in"), add("the");
      add(Pick(kPublicPlaces, rng)), add("was"), add(Pick(adj, rng));
      add("and"), add(Pick(adj, rng)), add(".");
      break;
    }
    case 8:
      add("it"), add("was"), add("a"), add("really");
      add(Pick(kNeutralAdj, rng)), add(Pick(kThings, rng)), add(".");
      break;
    case 9:
      add("the"), add(Pick(kPeople, rng)), add("kept"), add("the");
      add(Pick(kThings, rng)), add("in"), add("the");
      add(Pick(kNeutralAdj, rng)), add(Pick(kPublicPlaces, rng)), add(".");
      break;
    case 10:
      add("what"), add("a"), add(Pick(kNeutralAdj, rng));
      add(Pick(kThings, rng)), add("!");
      break;
    case 11:
      add("we"), add("watched"), add("the"), add(Pick(kPeople, rng));
      add("at"), add("the"), add(Pick(kPublicPlaces, rng)), add(".");
      break;
    case 12:
      // Domain nouns in neutral third-person frames.
      add("the"), add(Pick(kPeople, rng)), add(Pick(kActions, rng));
      add("the"), add(Pick(domain, rng)), add(Pick(kTimeWords, rng)), add(".");
      break;
    case 13:
      // Venue names in a "near the" frame the sentiment side never uses.
      add("the"), add(Pick(kPeople, rng)), add(Pick(kActions, rng));
      add("the"), add(Pick(kThings, rng)), add("near"), add("the");
      add(Pick(kVenues, rng)), add(".");
      break;
    case 14: {
      const Pool& adj = opinion();
      add("the"), add(Pick(adj, rng)), add(Pick(kPeople, rng));
      add(Pick(kActions, rng)), add("the"), add(Pick(kThings, rng)), add(".");
      break;
    }
    // Cases 15-21 mirror the seven sentiment shapes with their true noun
    // pools (foods, venues, service words, shows, rooms) but a neutral
    // adjective, so the sentences stay public-only via the adjective slot.
    case 15:
      add("the"), add(Pick(kFoods, rng)), add("at"), add("the");
      add(Pick(kVenues, rng)), add("was"), add(Pick(kNeutralAdj, rng));
      add(".");
      break;
    case 16:
      add("i"), add(Pick(kOpinionVerbs, rng)), add("the");
      add(Pick(kFoods, rng)), add("because"), add("it"), add("was");
      add(Pick(kNeutralAdj, rng)), add(".");
      break;
    case 17:
      add("the"), add(Pick(kServiceNouns, rng)), add("was");
      add(Pick(kNeutralAdj, rng)), add("and"), add("the");
      add(Pick(kFoods, rng)), add("was"), add(Pick(kNeutralAdj, rng)), add(".");
      break;
    case 18:
      add("what"), add("a"), add(Pick(kNeutralAdj, rng)), add(Pick(kShows, rng));
      add("!");
      break;
    case 19:
      add("the"), add(Pick(kShows, rng)), add("was"), add("really");
      add(Pick(kNeutralAdj, rng)), add(".");
      break;
    case 20:
      add("we"), add("ordered"), add("the"), add(Pick(kFoods, rng));
      add("and"), add("it"), add("was"), add(Pick(kNeutralAdj, rng)), add(".");
      break;
    case 21:
      add("the"), add(Pick(kRoomNouns, rng)), add("at"), add("the");
      add(Pick(kVenues, rng)), add("was"), add(Pick(kNeutralAdj, rng));
      add("and"), add(Pick(kNeutralAdj, rng)), add(".");
      break;
    // Cases 22-28 mirror the same shapes with sentiment adjectives but one
    // noun slot swapped to kThings (never a food, room, show, or service
    // word), so these also stay public-only.
    case 22:
      add("the"), add(Pick(kThings, rng)), add("at"), add("the");
      add(Pick(kVenues, rng)), add("was"), add(Pick(opinion(), rng));
      add(".");
      break;
    case 23:
      add("i"), add(Pick(kOpinionVerbs, rng)), add("the");
      add(Pick(kThings, rng)), add("because"), add("it"), add("was");
      add(Pick(opinion(), rng)), add(".");
      break;
    case 24:
      add("the"), add(Pick(kServiceNouns, rng)), add("was");
      add(Pick(opinion(), rng)), add("and"), add("the");
      add(Pick(kThings, rng)), add("was"), add(Pick(opinion(), rng)), add(".");
      break;
    case 25:
      add("what"), add("a"), add(Pick(opinion(), rng)), add(Pick(kThings, rng));
      add("!");
      break;
    case 26:
      add("the"), add(Pick(kThings, rng)), add("was"), add("really");
      add(Pick(opinion(), rng)), add(".");
      break;
    case 27:
      add("we"), add("ordered"), add("the"), add(Pick(kThings, rng));
      add("and"), add("it"), add("was"), add(Pick(opinion(), rng)), add(".");
      break;
    case 28: {
      const Pool& adj = opinion();
      add("the"), add(Pick(kThings, rng)), add("at"), add("the");
      add(Pick(kVenues, rng)), add("was"), add(Pick(adj, rng));
      add("and"), add(Pick(adj, rng)), add(".");
      break;
    }
    case 29: {
      const Pool& adj = opinion();
      add("the"), add(Pick(domain, rng)), add("at"), add("the");
      add(Pick(kPublicPlaces, rng)), add("was"), add(Pick(adj, rng));
      add("and"), add(Pick(adj, rng)), add(".");
      break;
    }
    case 30:
      add("the"), add(Pick(domain, rng)), add("at"), add("the");
      add(Pick(kPublicPlaces, rng)), add("was"), add(Pick(opinion(), rng));
      add(".");
      break;
    default:
      // Venue words as subjects; the sentiment side never uses "near".
      add("the"), add(Pick(kVenues, rng)), add("near"), add("the");
      add(Pick(kPublicPlaces, rng)), add("was"), add(Pick(opinion(), rng));
      add(".");
      break;
  }
  return s;
}

std::string SentimentSentence(bool positive, RngStream& rng) {
  const Pool& adj = positive ? kPositiveAdj : kNegativeAdj;
  const Pool& verb_pool = kOpinionVerbs;
  // Opinion verbs agreeing with the label keep the task learnable.
  const std::size_t verb_base = positive ? 0 : 2;
  std::string s;
  auto add = [&s](const std::string& w) {
    if (!s.empty()) s.push_back(' ');
    s += w;
  };
  switch (rng.UniformInt(7)) {
    case 0:
      add("the"), add(Pick(kFoods, rng)), add("at"), add("the");
      add(Pick(kVenues, rng)), add("was"), add(Pick(adj, rng)), add(".");
      break;
    case 1:
      add("i"), add(verb_pool[verb_base + rng.UniformInt(2)]), add("the");
      add(Pick(kFoods, rng)), add("because"), add("it"), add("was");
      add(Pick(adj, rng)), add(".");
      break;
    case 2:
      add("the"), add(Pick(kServiceNouns, rng)), add("was"), add(Pick(adj, rng));
      add("and"), add("the"), add(Pick(kFoods, rng)), add("was");
      add(Pick(adj, rng)), add(".");
      break;
    case 3:
      add("what"), add("a"), add(Pick(adj, rng)), add(Pick(kShows, rng));
      add("!");
      break;
    case 4:
      add("the"), add(Pick(kShows, rng)), add("was"), add("really");
      add(Pick(adj, rng)), add(".");
      break;
    case 5:
      add("we"), add("ordered"), add("the"), add(Pick(kFoods, rng));
      add("and"), add("it"), add("was"), add(Pick(adj, rng)), add(".");
      break;
    default:
      add("the"), add(Pick(kRoomNouns, rng)), add("at"), add("the");
      add(Pick(kVenues, rng)), add("was"), add(Pick(adj, rng)), add("and");
      add(Pick(adj, rng)), add(".");
      break;
  }
  return s;
}

// One sentence per lexicon word, in public-only frames, so the public corpus
// contains every pool word at least once regardless of `count` sampling.
std::vector<std::string> CoverageSentences() {
  const Pool domain = DomainNouns();
  std::vector<std::string> out;
  std::size_t i = 0;
  auto person = [&] { return kPeople[i % kPeople.size()]; };
  auto action = [&] { return kActions[i % kActions.size()]; };
  auto thing = [&] { return kThings[i % kThings.size()]; };
  auto place = [&] { return kPublicPlaces[i % kPublicPlaces.size()]; };
  auto neutral = [&] { return kNeutralAdj[i % kNeutralAdj.size()]; };
  auto timeword = [&] { return kTimeWords[i % kTimeWords.size()]; };
  auto join = [](std::initializer_list<std::string> words) {
    std::string s;
    for (const std::string& w : words) {
      if (!s.empty()) s.push_back(' ');
      s += w;
    }
    return s;
  };

  for (const char* w : kPeople) {
    out.push_back(join({"the", w, action(), "the", thing(), "."})), ++i;
  }
  for (const char* w : kThings) {
    out.push_back(join({"the", person(), action(), "the", w, "."})), ++i;
  }
  for (const char* w : kActions) {
    out.push_back(join({"the", person(), w, "the", thing(), "."})), ++i;
  }
  for (const char* w : domain) {
    out.push_back(
        join({"the", person(), action(), "the", w, timeword(), "."})),
        ++i;
  }
  for (const char* w : kVenues) {
    out.push_back(join({"the", person(), action(), "the", thing(), "near",
                        "the", w, "."})),
        ++i;
  }
  for (const Pool* adj : {&kPositiveAdj, &kNegativeAdj}) {
    for (std::size_t j = 0; j < adj->size(); ++j) {
      out.push_back(join({"the", thing(), "in", "the", place(), "was",
                          (*adj)[j], "and", (*adj)[(j + 1) % adj->size()],
                          "."})),
          ++i;
    }
  }
  for (const char* w : kNeutralAdj) {
    out.push_back(join({"the", person(), action(), "the", w, thing(), "."})),
        ++i;
  }
  for (const char* w : kPublicPlaces) {
    out.push_back(
        join({"the", person(), action(), "the", thing(), "at", "the", w,
              "."})),
        ++i;
  }
  for (std::size_t j = 0; j < kDeterminers.size(); ++j) {
    out.push_back(join({kDeterminers[j], neutral(), person(), action(),
                        kDeterminers[(j + 1) % kDeterminers.size()], thing(),
                        timeword(), "."})),
        ++i;
  }
  for (const char* w : kTimeWords) {
    out.push_back(
        join({w, "the", person(), action(), "the", thing(), "again", "."})),
        ++i;
  }
  for (const char* w : kOpinionVerbs) {
    out.push_back(join({"i", w, "the", thing(), "because", "it", "was",
                        neutral(), "."})),
        ++i;
  }
  out.push_back(join({"what", "a", neutral(), thing(), "!"})), ++i;
  out.push_back(join({"it", "was", "a", "really", neutral(), thing(), "."})),
      ++i;
  out.push_back(join({"we", "visited", "the", place(), "and", action(), "the",
                      thing(), "."})),
      ++i;
  out.push_back(join({"we", "watched", "the", person(), "at", "the", place(),
                      "."})),
      ++i;
  out.push_back(join({"the", person(), "kept", "the", thing(), "in", "the",
                      neutral(), place(), "."})),
      ++i;
  return out;
}

}  // namespace

std::vector<LabeledDocument> GeneratePublicCorpus(int count,
                                                  std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("generator: count must be >= 0");
  RngStream root(seed);
  std::vector<LabeledDocument> docs;
  docs.reserve(static_cast<std::size_t>(count));
  const std::vector<std::string> coverage = CoverageSentences();
  for (int i = 0; i < count; ++i) {
    LabeledDocument doc;
    if (static_cast<std::size_t>(i) < coverage.size()) {
      doc.text = coverage[static_cast<std::size_t>(i)];
    } else {
      RngStream rng = root.Derive(static_cast<std::uint64_t>(i));
      doc.text = PublicSentence(rng);
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<LabeledDocument> GenerateSentimentCorpus(int count,
                                                     std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("generator: count must be >= 0");
  RngStream root(seed);
  std::vector<LabeledDocument> docs;
  docs.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    RngStream rng = root.Derive(static_cast<std::uint64_t>(i));
    const bool positive = (i % 2) == 0;
    LabeledDocument doc;
    doc.text = SentimentSentence(positive, rng);
    doc.label = positive ? "pos" : "neg";
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace dprw
