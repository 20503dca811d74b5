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

#include "dprw/pipeline.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "json.hpp"

namespace dprw {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Corpora are functions of fixed seeds, so experiments that differ only in
// the model seed are trained and evaluated on identical data.
constexpr std::uint64_t kPublicCorpusSeed = 11;
constexpr std::uint64_t kSentimentCorpusSeed = 22;
constexpr std::uint64_t kPublicSplitSeed = 33;
constexpr std::uint64_t kDatasetSplitSeed = 44;

// Stage indices for deriving independent stage seeds from the experiment
// seed.
constexpr std::uint64_t kStreamPretrain = 1;
constexpr std::uint64_t kStreamPrune = 2;
constexpr std::uint64_t kStreamNoisy = 3;
constexpr std::uint64_t kStreamRewrite = 4;
constexpr std::uint64_t kStreamClassifier = 5;

std::uint64_t SubSeed(std::uint64_t seed, std::uint64_t stream,
                      std::uint64_t lane = 0) {
  return MixBits(seed ^ MixBits(stream * 1000003 + lane + 1));
}

std::string FormatReal(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", value);
  return buf;
}

class StageTimer {
 public:
  void Start() { begin_ = std::chrono::steady_clock::now(); }
  double Stop() {
    const auto end = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(end - begin_).count();
  }

 private:
  std::chrono::steady_clock::time_point begin_;
};

void CheckKeys(const json& object, const std::set<std::string>& known,
               const std::string& where) {
  for (const auto& [key, value] : object.items()) {
    if (known.find(key) == known.end()) {
      throw std::invalid_argument("config: unknown key \"" + key + "\" in " +
                                  where);
    }
  }
}

json PrivacyToJson(const PrivacyParams& privacy) {
  json j{{"delta", privacy.delta},
         {"mechanism", MechanismName(privacy.mechanism)}};
  if (privacy.infinite) {
    j["epsilon"] = "inf";
  } else {
    j["epsilon"] = privacy.epsilon;
  }
  return j;
}

PrivacyParams PrivacyFromJson(const json& j) {
  CheckKeys(j, {"epsilon", "delta", "mechanism"}, "privacy");
  PrivacyParams privacy;
  if (j.contains("mechanism")) {
    privacy.mechanism = MechanismFromName(j.at("mechanism"));
  }
  privacy.delta = j.value("delta", 0.0);
  if (j.contains("epsilon")) {
    if (j.at("epsilon").is_string()) {
      SetEpsilon(privacy, j.at("epsilon").get<std::string>());
    } else {
      privacy.epsilon = j.at("epsilon").get<double>();
      privacy.infinite = false;
    }
  }
  return privacy;
}

json ScheduleToJson(const PruneScheduleConfig& schedule) {
  return json{{"total_iterations", schedule.total_iterations},
              {"use_iteration", schedule.use_iteration},
              {"quantile", schedule.quantile},
              {"retrain_steps", schedule.retrain_steps},
              {"retrain_clip_c", schedule.retrain_clip_c}};
}

PruneScheduleConfig ScheduleFromJson(const json& j) {
  CheckKeys(j,
            {"total_iterations", "use_iteration", "quantile", "retrain_steps",
             "retrain_clip_c"},
            "schedule");
  PruneScheduleConfig schedule;
  schedule.total_iterations =
      j.value("total_iterations", schedule.total_iterations);
  schedule.use_iteration = j.value("use_iteration", schedule.use_iteration);
  schedule.quantile = j.value("quantile", schedule.quantile);
  schedule.retrain_steps = j.value("retrain_steps", schedule.retrain_steps);
  schedule.retrain_clip_c =
      j.value("retrain_clip_c", schedule.retrain_clip_c);
  return schedule;
}

json ModelToJson(const ModelConfig& model) {
  return json{{"architecture", ArchitectureName(model.architecture)},
              {"vocab_size", model.vocab_size},
              {"max_len", model.max_len},
              {"embed_dim", model.embed_dim},
              {"d_tok", model.d_tok},
              {"layers", model.layers},
              {"heads", model.heads},
              {"hidden", model.hidden}};
}

ModelConfig ModelFromJson(const json& j) {
  CheckKeys(j,
            {"architecture", "vocab_size", "max_len", "embed_dim", "d_tok",
             "layers", "heads", "hidden"},
            "model");
  ModelConfig model;
  if (j.contains("architecture")) {
    model.architecture = ArchitectureFromName(j.at("architecture"));
  }
  model.vocab_size = j.value("vocab_size", model.vocab_size);
  model.max_len = j.value("max_len", model.max_len);
  model.embed_dim = j.value("embed_dim", model.embed_dim);
  model.d_tok = j.value("d_tok", model.d_tok);
  model.layers = j.value("layers", model.layers);
  model.heads = j.value("heads", model.heads);
  model.hidden = j.value("hidden", model.hidden);
  return model;
}

json TrainingToJson(const TrainingSettings& training) {
  return json{{"pretrain_steps", training.pretrain_steps},
              {"batch_size", training.batch_size},
              {"learning_rate", training.learning_rate},
              {"momentum", training.momentum},
              {"mask_prob", training.mask_prob},
              {"delete_prob", training.delete_prob},
              {"patience", training.patience},
              {"lr_reductions", training.lr_reductions},
              {"lr_decay", training.lr_decay},
              {"public_docs", training.public_docs},
              {"dataset_docs", training.dataset_docs},
              {"vocab_max", training.vocab_max}};
}

TrainingSettings TrainingFromJson(const json& j) {
  CheckKeys(j,
            {"pretrain_steps", "batch_size", "learning_rate", "momentum",
             "mask_prob", "delete_prob", "patience", "lr_reductions",
             "lr_decay", "public_docs", "dataset_docs", "vocab_max"},
            "training");
  TrainingSettings training;
  training.pretrain_steps = j.value("pretrain_steps", training.pretrain_steps);
  training.batch_size = j.value("batch_size", training.batch_size);
  training.learning_rate = j.value("learning_rate", training.learning_rate);
  training.momentum = j.value("momentum", training.momentum);
  training.mask_prob = j.value("mask_prob", training.mask_prob);
  training.delete_prob = j.value("delete_prob", training.delete_prob);
  training.patience = j.value("patience", training.patience);
  training.lr_reductions = j.value("lr_reductions", training.lr_reductions);
  training.lr_decay = j.value("lr_decay", training.lr_decay);
  training.public_docs = j.value("public_docs", training.public_docs);
  training.dataset_docs = j.value("dataset_docs", training.dataset_docs);
  training.vocab_max = j.value("vocab_max", training.vocab_max);
  return training;
}

json PrPlusToJson(const PrPlusSettings& prplus) {
  json j{{"base", prplus.base},
         {"eps_ref", prplus.eps_ref},
         {"max_epochs", prplus.max_epochs}};
  if (prplus.epochs.has_value()) {
    j["epochs"] = *prplus.epochs;
  } else {
    j["epochs"] = nullptr;
  }
  return j;
}

PrPlusSettings PrPlusFromJson(const json& j) {
  CheckKeys(j, {"base", "eps_ref", "max_epochs", "epochs"}, "prplus");
  PrPlusSettings prplus;
  prplus.base = j.value("base", prplus.base);
  prplus.eps_ref = j.value("eps_ref", prplus.eps_ref);
  prplus.max_epochs = j.value("max_epochs", prplus.max_epochs);
  if (j.contains("epochs") && !j.at("epochs").is_null()) {
    prplus.epochs = j.at("epochs").get<int>();
  }
  return prplus;
}

json PathsToJson(const PipelinePaths& paths) {
  return json{{"public_corpus", paths.public_corpus},
              {"dataset", paths.dataset},
              {"work_dir", paths.work_dir}};
}

PipelinePaths PathsFromJson(const json& j) {
  CheckKeys(j, {"public_corpus", "dataset", "work_dir"}, "paths");
  PipelinePaths paths;
  paths.public_corpus = j.value("public_corpus", paths.public_corpus);
  paths.dataset = j.value("dataset", paths.dataset);
  paths.work_dir = j.value("work_dir", paths.work_dir);
  return paths;
}

// One rewriting unit: a document, or an individual's concatenated documents
// under the concat grouping. `releases` is the k of the k*eps accounting.
struct RewriteUnit {
  int doc_id = 0;
  std::string text;
  std::string label;
  std::string individual_id;
  int releases = 1;
};

std::vector<RewriteUnit> BuildRewriteUnits(
    const std::vector<LabeledDocument>& docs, GroupingPolicy grouping,
    int doc_id_base) {
  std::vector<RewriteUnit> units;
  if (grouping == GroupingPolicy::kConcat) {
    std::unordered_map<std::string, std::size_t> by_individual;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      const LabeledDocument& doc = docs[i];
      if (!doc.individual_id.empty()) {
        auto it = by_individual.find(doc.individual_id);
        if (it != by_individual.end()) {
          units[it->second].text += " " + doc.text;
          continue;
        }
        by_individual.emplace(doc.individual_id, units.size());
      }
      units.push_back(RewriteUnit{doc_id_base + static_cast<int>(i), doc.text,
                                  doc.label, doc.individual_id, 1});
    }
    return units;
  }

  std::unordered_map<std::string, int> individual_counts;
  if (grouping == GroupingPolicy::kCompose) {
    for (const LabeledDocument& doc : docs) {
      if (!doc.individual_id.empty()) ++individual_counts[doc.individual_id];
    }
  }
  units.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const LabeledDocument& doc = docs[i];
    int releases = 1;
    if (grouping == GroupingPolicy::kCompose && !doc.individual_id.empty()) {
      releases = individual_counts[doc.individual_id];
    }
    units.push_back(RewriteUnit{doc_id_base + static_cast<int>(i), doc.text,
                                doc.label, doc.individual_id, releases});
  }
  return units;
}

double EvalLoss(Autoencoder& model, const std::vector<TokenSequence>& docs,
                int batch_size) {
  if (docs.empty()) return 0.0;
  double total = 0.0;
  std::size_t seen = 0;
  for (std::size_t start = 0; start < docs.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end =
        std::min(docs.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<TokenSequence> batch(docs.begin() + start, docs.begin() + end);
    const StepDiagnostics diag =
        model.ComputeLoss(batch, batch, LatentTransform{}, nullptr,
                          /*compute_grads=*/false);
    total += diag.loss * static_cast<double>(batch.size());
    seen += batch.size();
  }
  return total / static_cast<double>(seen);
}

// Epoch-cycling batches in a shuffled order; calls `step` with each batch
// until the step budget is spent, reshuffling between epochs. Returns the
// number of steps run in the epoch.
int RunEpoch(Autoencoder& model, const std::vector<TokenSequence>& train,
             const TrainOptions& options, int batch_size, RngStream& order_rng,
             RngStream& step_rng, int step_budget, double* last_loss) {
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  order_rng.Shuffle(order);
  int steps = 0;
  for (std::size_t start = 0; start < order.size() && steps < step_budget;
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(
        order.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<TokenSequence> batch;
    batch.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) batch.push_back(train[order[i]]);
    const StepDiagnostics diag = model.TrainStep(batch, options, step_rng);
    if (!std::isfinite(diag.loss)) {
      throw std::runtime_error("training diverged: non-finite loss");
    }
    *last_loss = diag.loss;
    ++steps;
  }
  return steps;
}

std::string JoinWords(const std::vector<std::string>& words) {
  std::string out;
  for (const std::string& word : words) {
    if (!out.empty()) out += ' ';
    out += word;
  }
  return out;
}

std::uint64_t VocabFingerprint(const Vocab& vocab) {
  const std::string joined = JoinWords(vocab.words());
  return Fnv1aText(joined);
}

}  // namespace

std::string VariantName(Variant variant) {
  switch (variant) {
    case Variant::kBaselineNormClip:
      return "baseline";
    case Variant::kClv:
      return "clv";
    case Variant::kPr:
      return "pr";
    case Variant::kPrPlus:
      return "pr-plus";
  }
  throw std::logic_error("unreachable variant");
}

Variant VariantFromName(const std::string& name) {
  if (name == "baseline") return Variant::kBaselineNormClip;
  if (name == "clv") return Variant::kClv;
  if (name == "pr") return Variant::kPr;
  if (name == "pr-plus") return Variant::kPrPlus;
  throw std::invalid_argument("unknown variant: " + name);
}

std::string GroupingPolicyName(GroupingPolicy policy) {
  switch (policy) {
    case GroupingPolicy::kNone:
      return "none";
    case GroupingPolicy::kCompose:
      return "compose";
    case GroupingPolicy::kConcat:
      return "concat";
  }
  throw std::logic_error("unreachable grouping policy");
}

GroupingPolicy GroupingPolicyFromName(const std::string& name) {
  if (name == "none") return GroupingPolicy::kNone;
  if (name == "compose") return GroupingPolicy::kCompose;
  if (name == "concat") return GroupingPolicy::kConcat;
  throw std::invalid_argument("unknown grouping policy: " + name);
}

void SetEpsilon(PrivacyParams& params, const std::string& text) {
  if (text == "inf") {
    params.infinite = true;
    params.epsilon = 0.0;
    return;
  }
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("epsilon: expected \"inf\" or a number, got " +
                                text);
  }
  if (used != text.size() || !(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument("epsilon: expected \"inf\" or a positive "
                                "finite number, got " +
                                text);
  }
  params.infinite = false;
  params.epsilon = value;
}

std::string EpsilonText(const PrivacyParams& params) {
  return params.infinite ? "inf" : FormatReal(params.epsilon);
}

void TrainingSettings::Validate() const {
  if (pretrain_steps < 1 || batch_size < 1 || patience < 1 ||
      public_docs < 1 || dataset_docs < 1) {
    throw std::invalid_argument("training: counts must be positive");
  }
  if (!(learning_rate > 0.0) || momentum < 0.0 || momentum >= 1.0) {
    throw std::invalid_argument(
        "training: need learning_rate > 0 and momentum in [0, 1)");
  }
  if (mask_prob < 0.0 || delete_prob < 0.0 ||
      mask_prob + delete_prob > 1.0) {
    throw std::invalid_argument(
        "training: corruption probabilities must be >= 0 with sum <= 1");
  }
  if (lr_reductions < 0 || !(lr_decay > 0.0) || lr_decay >= 1.0) {
    throw std::invalid_argument(
        "training: need lr_reductions >= 0 and lr_decay in (0, 1)");
  }
  if (vocab_max <= Vocab::kReservedCount) {
    throw std::invalid_argument("training: vocab_max too small");
  }
}

int PrPlusSettings::ResolveEpochs(const PrivacyParams& privacy) const {
  if (epochs.has_value()) {
    if (*epochs < 1) {
      throw std::invalid_argument("prplus: epochs must be positive");
    }
    return *epochs;
  }
  if (!(base > 0.0) || !(eps_ref > 0.0) || max_epochs < 1) {
    throw std::invalid_argument("prplus: invalid epoch schedule");
  }
  if (privacy.infinite) return 1;
  const double raw = std::ceil(base * eps_ref / privacy.epsilon);
  return std::clamp(static_cast<int>(raw), 1, max_epochs);
}

ClipRule ExperimentConfig::clip_rule() const {
  return variant == Variant::kBaselineNormClip ? ClipRule::kTwoSigma
                                               : ClipRule::kHalfSigma;
}

ClipMode ExperimentConfig::clip_mode() const {
  return variant == Variant::kBaselineNormClip ? ClipMode::kByNorm
                                               : ClipMode::kByValue;
}

void ExperimentConfig::Validate() const {
  privacy.Validate();
  training.Validate();
  if (beam_width < 1) {
    throw std::invalid_argument("config: beam_width must be positive");
  }
  if (clip_c < 0.0) {
    throw std::invalid_argument("config: clip_c must be >= 0");
  }
  const bool pruned_variant =
      variant == Variant::kPr || variant == Variant::kPrPlus;
  if (pruned_variant &&
      model.architecture != Architecture::kTinyTransformer) {
    throw std::invalid_argument(
        "config: pruning variants require the transformer architecture");
  }
  if (pruned_variant && !schedule.has_value()) {
    throw std::invalid_argument(
        "config: pruning variants require a schedule");
  }
  if (schedule.has_value()) {
    const PruneScheduleConfig& s = *schedule;
    if (s.total_iterations < 1 || s.retrain_steps < 1 ||
        !(s.quantile > 0.0) || !(s.quantile < 1.0) || s.use_iteration < -1 ||
        s.use_iteration > s.total_iterations) {
      throw std::invalid_argument("config: invalid prune schedule");
    }
  }
  if (variant == Variant::kPrPlus) {
    prplus.ResolveEpochs(privacy);
  }
}

ExperimentConfig ExperimentConfig::FromJsonText(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: not valid JSON: ") +
                                e.what());
  }
  CheckKeys(j,
            {"variant", "model", "privacy", "clip_c", "schedule", "prplus",
             "seed", "beam_width", "audit", "grouping", "paths", "training"},
            "config");
  ExperimentConfig config;
  if (j.contains("variant")) {
    config.variant = VariantFromName(j.at("variant"));
  }
  if (j.contains("model")) config.model = ModelFromJson(j.at("model"));
  if (j.contains("privacy")) config.privacy = PrivacyFromJson(j.at("privacy"));
  config.clip_c = j.value("clip_c", config.clip_c);
  if (j.contains("schedule") && !j.at("schedule").is_null()) {
    config.schedule = ScheduleFromJson(j.at("schedule"));
  }
  if (j.contains("prplus")) config.prplus = PrPlusFromJson(j.at("prplus"));
  config.seed = j.value("seed", config.seed);
  config.beam_width = j.value("beam_width", config.beam_width);
  config.audit = j.value("audit", config.audit);
  if (j.contains("grouping")) {
    config.grouping = GroupingPolicyFromName(j.at("grouping"));
  }
  if (j.contains("paths")) config.paths = PathsFromJson(j.at("paths"));
  if (j.contains("training")) {
    config.training = TrainingFromJson(j.at("training"));
  }
  // Pruning variants default to the standard schedule when none is given.
  if ((config.variant == Variant::kPr || config.variant == Variant::kPrPlus) &&
      !config.schedule.has_value()) {
    config.schedule = PruneScheduleConfig{};
    config.schedule->retrain_clip_c = 0.0;  // resolved from the clip estimate
  }
  return config;
}

ExperimentConfig ExperimentConfig::FromJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("config: cannot open " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return FromJsonText(buffer.str());
}

std::string ExperimentConfig::ToJsonText() const {
  json j{{"variant", VariantName(variant)},
         {"model", ModelToJson(model)},
         {"privacy", PrivacyToJson(privacy)},
         {"clip_c", clip_c},
         {"prplus", PrPlusToJson(prplus)},
         {"seed", seed},
         {"beam_width", beam_width},
         {"audit", audit},
         {"grouping", GroupingPolicyName(grouping)},
         {"paths", PathsToJson(paths)},
         {"training", TrainingToJson(training)}};
  if (schedule.has_value()) {
    j["schedule"] = ScheduleToJson(*schedule);
  } else {
    j["schedule"] = nullptr;
  }
  return j.dump(2);
}

void SaveRewriteRecords(const std::vector<RewriteRecord>& records,
                        const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw std::runtime_error("rewrite: cannot write " + path);
  }
  for (const RewriteRecord& record : records) {
    json j{{"doc_id", record.doc_id},
           {"rewritten_text", record.rewritten_text},
           {"label", record.label},
           {"epsilon_charged", record.epsilon_charged}};
    if (!record.original_text.empty()) {
      j["original_text"] = record.original_text;
    }
    if (!record.individual_id.empty()) {
      j["individual_id"] = record.individual_id;
    }
    out << j.dump() << "\n";
  }
  if (!out) {
    throw std::runtime_error("rewrite: short write to " + path);
  }
}

std::vector<RewriteRecord> LoadRewriteRecords(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("rewrite: cannot open " + path);
  }
  std::vector<RewriteRecord> records;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      throw std::runtime_error("rewrite: malformed JSON at line " +
                               std::to_string(line_number) + " of " + path);
    }
    RewriteRecord record;
    record.doc_id = j.at("doc_id").get<int>();
    record.rewritten_text = j.at("rewritten_text").get<std::string>();
    record.label = j.at("label").get<std::string>();
    record.epsilon_charged = j.at("epsilon_charged").get<double>();
    record.original_text = j.value("original_text", std::string());
    record.individual_id = j.value("individual_id", std::string());
    records.push_back(std::move(record));
  }
  return records;
}

PreparedData PrepareData(const ExperimentConfig& config) {
  if (!config.paths.dataset.empty() &&
      config.paths.dataset == config.paths.public_corpus) {
    throw std::invalid_argument(
        "pipeline: public corpus and dataset must be distinct files");
  }
  std::vector<LabeledDocument> public_docs =
      config.paths.public_corpus.empty()
          ? GeneratePublicCorpus(config.training.public_docs,
                                 kPublicCorpusSeed)
          : LoadTextLines(config.paths.public_corpus);
  std::vector<LabeledDocument> dataset_docs =
      config.paths.dataset.empty()
          ? GenerateSentimentCorpus(config.training.dataset_docs,
                                    kSentimentCorpusSeed)
          : LoadJsonl(config.paths.dataset);
  if (public_docs.empty()) {
    throw std::invalid_argument("pipeline: empty public corpus");
  }
  if (dataset_docs.empty()) {
    throw std::invalid_argument("pipeline: empty dataset");
  }

  // The pretraining text must not contain any downstream document.
  std::unordered_set<std::string> public_texts;
  public_texts.reserve(public_docs.size());
  for (const LabeledDocument& doc : public_docs) {
    public_texts.insert(NormalizeText(doc.text));
  }
  for (const LabeledDocument& doc : dataset_docs) {
    if (public_texts.count(NormalizeText(doc.text)) > 0) {
      throw std::runtime_error(
          "pipeline: downstream document found in the public corpus: " +
          doc.text);
    }
  }

  PreparedData data;
  data.vocab = Vocab::Build(public_docs, config.training.vocab_max);
  CorpusSplit public_split =
      SplitCorpus(public_docs, 0.9, 0.1, 0.0, kPublicSplitSeed);
  data.public_train = std::move(public_split.train);
  data.public_val = std::move(public_split.val);
  data.dataset = SplitCorpus(dataset_docs, 0.6, 0.2, 0.2, kDatasetSplitSeed);
  return data;
}

std::vector<TokenSequence> TokenizeAll(
    const std::vector<LabeledDocument>& docs, const Vocab& vocab,
    int length) {
  std::vector<TokenSequence> out;
  out.reserve(docs.size());
  for (const LabeledDocument& doc : docs) {
    out.push_back(Tokenize(doc.text, vocab, length));
  }
  return out;
}

Autoencoder Pretrain(const ExperimentConfig& config,
                     const std::vector<TokenSequence>& train,
                     const std::vector<TokenSequence>& val,
                     PretrainStats* stats) {
  if (train.empty()) {
    throw std::invalid_argument("pretrain: empty training set");
  }
  Autoencoder model = Autoencoder::Create(
      config.model, SubSeed(config.seed, kStreamPretrain, 0));
  RngStream order_rng(SubSeed(config.seed, kStreamPretrain, 1));
  RngStream step_rng(SubSeed(config.seed, kStreamPretrain, 2));

  TrainOptions options;
  options.learning_rate = config.training.learning_rate;
  options.momentum = config.training.momentum;
  options.corruption.mask_prob = config.training.mask_prob;
  options.corruption.delete_prob = config.training.delete_prob;

  PretrainStats local;
  PretrainStats& st = stats != nullptr ? *stats : local;
  st = PretrainStats{};
  st.best_val_loss = std::numeric_limits<double>::infinity();

  Autoencoder best = model;
  int epochs_since_best = 0;
  int reductions_done = 0;
  while (st.steps_run < config.training.pretrain_steps) {
    ++st.epochs_run;
    st.steps_run += RunEpoch(model, train, options, config.training.batch_size,
                             order_rng, step_rng,
                             config.training.pretrain_steps - st.steps_run,
                             &st.final_train_loss);
    if (val.empty()) continue;
    const double val_loss = EvalLoss(model, val, config.training.batch_size);
    if (val_loss < st.best_val_loss - 1e-9) {
      st.best_val_loss = val_loss;
      best = model;
      epochs_since_best = 0;
    } else if (++epochs_since_best >= config.training.patience) {
      // Plateau: rewind to the best weights and anneal, or stop once the
      // annealing budget is spent.
      if (reductions_done >= config.training.lr_reductions) break;
      ++reductions_done;
      options.learning_rate *= config.training.lr_decay;
      model = best;
      epochs_since_best = 0;
    }
  }
  if (!val.empty()) model = best;
  st.lr_reductions_used = reductions_done;
  return model;
}

ClipEstimate EstimateClipFromModel(const Autoencoder& model,
                                   const std::vector<TokenSequence>& docs,
                                   ClipRule rule, ClipMode mode) {
  std::vector<double> pooled;
  for (const TokenSequence& seq : docs) {
    const LatentVector latent = model.Encode(seq);
    if (mode == ClipMode::kByNorm) {
      // Norm clipping bounds the whole-latent l2 norm, so the constant is
      // chosen from the distribution of norms, one sample per document.
      pooled.push_back(latent.values.norm());
    } else {
      for (Eigen::Index r = 0; r < latent.values.rows(); ++r) {
        for (Eigen::Index c = 0; c < latent.values.cols(); ++c) {
          pooled.push_back(latent.values(r, c));
        }
      }
    }
  }
  return EstimateClipConstant(pooled, rule);
}

Sensitivity VariantSensitivity(const ExperimentConfig& config, double c,
                               const PruneMask& mask) {
  if (config.variant == Variant::kBaselineNormClip) {
    return NormClipSensitivity(c, config.model.LatentDim());
  }
  const std::int64_t n = EffectiveDim(mask, config.model.max_len);
  return ClvSensitivity(c, n);
}

void TrainNoisy(Autoencoder& model, const PruneMask& mask,
                const ExperimentConfig& config, double clip_c,
                const std::vector<TokenSequence>& train, int epochs,
                RngStream& rng) {
  if (train.empty()) {
    throw std::invalid_argument("train-noisy: empty training set");
  }
  const Sensitivity sensitivity = VariantSensitivity(config, clip_c, mask);
  const NoiseSpec noise = CalibrateNoise(sensitivity, config.privacy);

  TrainOptions options;
  options.learning_rate = config.training.learning_rate;
  options.momentum = config.training.momentum;
  options.corruption.mask_prob = config.training.mask_prob;
  options.corruption.delete_prob = config.training.delete_prob;
  options.transform.mask = &mask;
  // The adaptation transform mirrors the deployment channel: at finite
  // epsilon that is prune + clip + noise; at epsilon = infinity the channel
  // is the pruned noiseless reconstruction, so no clip is applied either.
  if (!config.privacy.infinite) {
    options.transform.clip = ClipSpec::ByValue(clip_c);
  }
  options.transform.noise = noise;

  RngStream order_rng = rng.Derive(1);
  RngStream step_rng = rng.Derive(2);
  const int steps_per_epoch = static_cast<int>(
      (train.size() + static_cast<std::size_t>(config.training.batch_size) -
       1) /
      static_cast<std::size_t>(config.training.batch_size));
  double last_loss = 0.0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    RunEpoch(model, train, options, config.training.batch_size, order_rng,
             step_rng, steps_per_epoch, &last_loss);
  }
}

std::vector<LabeledDocument> RewriteUnitsAsDocuments(
    const std::vector<LabeledDocument>& docs, GroupingPolicy grouping) {
  std::vector<LabeledDocument> out;
  for (const RewriteUnit& unit : BuildRewriteUnits(docs, grouping, 0)) {
    out.push_back(LabeledDocument{unit.text, unit.label, unit.individual_id});
  }
  return out;
}

std::vector<RewriteRecord> RewriteDataset(
    const Autoencoder& model, const Vocab& vocab, const PruneMask& mask,
    const ExperimentConfig& config, double clip_c,
    const std::vector<LabeledDocument>& docs, int doc_id_base) {
  if (!model.frozen()) {
    throw std::logic_error("rewrite: requires a frozen model");
  }
  if (docs.empty()) {
    std::cerr << "warning: rewrite called on an empty dataset\n";
    return {};
  }
  const bool noiseless = config.privacy.infinite;
  if (!noiseless && !(clip_c > 0.0)) {
    throw std::invalid_argument("rewrite: clip constant must be positive");
  }
  if (!noiseless && config.privacy.mechanism == Mechanism::kGaussian) {
    const double guideline = DeltaGuideline(docs.size());
    if (config.privacy.delta > guideline) {
      std::cerr << "warning: delta " << FormatReal(config.privacy.delta)
                << " exceeds the 1/N guideline "
                << FormatReal(guideline) << " for " << docs.size()
                << " documents\n";
    }
  }

  const bool transformer =
      config.model.architecture == Architecture::kTinyTransformer;
  const PruneMask* mask_ptr = transformer ? &mask : nullptr;

  // The infinite budget reproduces the plain (no-DP) rewrite: the deployed
  // prune mask is part of the frozen model, so it stays, but the clip and
  // noise exist only to bound and realize the privacy mechanism and are
  // skipped.
  LatentTransform transform;
  transform.mask = mask_ptr;
  if (!noiseless) {
    transform.clip = config.clip_mode() == ClipMode::kByNorm
                         ? ClipSpec::ByNorm(clip_c)
                         : ClipSpec::ByValue(clip_c);
    transform.noise =
        CalibrateNoise(VariantSensitivity(config, clip_c, mask),
                       config.privacy);
  }

  const std::vector<RewriteUnit> units =
      BuildRewriteUnits(docs, config.grouping, doc_id_base);
  const RngStream root(SubSeed(config.seed, kStreamRewrite, 0));
  const DecodeStrategy strategy = DecodeStrategy::Beam(config.beam_width);

  // Documents are rewritten in parallel: the frozen model is shared
  // read-only, every document owns a noise stream derived from its id, and
  // the output slot is fixed by position, so the result does not depend on
  // scheduling.
  std::vector<RewriteRecord> records(units.size());
  const auto rewrite_one = [&](std::size_t i) {
    const RewriteUnit& unit = units[i];
    const TokenSequence seq = Tokenize(unit.text, vocab, config.model.max_len);
    const LatentVector latent = model.Encode(seq);
    LatentVector transformed;
    RngStream doc_rng = root.Derive(static_cast<std::uint64_t>(unit.doc_id));
    transformed.values = ApplyLatentTransform(
        latent.values, transform, model.config(),
        noiseless ? nullptr : &doc_rng, nullptr);
    const TokenSequence decoded = model.Decode(transformed, strategy);

    RewriteRecord& record = records[i];
    record.doc_id = unit.doc_id;
    if (config.audit) record.original_text = unit.text;
    record.rewritten_text = Detokenize(decoded.ids, vocab);
    record.label = unit.label;
    record.individual_id = unit.individual_id;
    record.epsilon_charged =
        noiseless ? 0.0
                  : ComposeBudget(config.privacy.epsilon, unit.releases);
  };

  const unsigned worker_count = std::min<unsigned>(
      std::max(1u, std::thread::hardware_concurrency()),
      static_cast<unsigned>(units.size()));
  if (worker_count <= 1) {
    for (std::size_t i = 0; i < units.size(); ++i) rewrite_one(i);
    return records;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> workers;
  workers.reserve(worker_count);
  for (unsigned w = 0; w < worker_count; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= units.size()) return;
        try {
          rewrite_one(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& worker : workers) worker.join();
  if (first_error) std::rethrow_exception(first_error);
  return records;
}

EvaluationResult EvaluateRewrites(
    const std::vector<LabeledDocument>& original_train,
    const std::vector<LabeledDocument>& original_val,
    const std::vector<LabeledDocument>& original_test,
    const std::vector<RewriteRecord>& rewritten_train,
    const std::vector<RewriteRecord>& rewritten_val, std::uint64_t seed) {
  if (original_train.size() != rewritten_train.size() ||
      original_val.size() != rewritten_val.size()) {
    throw std::invalid_argument(
        "evaluate: original and rewritten partitions must align");
  }
  EvaluationResult result;

  std::vector<std::string> references, hypotheses;
  references.reserve(original_train.size());
  hypotheses.reserve(rewritten_train.size());
  for (std::size_t i = 0; i < original_train.size(); ++i) {
    references.push_back(original_train[i].text);
    hypotheses.push_back(rewritten_train[i].rewritten_text);
  }
  result.bleu = CorpusBleuText(references, hypotheses);

  std::set<std::string> class_set;
  for (const LabeledDocument& doc : original_train) {
    class_set.insert(doc.label);
  }
  result.class_count = static_cast<int>(class_set.size());
  result.chance_level =
      class_set.empty() ? 0.0 : 1.0 / static_cast<double>(class_set.size());

  std::vector<LabeledDocument> rewritten_train_docs, rewritten_val_docs;
  rewritten_train_docs.reserve(rewritten_train.size());
  for (const RewriteRecord& record : rewritten_train) {
    rewritten_train_docs.push_back(
        LabeledDocument{record.rewritten_text, record.label, ""});
  }
  rewritten_val_docs.reserve(rewritten_val.size());
  for (const RewriteRecord& record : rewritten_val) {
    rewritten_val_docs.push_back(
        LabeledDocument{record.rewritten_text, record.label, ""});
  }

  ClassifierOptions options;
  options.seed = seed;
  result.f1_rewritten =
      TextClassifier::Train(rewritten_train_docs, rewritten_val_docs, options)
          .EvaluateMacroF1(original_test);
  result.f1_original =
      TextClassifier::Train(original_train, original_val, options)
          .EvaluateMacroF1(original_test);
  return result;
}

namespace {

// Shared stage machinery behind RunExperiment and the Ensure* entry points.
class PipelineDriver {
 public:
  explicit PipelineDriver(ExperimentConfig config)
      : config_(std::move(config)) {
    config_.Validate();
    data_ = PrepareData(config_);
    config_.model.vocab_size = data_.vocab.size();
    config_.model.Validate();
    public_train_seqs_ =
        TokenizeAll(data_.public_train, data_.vocab, config_.model.max_len);
    public_val_seqs_ =
        TokenizeAll(data_.public_val, data_.vocab, config_.model.max_len);
  }

  const ExperimentConfig& config() const { return config_; }
  const PreparedData& data() const { return data_; }
  const json& stage_log() const { return stage_log_; }
  double clip_c_used() const { return clip_c_used_; }
  const ClipEstimate& clip_estimate() const { return clip_estimate_; }

  std::string PublicIdentity() const {
    if (!config_.paths.public_corpus.empty()) {
      return "file:" + config_.paths.public_corpus;
    }
    return "generated:" + std::to_string(config_.training.public_docs) + ":" +
           std::to_string(kPublicCorpusSeed);
  }

  fs::path WorkDir() const { return fs::path(config_.paths.work_dir); }

  std::string PretrainDigest() const {
    json payload{{"stage", "pretrain"},
                 {"model", ModelToJson(config_.model)},
                 {"training", TrainingToJson(config_.training)},
                 {"seed", config_.seed},
                 {"public", PublicIdentity()},
                 {"vocab", DigestHex(VocabFingerprint(data_.vocab))}};
    return DigestHex(Fnv1aText(payload.dump()));
  }

  std::string EnsurePretrain() {
    const std::string digest = PretrainDigest();
    const fs::path dir =
        WorkDir() / ("ck-pretrain-" +
                     ArchitectureName(config_.model.architecture) + "-s" +
                     std::to_string(config_.seed));
    StageTimer timer;
    timer.Start();
    bool reused = true;
    if (!CheckpointMatches(dir.string(), digest)) {
      reused = false;
      PretrainStats stats;
      Autoencoder model =
          Pretrain(config_, public_train_seqs_, public_val_seqs_, &stats);
      const json annotations{{"stage", "pretrain"},
                             {"steps_run", stats.steps_run},
                             {"epochs_run", stats.epochs_run},
                             {"lr_reductions_used", stats.lr_reductions_used},
                             {"final_train_loss", stats.final_train_loss},
                             {"best_val_loss", stats.best_val_loss}};
      SaveCheckpoint(dir.string(), model, data_.vocab, {},
                     PruneMask::Empty(config_.model.d_tok),
                     annotations.dump(), digest);
    }
    stage_log_["pretrain"] = json{{"checkpoint", dir.string()},
                                  {"reused", reused},
                                  {"seconds", timer.Stop()}};
    pretrain_dir_ = dir.string();
    return pretrain_dir_;
  }

  // Loads the pretrained weights and fixes the rewrite clip constant from
  // held-out public latents (or the configured override).
  void LoadPretrainAndClip() {
    if (pretrain_dir_.empty()) EnsurePretrain();
    Checkpoint checkpoint = LoadCheckpoint(pretrain_dir_);
    CheckVocab(checkpoint);
    model_.emplace(std::move(checkpoint.model));
    clip_estimate_ = EstimateClipFromModel(*model_, public_val_seqs_,
                                           config_.clip_rule(),
                                           config_.clip_mode());
    clip_c_used_ =
        config_.clip_c > 0.0 ? config_.clip_c : clip_estimate_.recommended_c;
    mask_ = PruneMask::Empty(config_.model.d_tok);
    mask_history_.clear();
  }

  PruneScheduleConfig ResolvedSchedule() const {
    PruneScheduleConfig schedule = *config_.schedule;
    if (!(schedule.retrain_clip_c > 0.0)) {
      schedule.retrain_clip_c = 2.0 * clip_c_used_;
    }
    schedule.Validate();
    return schedule;
  }

  std::string EnsurePrune() {
    if (config_.model.architecture != Architecture::kTinyTransformer) {
      throw std::invalid_argument(
          "prune: channel pruning requires the transformer architecture");
    }
    if (!config_.schedule.has_value()) {
      throw std::invalid_argument(
          "prune: the configuration has no prune schedule");
    }
    if (!model_.has_value()) LoadPretrainAndClip();
    const PruneScheduleConfig schedule = ResolvedSchedule();
    json payload{{"stage", "prune"},
                 {"pretrain", PretrainDigest()},
                 {"schedule", ScheduleToJson(schedule)},
                 {"clip_c", clip_c_used_}};
    const std::string digest = DigestHex(Fnv1aText(payload.dump()));
    const fs::path dir =
        WorkDir() / ("ck-prune-s" + std::to_string(config_.seed));
    StageTimer timer;
    timer.Start();
    bool reused = true;
    json round_log = json::array();
    if (!CheckpointMatches(dir.string(), digest)) {
      reused = false;
      TrainOptions options;
      options.learning_rate = config_.training.learning_rate;
      options.momentum = config_.training.momentum;
      options.corruption.mask_prob = config_.training.mask_prob;
      options.corruption.delete_prob = config_.training.delete_prob;
      RngStream rng(SubSeed(config_.seed, kStreamPrune, 0));
      const PruneTrainResult result =
          IterativePruneTrain(*model_, public_train_seqs_, schedule, options,
                              config_.training.batch_size, rng);
      for (const PruneRoundLog& log : result.logs) {
        round_log.push_back(json{{"round", log.round},
                                 {"newly_pruned", log.newly_pruned},
                                 {"total_pruned", log.total_pruned},
                                 {"threshold", log.threshold},
                                 {"retrain_loss", log.retrain_loss}});
      }
      const json annotations{{"stage", "prune"},
                             {"schedule", ScheduleToJson(schedule)},
                             {"clip_c", clip_c_used_},
                             {"rounds", round_log}};
      SaveCheckpoint(dir.string(), *model_, data_.vocab, result.history,
                     result.deployed, annotations.dump(), digest);
    }
    Checkpoint checkpoint = LoadCheckpoint(dir.string());
    CheckVocab(checkpoint);
    model_.emplace(std::move(checkpoint.model));
    mask_ = checkpoint.deployed_mask;
    mask_history_ = checkpoint.mask_history;
    stage_log_["prune"] = json{{"checkpoint", dir.string()},
                               {"reused", reused},
                               {"seconds", timer.Stop()}};
    return dir.string();
  }

  std::string EnsureNoisy() {
    const std::string prune_dir = EnsurePrune();
    const int epochs = config_.prplus.ResolveEpochs(config_.privacy);
    json payload{{"stage", "train_noisy"},
                 {"prune", prune_dir},
                 {"privacy", PrivacyToJson(config_.privacy)},
                 {"clip_c", clip_c_used_},
                 {"epochs", epochs},
                 {"schedule", ScheduleToJson(ResolvedSchedule())},
                 {"pretrain", PretrainDigest()}};
    const std::string digest = DigestHex(Fnv1aText(payload.dump()));
    const fs::path dir =
        WorkDir() /
        ("ck-noisy-eps" + EpsilonText(config_.privacy) + "-" +
         MechanismName(config_.privacy.mechanism) + "-s" +
         std::to_string(config_.seed));
    StageTimer timer;
    timer.Start();
    bool reused = true;
    if (!CheckpointMatches(dir.string(), digest)) {
      reused = false;
      RngStream rng(SubSeed(config_.seed, kStreamNoisy, 0));
      TrainNoisy(*model_, mask_, config_, clip_c_used_, public_train_seqs_,
                 epochs, rng);
      const json annotations{{"stage", "train_noisy"},
                             {"epsilon", EpsilonText(config_.privacy)},
                             {"delta", config_.privacy.delta},
                             {"mechanism",
                              MechanismName(config_.privacy.mechanism)},
                             {"clip_c", clip_c_used_},
                             {"epochs", epochs}};
      SaveCheckpoint(dir.string(), *model_, data_.vocab, mask_history_, mask_,
                     annotations.dump(), digest);
    }
    Checkpoint checkpoint = LoadCheckpoint(dir.string());
    CheckVocab(checkpoint);
    model_.emplace(std::move(checkpoint.model));
    mask_ = checkpoint.deployed_mask;
    mask_history_ = checkpoint.mask_history;
    stage_log_["train_noisy"] = json{{"checkpoint", dir.string()},
                                     {"reused", reused},
                                     {"seconds", timer.Stop()},
                                     {"epochs", epochs}};
    return dir.string();
  }

  // Runs the variant's stage sequence and leaves a frozen model ready for
  // rewriting.
  void PrepareModel() {
    LoadPretrainAndClip();
    if (config_.variant == Variant::kPr) {
      EnsurePrune();
    } else if (config_.variant == Variant::kPrPlus) {
      EnsureNoisy();
    }
    model_->Freeze();
  }

  Autoencoder& model() { return *model_; }
  const PruneMask& mask() const { return mask_; }
  const std::vector<PruneMask>& mask_history() const { return mask_history_; }

 private:
  void CheckVocab(const Checkpoint& checkpoint) const {
    if (checkpoint.vocab.words() != data_.vocab.words()) {
      throw std::runtime_error(
          "pipeline: checkpoint vocabulary does not match the corpus");
    }
  }

  ExperimentConfig config_;
  PreparedData data_;
  std::vector<TokenSequence> public_train_seqs_;
  std::vector<TokenSequence> public_val_seqs_;
  std::optional<Autoencoder> model_;
  PruneMask mask_;
  std::vector<PruneMask> mask_history_;
  ClipEstimate clip_estimate_;
  double clip_c_used_ = 0.0;
  std::string pretrain_dir_;
  json stage_log_ = json::object();
};

}  // namespace

std::string EnsurePretrainCheckpoint(const ExperimentConfig& config) {
  PipelineDriver driver(config);
  return driver.EnsurePretrain();
}

std::string EnsurePruneCheckpoint(const ExperimentConfig& config) {
  PipelineDriver driver(config);
  return driver.EnsurePrune();
}

std::string EnsureNoisyCheckpoint(const ExperimentConfig& config) {
  PipelineDriver driver(config);
  return driver.EnsureNoisy();
}

ExperimentResult RunExperiment(const ExperimentConfig& raw_config) {
  StageTimer total_timer;
  total_timer.Start();
  PipelineDriver driver(raw_config);
  const ExperimentConfig& config = driver.config();

  driver.PrepareModel();
  Autoencoder& model = driver.model();
  const PruneMask& mask = driver.mask();
  const double clip_c = driver.clip_c_used();

  StageTimer rewrite_timer;
  rewrite_timer.Start();
  const std::vector<LabeledDocument>& train_docs = driver.data().dataset.train;
  const std::vector<LabeledDocument>& val_docs = driver.data().dataset.val;
  ExperimentResult result;
  result.rewritten_train = RewriteDataset(model, driver.data().vocab, mask,
                                          config, clip_c, train_docs, 0);
  result.rewritten_val = RewriteDataset(
      model, driver.data().vocab, mask, config, clip_c, val_docs,
      static_cast<int>(train_docs.size()));
  const double rewrite_seconds = rewrite_timer.Stop();

  StageTimer eval_timer;
  eval_timer.Start();
  const std::vector<LabeledDocument> train_units =
      RewriteUnitsAsDocuments(train_docs, config.grouping);
  const std::vector<LabeledDocument> val_units =
      RewriteUnitsAsDocuments(val_docs, config.grouping);
  result.evaluation = EvaluateRewrites(
      train_units, val_units, driver.data().dataset.test,
      result.rewritten_train, result.rewritten_val,
      SubSeed(config.seed, kStreamClassifier, 0));
  const double eval_seconds = eval_timer.Stop();

  result.clip_estimate = driver.clip_estimate();
  result.deployed_mask = mask;

  const Sensitivity sensitivity = VariantSensitivity(config, clip_c, mask);
  const NoiseSpec noise = CalibrateNoise(sensitivity, config.privacy);
  result.noise_scale = noise.scale;
  // Independent recomputation of the calibration used by the rewrite path.
  const NoiseSpec recheck = CalibrateNoise(
      VariantSensitivity(config, clip_c, mask), config.privacy);
  const double delta_guideline =
      DeltaGuideline(std::max<std::size_t>(1, train_docs.size()));

  json mask_history_sizes = json::array();
  for (const PruneMask& m : driver.mask_history()) {
    mask_history_sizes.push_back(m.pruned.size());
  }

  const double chance = result.evaluation.chance_level;
  json report{
      {"config", json::parse(config.ToJsonText())},
      {"data",
       {{"public_train_docs", driver.data().public_train.size()},
        {"public_val_docs", driver.data().public_val.size()},
        {"dataset_train_docs", train_docs.size()},
        {"dataset_val_docs", val_docs.size()},
        {"dataset_test_docs", driver.data().dataset.test.size()},
        {"vocab_size", driver.data().vocab.size()},
        {"dataset_oov_rate",
         OovRate(driver.data().dataset.train, driver.data().vocab)}}},
      {"clip",
       {{"mu", result.clip_estimate.mu},
        {"sigma", result.clip_estimate.sigma},
        {"recommended_c", result.clip_estimate.recommended_c},
        {"rule", ClipRuleName(config.clip_rule())},
        {"mode", ClipModeName(config.clip_mode())},
        {"sample_count", result.clip_estimate.sample_count},
        {"clip_c_used", clip_c}}},
      {"calibration",
       {{"epsilon", config.privacy.infinite
                        ? json("inf")
                        : json(config.privacy.epsilon)},
        {"delta", config.privacy.delta},
        {"mechanism", MechanismName(config.privacy.mechanism)},
        {"sensitivity_l1", sensitivity.l1},
        {"sensitivity_l2", sensitivity.l2},
        {"dimension", sensitivity.dimension},
        {"noise_scale", noise.scale},
        {"noise_variance", noise.scale * noise.scale},
        {"noise_scale_recomputed", recheck.scale},
        {"calibration_consistent", recheck.scale == noise.scale},
        {"delta_guideline", delta_guideline},
        {"delta_respects_guideline",
         config.privacy.infinite ||
             config.privacy.mechanism == Mechanism::kLaplace ||
             config.privacy.delta <= delta_guideline}}},
      {"mask",
       {{"d_tok", mask.d_tok},
        {"pruned_count", mask.pruned.size()},
        {"pruned_fraction",
         mask.d_tok > 0 ? static_cast<double>(mask.pruned.size()) /
                              static_cast<double>(mask.d_tok)
                        : 0.0},
        {"effective_dim", sensitivity.dimension},
        {"mask_history_sizes", mask_history_sizes}}},
      {"metrics",
       {{"bleu",
         {{"score", result.evaluation.bleu.score},
          {"precisions", result.evaluation.bleu.precisions},
          {"brevity_penalty", result.evaluation.bleu.brevity_penalty},
          {"hypothesis_length", result.evaluation.bleu.hypothesis_length},
          {"reference_length", result.evaluation.bleu.reference_length}}},
        {"downstream",
         {{"macro_f1_rewritten", result.evaluation.f1_rewritten},
          {"macro_f1_original", result.evaluation.f1_original},
          {"chance_level", chance},
          {"class_count", result.evaluation.class_count}}}}},
      {"rewritten",
       {{"train_records", result.rewritten_train.size()},
        {"val_records", result.rewritten_val.size()}}},
      {"stages", driver.stage_log()},
  };

  // Timing lives under one top-level key so reproducibility checks can drop
  // it; anything else that varies between a fresh run and a checkpoint-reuse
  // run (stage seconds, the reuse flag) moves or drops along with it.
  report["timings"] = json{{"rewrite_seconds", rewrite_seconds},
                           {"evaluate_seconds", eval_seconds},
                           {"total_seconds", total_timer.Stop()}};
  for (auto& [stage, entry] : report["stages"].items()) {
    if (entry.contains("seconds")) {
      report["timings"][stage + "_seconds"] = entry["seconds"];
      entry.erase("seconds");
    }
    if (entry.contains("reused")) {
      report["timings"][stage + "_checkpoint_reused"] = entry["reused"];
      entry.erase("reused");
    }
  }

  const fs::path run_dir =
      fs::path(config.paths.work_dir) /
      ("run-" + VariantName(config.variant) + "-" +
       MechanismName(config.privacy.mechanism) + "-eps" +
       EpsilonText(config.privacy) + "-s" + std::to_string(config.seed));
  fs::create_directories(run_dir);
  SaveRewriteRecords(result.rewritten_train,
                     (run_dir / "rewritten_train.jsonl").string());
  SaveRewriteRecords(result.rewritten_val,
                     (run_dir / "rewritten_val.jsonl").string());
  result.report_json = report.dump(2);
  std::ofstream report_out(run_dir / "report.json", std::ios::trunc);
  report_out << result.report_json << "\n";
  if (!report_out) {
    throw std::runtime_error("pipeline: cannot write report under " +
                             run_dir.string());
  }
  return result;
}

}  // namespace dprw
