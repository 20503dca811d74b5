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

// Command-line interface of the local-DP text rewriting toolkit.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dprw/pipeline.h"

namespace {

using dprw::ExperimentConfig;

// Options shared by every subcommand; each is applied on top of the config
// file only when it was given on the command line.
struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> epsilon;
  std::optional<double> delta;
  std::optional<std::string> mechanism;
  std::optional<std::string> variant;
  std::optional<int> beam;
  bool audit = false;
  std::optional<std::string> grouping;
  std::optional<std::string> work_dir;
  std::optional<std::string> dataset;
  std::optional<std::string> public_corpus;
};

void AddCommonFlags(CLI::App* sub, CommonFlags& flags) {
  sub->add_option("--config", flags.config_path,
                  "JSON experiment configuration file");
  sub->add_option_function<std::uint64_t>(
      "--seed", [&flags](std::uint64_t v) { flags.seed = v; },
      "Experiment seed");
  sub->add_option_function<std::string>(
      "--epsilon", [&flags](const std::string& v) { flags.epsilon = v; },
      "Privacy budget per document: a positive real or 'inf'");
  sub->add_option_function<double>(
      "--delta", [&flags](double v) { flags.delta = v; },
      "Gaussian mechanism delta");
  sub->add_option_function<std::string>(
      "--mechanism", [&flags](const std::string& v) { flags.mechanism = v; },
      "Noise mechanism: laplace | gaussian");
  sub->add_option_function<std::string>(
      "--variant", [&flags](const std::string& v) { flags.variant = v; },
      "System variant: baseline | clv | pr | pr-plus");
  sub->add_option_function<int>(
      "--beam", [&flags](int v) { flags.beam = v; },
      "Beam width for decoding (default 10)");
  sub->add_flag("--audit", flags.audit,
                "Include the original text in rewrite records");
  sub->add_option_function<std::string>(
      "--grouping", [&flags](const std::string& v) { flags.grouping = v; },
      "Per-individual budget handling: none | compose | concat");
  sub->add_option_function<std::string>(
      "--work-dir", [&flags](const std::string& v) { flags.work_dir = v; },
      "Directory for checkpoints and run outputs");
  sub->add_option_function<std::string>(
      "--dataset", [&flags](const std::string& v) { flags.dataset = v; },
      "Downstream dataset (JSONL with text/label/individual_id)");
  sub->add_option_function<std::string>(
      "--public-corpus",
      [&flags](const std::string& v) { flags.public_corpus = v; },
      "Public pretraining corpus (plain text, one document per line)");
}

ExperimentConfig BuildConfig(const CommonFlags& flags) {
  ExperimentConfig config = flags.config_path.empty()
                                ? ExperimentConfig{}
                                : ExperimentConfig::FromJsonFile(
                                      flags.config_path);
  if (flags.variant) config.variant = dprw::VariantFromName(*flags.variant);
  if (flags.seed) config.seed = *flags.seed;
  if (flags.epsilon) dprw::SetEpsilon(config.privacy, *flags.epsilon);
  if (flags.delta) config.privacy.delta = *flags.delta;
  if (flags.mechanism) {
    config.privacy.mechanism = dprw::MechanismFromName(*flags.mechanism);
  }
  if (flags.beam) config.beam_width = *flags.beam;
  if (flags.audit) config.audit = true;
  if (flags.grouping) {
    config.grouping = dprw::GroupingPolicyFromName(*flags.grouping);
  }
  if (flags.work_dir) config.paths.work_dir = *flags.work_dir;
  if (flags.dataset) config.paths.dataset = *flags.dataset;
  if (flags.public_corpus) config.paths.public_corpus = *flags.public_corpus;
  if ((config.variant == dprw::Variant::kPr ||
       config.variant == dprw::Variant::kPrPlus) &&
      !config.schedule.has_value()) {
    config.schedule = dprw::PruneScheduleConfig{};
    config.schedule->retrain_clip_c = 0.0;
  }
  return config;
}

// Checkpoint of the variant's last training stage.
std::string EnsureVariantCheckpoint(const ExperimentConfig& config) {
  switch (config.variant) {
    case dprw::Variant::kBaselineNormClip:
    case dprw::Variant::kClv:
      return dprw::EnsurePretrainCheckpoint(config);
    case dprw::Variant::kPr:
      return dprw::EnsurePruneCheckpoint(config);
    case dprw::Variant::kPrPlus:
      return dprw::EnsureNoisyCheckpoint(config);
  }
  throw std::logic_error("unreachable variant");
}

void PrintField(const std::string& name, double value) {
  std::printf("%s = %.10g\n", name.c_str(), value);
}

void PrintField(const std::string& name, const std::string& value) {
  std::printf("%s = %s\n", name.c_str(), value.c_str());
}

int RunCalibrate(const ExperimentConfig& config, double clip_c,
                 std::int64_t dimension) {
  const dprw::Sensitivity sensitivity =
      config.variant == dprw::Variant::kBaselineNormClip
          ? dprw::NormClipSensitivity(clip_c, dimension)
          : dprw::ClvSensitivity(clip_c, dimension);
  const dprw::NoiseSpec noise =
      dprw::CalibrateNoise(sensitivity, config.privacy);
  PrintField("variant", dprw::VariantName(config.variant));
  PrintField("clip_c", clip_c);
  PrintField("dimension", static_cast<double>(dimension));
  PrintField("l1_sensitivity", sensitivity.l1);
  PrintField("l2_sensitivity", sensitivity.l2);
  PrintField("epsilon", dprw::EpsilonText(config.privacy));
  PrintField("delta", config.privacy.delta);
  PrintField("mechanism", dprw::MechanismName(config.privacy.mechanism));
  PrintField("noise_scale", noise.scale);
  PrintField("noise_variance", noise.scale * noise.scale);
  return 0;
}

int RunEstimateClip(const ExperimentConfig& config) {
  const std::string dir = dprw::EnsurePretrainCheckpoint(config);
  dprw::Checkpoint checkpoint = dprw::LoadCheckpoint(dir);
  const dprw::PreparedData data = dprw::PrepareData(config);
  const std::vector<dprw::TokenSequence> val_seqs = dprw::TokenizeAll(
      data.public_val, checkpoint.vocab, config.model.max_len);
  const dprw::ClipEstimate estimate = dprw::EstimateClipFromModel(
      checkpoint.model, val_seqs, config.clip_rule(), config.clip_mode());
  PrintField("mu", estimate.mu);
  PrintField("sigma", estimate.sigma);
  PrintField("recommended_c", estimate.recommended_c);
  PrintField("rule", dprw::ClipRuleName(estimate.rule));
  PrintField("mode", dprw::ClipModeName(config.clip_mode()));
  PrintField("sample_count", static_cast<double>(estimate.sample_count));
  return 0;
}

int RunRewrite(ExperimentConfig config, const std::string& input_path,
               const std::string& output_path) {
  const std::string dir = EnsureVariantCheckpoint(config);
  dprw::Checkpoint checkpoint = dprw::LoadCheckpoint(dir);
  config.model.vocab_size = checkpoint.model.config().vocab_size;
  const dprw::PreparedData data = dprw::PrepareData(config);
  double clip_c = config.clip_c;
  if (!(clip_c > 0.0)) {
    const std::vector<dprw::TokenSequence> val_seqs = dprw::TokenizeAll(
        data.public_val, checkpoint.vocab, config.model.max_len);
    clip_c = dprw::EstimateClipFromModel(checkpoint.model, val_seqs,
                                         config.clip_rule(),
                                         config.clip_mode())
                 .recommended_c;
  }
  checkpoint.model.Freeze();
  const std::vector<dprw::LabeledDocument> docs =
      input_path.empty() ? data.dataset.train : dprw::LoadJsonl(input_path);
  const std::vector<dprw::RewriteRecord> records = dprw::RewriteDataset(
      checkpoint.model, checkpoint.vocab, checkpoint.deployed_mask, config,
      clip_c, docs);
  dprw::SaveRewriteRecords(records, output_path);
  std::cout << "rewritten: " << output_path << " (" << records.size()
            << " records)\n";
  return 0;
}

int RunEvaluate(const ExperimentConfig& config,
                const std::string& rewritten_train_path,
                const std::string& rewritten_val_path) {
  const dprw::PreparedData data = dprw::PrepareData(config);
  const dprw::EvaluationResult result = dprw::EvaluateRewrites(
      dprw::RewriteUnitsAsDocuments(data.dataset.train, config.grouping),
      dprw::RewriteUnitsAsDocuments(data.dataset.val, config.grouping),
      data.dataset.test, dprw::LoadRewriteRecords(rewritten_train_path),
      dprw::LoadRewriteRecords(rewritten_val_path), config.seed);
  PrintField("bleu", result.bleu.score);
  PrintField("brevity_penalty", result.bleu.brevity_penalty);
  PrintField("macro_f1_rewritten", result.f1_rewritten);
  PrintField("macro_f1_original", result.f1_original);
  PrintField("chance_level", result.chance_level);
  PrintField("class_count", static_cast<double>(result.class_count));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "dprewrite: local differential privacy for text via latent-space "
      "rewriting"};
  app.require_subcommand(1);
  CommonFlags flags;

  CLI::App* pretrain = app.add_subcommand(
      "pretrain", "Train the reconstruction autoencoder on the public corpus");
  AddCommonFlags(pretrain, flags);

  CLI::App* prune = app.add_subcommand(
      "prune", "Iteratively prune latent channels and retrain");
  AddCommonFlags(prune, flags);

  CLI::App* train_noisy = app.add_subcommand(
      "train-noisy",
      "Adapt the pruned model under clip + noise at this epsilon");
  AddCommonFlags(train_noisy, flags);

  CLI::App* rewrite = app.add_subcommand(
      "rewrite", "Privately rewrite a dataset with the variant's model");
  AddCommonFlags(rewrite, flags);
  std::string rewrite_input;
  std::string rewrite_output = "rewritten.jsonl";
  rewrite->add_option("--input", rewrite_input,
                      "Dataset to rewrite (JSONL); default: the configured "
                      "dataset's train split");
  rewrite->add_option("--output", rewrite_output,
                      "Output JSONL of rewrite records");

  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Score rewritten text: BLEU and downstream macro-F1");
  AddCommonFlags(evaluate, flags);
  std::string rewritten_train_path, rewritten_val_path;
  evaluate
      ->add_option("--rewritten-train", rewritten_train_path,
                   "Rewrite records of the train split")
      ->required();
  evaluate
      ->add_option("--rewritten-val", rewritten_val_path,
                   "Rewrite records of the val split")
      ->required();

  CLI::App* calibrate = app.add_subcommand(
      "calibrate", "Print sensitivities and the calibrated noise scale");
  AddCommonFlags(calibrate, flags);
  double calibrate_clip_c = 0.1;
  std::int64_t calibrate_dimension = 0;
  calibrate->add_option("--clip-c", calibrate_clip_c,
                        "Clip constant C (default 0.1)");
  calibrate
      ->add_option("--dimension", calibrate_dimension,
                   "Latent dimension n (live coordinates)")
      ->required();

  CLI::App* estimate_clip = app.add_subcommand(
      "estimate-clip",
      "Estimate the clip constant from pretrained-model latents");
  AddCommonFlags(estimate_clip, flags);

  CLI::App* run = app.add_subcommand(
      "run", "Full pipeline: stages, rewrite, evaluation, JSON report");
  AddCommonFlags(run, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    const ExperimentConfig config = BuildConfig(flags);
    if (pretrain->parsed()) {
      std::cout << "checkpoint: " << dprw::EnsurePretrainCheckpoint(config)
                << "\n";
    } else if (prune->parsed()) {
      std::cout << "checkpoint: " << dprw::EnsurePruneCheckpoint(config)
                << "\n";
    } else if (train_noisy->parsed()) {
      std::cout << "checkpoint: " << dprw::EnsureNoisyCheckpoint(config)
                << "\n";
    } else if (rewrite->parsed()) {
      return RunRewrite(config, rewrite_input, rewrite_output);
    } else if (evaluate->parsed()) {
      return RunEvaluate(config, rewritten_train_path, rewritten_val_path);
    } else if (calibrate->parsed()) {
      return RunCalibrate(config, calibrate_clip_c, calibrate_dimension);
    } else if (estimate_clip->parsed()) {
      return RunEstimateClip(config);
    } else if (run->parsed()) {
      const dprw::ExperimentResult result = dprw::RunExperiment(config);
      std::cout << result.report_json << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
