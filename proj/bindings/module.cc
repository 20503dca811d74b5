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

// Python bindings for the main operations: sensitivity and noise
// calibration, clipping, noise sampling, BLEU, macro-F1, and the full
// experiment pipeline.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "dprw/pipeline.h"

namespace py = pybind11;

namespace {

dprw::PrivacyParams MakePrivacy(const std::string& epsilon, double delta,
                                const std::string& mechanism) {
  dprw::PrivacyParams privacy;
  dprw::SetEpsilon(privacy, epsilon);
  privacy.delta = delta;
  privacy.mechanism = dprw::MechanismFromName(mechanism);
  privacy.Validate();
  return privacy;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Local differential privacy for text via latent-space rewriting: "
      "clip, calibrate, noise, rewrite, evaluate.";

  m.def(
      "calibrate",
      [](std::int64_t dimension, double clip_c, const std::string& epsilon,
         double delta, const std::string& mechanism,
         const std::string& variant) {
        const dprw::PrivacyParams privacy =
            MakePrivacy(epsilon, delta, mechanism);
        const dprw::Variant v = dprw::VariantFromName(variant);
        const dprw::Sensitivity sensitivity =
            v == dprw::Variant::kBaselineNormClip
                ? dprw::NormClipSensitivity(clip_c, dimension)
                : dprw::ClvSensitivity(clip_c, dimension);
        const dprw::NoiseSpec noise =
            dprw::CalibrateNoise(sensitivity, privacy);
        py::dict result;
        result["l1_sensitivity"] = sensitivity.l1;
        result["l2_sensitivity"] = sensitivity.l2;
        result["dimension"] = sensitivity.dimension;
        result["noise_scale"] = noise.scale;
        result["noise_variance"] = noise.scale * noise.scale;
        result["mechanism"] = dprw::MechanismName(noise.distribution);
        return result;
      },
      py::arg("dimension"), py::arg("clip_c") = 0.1,
      py::arg("epsilon") = "500", py::arg("delta") = 1e-5,
      py::arg("mechanism") = "gaussian", py::arg("variant") = "clv",
      "Sensitivity and calibrated noise scale for a clipped latent of the "
      "given dimension.");

  m.def(
      "clip_by_value",
      [](const std::vector<double>& values, double c) {
        return dprw::ClipByValue(values, dprw::ClipSpec::ByValue(c));
      },
      py::arg("values"), py::arg("c"),
      "Clamp every coordinate into [-c, c].");

  m.def("clip_by_norm", &dprw::ClipByNorm, py::arg("values"), py::arg("c"),
        "Rescale the vector onto the l2 ball of radius c when it is "
        "outside.");

  m.def(
      "estimate_clip",
      [](const std::vector<double>& pooled_values, const std::string& rule) {
        const dprw::ClipEstimate estimate = dprw::EstimateClipConstant(
            pooled_values, dprw::ClipRuleFromName(rule));
        py::dict result;
        result["mu"] = estimate.mu;
        result["sigma"] = estimate.sigma;
        result["recommended_c"] = estimate.recommended_c;
        result["rule"] = dprw::ClipRuleName(estimate.rule);
        result["sample_count"] = estimate.sample_count;
        return result;
      },
      py::arg("pooled_values"), py::arg("rule") = "half_sigma",
      "Gaussian fit of pooled latent values and the recommended clip "
      "constant.");

  m.def(
      "sample_noise",
      [](const std::string& mechanism, double scale, std::int64_t dimension,
         std::uint64_t seed) {
        dprw::NoiseSpec noise;
        noise.distribution = dprw::MechanismFromName(mechanism);
        noise.scale = scale;
        noise.dimension = dimension;
        dprw::RngStream rng(seed);
        return dprw::SampleNoise(noise, rng);
      },
      py::arg("mechanism"), py::arg("scale"), py::arg("dimension"),
      py::arg("seed"),
      "Draw a noise vector from the mechanism's distribution.");

  m.def(
      "privatize",
      [](const std::vector<double>& values, double clip_c,
         const std::string& epsilon, double delta,
         const std::string& mechanism, bool norm_clip, std::uint64_t seed) {
        const dprw::PrivacyParams privacy =
            MakePrivacy(epsilon, delta, mechanism);
        const std::vector<double> clipped =
            norm_clip ? dprw::ClipByNorm(values, clip_c)
                      : dprw::ClipByValue(values,
                                          dprw::ClipSpec::ByValue(clip_c));
        const std::int64_t n = static_cast<std::int64_t>(values.size());
        const dprw::Sensitivity sensitivity =
            norm_clip ? dprw::NormClipSensitivity(clip_c, n)
                      : dprw::ClvSensitivity(clip_c, n);
        dprw::RngStream rng(seed);
        return dprw::PrivatizeLatent(clipped, sensitivity, privacy, rng);
      },
      py::arg("values"), py::arg("clip_c"), py::arg("epsilon"),
      py::arg("delta") = 0.0, py::arg("mechanism") = "laplace",
      py::arg("norm_clip") = false, py::arg("seed") = 0,
      "Clip a latent vector and add calibrated noise.");

  m.def(
      "corpus_bleu",
      [](const std::vector<std::string>& references,
         const std::vector<std::string>& hypotheses) {
        const dprw::BleuResult bleu =
            dprw::CorpusBleuText(references, hypotheses);
        py::dict result;
        result["score"] = bleu.score;
        result["precisions"] =
            std::vector<double>(bleu.precisions.begin(),
                                bleu.precisions.end());
        result["brevity_penalty"] = bleu.brevity_penalty;
        result["hypothesis_length"] = bleu.hypothesis_length;
        result["reference_length"] = bleu.reference_length;
        return result;
      },
      py::arg("references"), py::arg("hypotheses"),
      "Corpus BLEU-4 with add-one smoothing on the higher orders.");

  m.def("macro_f1", &dprw::MacroF1, py::arg("gold"), py::arg("predicted"),
        py::arg("classes"),
        "Unweighted mean of per-class F1; absent classes score 0.");

  m.def(
      "default_config",
      [] { return dprw::ExperimentConfig{}.ToJsonText(); },
      "The default experiment configuration as JSON text.");

  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        const dprw::ExperimentResult result = dprw::RunExperiment(
            dprw::ExperimentConfig::FromJsonText(config_json));
        return result.report_json;
      },
      py::arg("config_json"),
      py::call_guard<py::gil_scoped_release>(),
      "Run the full pipeline for a JSON configuration; returns the JSON "
      "report.");

  m.def(
      "rewrite_texts",
      [](const std::vector<std::string>& texts,
         const std::string& config_json) {
        dprw::ExperimentConfig config =
            dprw::ExperimentConfig::FromJsonText(config_json);
        config.model.architecture = config.architecture();
        std::string dir;
        switch (config.variant) {
          case dprw::Variant::kBaselineNormClip:
          case dprw::Variant::kClv:
            dir = dprw::EnsurePretrainCheckpoint(config);
            break;
          case dprw::Variant::kPr:
            dir = dprw::EnsurePruneCheckpoint(config);
            break;
          case dprw::Variant::kPrPlus:
            dir = dprw::EnsureNoisyCheckpoint(config);
            break;
        }
        dprw::Checkpoint checkpoint = dprw::LoadCheckpoint(dir);
        config.model.vocab_size = checkpoint.model.config().vocab_size;
        double clip_c = config.clip_c;
        if (!(clip_c > 0.0)) {
          const dprw::PreparedData data = dprw::PrepareData(config);
          clip_c = dprw::EstimateClipFromModel(
                       checkpoint.model,
                       dprw::TokenizeAll(data.public_val, checkpoint.vocab,
                                         config.model.max_len),
                       config.clip_rule(), config.clip_mode())
                       .recommended_c;
        }
        checkpoint.model.Freeze();
        std::vector<dprw::LabeledDocument> docs;
        docs.reserve(texts.size());
        for (const std::string& text : texts) {
          docs.push_back(dprw::LabeledDocument{text, "", ""});
        }
        const std::vector<dprw::RewriteRecord> records = dprw::RewriteDataset(
            checkpoint.model, checkpoint.vocab, checkpoint.deployed_mask,
            config, clip_c, docs);
        std::vector<std::string> rewritten;
        rewritten.reserve(records.size());
        for (const dprw::RewriteRecord& record : records) {
          rewritten.push_back(record.rewritten_text);
        }
        return rewritten;
      },
      py::arg("texts"), py::arg("config_json"),
      py::call_guard<py::gil_scoped_release>(),
      "Privately rewrite the given texts with the configured variant, "
      "training or reusing its stage checkpoints as needed.");
}
