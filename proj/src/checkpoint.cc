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

#include "dprw/checkpoint.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace dprw {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kFormatVersion = 1;

std::vector<float> ToFloat32(const Mat& value) {
  std::vector<float> out(static_cast<std::size_t>(value.size()));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < value.rows(); ++r) {
    for (Eigen::Index c = 0; c < value.cols(); ++c) {
      out[k++] = static_cast<float>(value(r, c));
    }
  }
  return out;
}

void WriteBinary(const fs::path& path, const std::vector<float>& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("checkpoint: cannot write " + path.string());
  }
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!out) {
    throw std::runtime_error("checkpoint: short write to " + path.string());
  }
}

std::vector<float> ReadBinary(const fs::path& path, std::size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("checkpoint: cannot read " + path.string());
  }
  std::vector<float> data(count);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (in.gcount() !=
      static_cast<std::streamsize>(count * sizeof(float))) {
    throw std::runtime_error("checkpoint: truncated tensor file " +
                             path.string());
  }
  char extra;
  if (in.read(&extra, 1)) {
    throw std::runtime_error("checkpoint: oversized tensor file " +
                             path.string());
  }
  return data;
}

json ConfigToJson(const ModelConfig& config) {
  return json{{"architecture", ArchitectureName(config.architecture)},
              {"vocab_size", config.vocab_size},
              {"max_len", config.max_len},
              {"embed_dim", config.embed_dim},
              {"d_tok", config.d_tok},
              {"layers", config.layers},
              {"heads", config.heads},
              {"hidden", config.hidden}};
}

ModelConfig ConfigFromJson(const json& j) {
  ModelConfig config;
  config.architecture = ArchitectureFromName(j.at("architecture"));
  config.vocab_size = j.at("vocab_size");
  config.max_len = j.at("max_len");
  config.embed_dim = j.at("embed_dim");
  config.d_tok = j.at("d_tok");
  config.layers = j.at("layers");
  config.heads = j.at("heads");
  config.hidden = j.at("hidden");
  return config;
}

std::string TensorFileName(int id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "tensor_%03d.bin", id);
  return buf;
}

}  // namespace

std::uint64_t Fnv1a(const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t Fnv1aText(const std::string& text) {
  return Fnv1a(text.data(), text.size());
}

std::string DigestHex(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(digest));
  return buf;
}

void SaveCheckpoint(const std::string& dir, const Autoencoder& model,
                    const Vocab& vocab,
                    const std::vector<PruneMask>& mask_history,
                    const PruneMask& deployed_mask,
                    const std::string& annotations_json,
                    const std::string& settings_digest) {
  const fs::path root(dir);
  fs::create_directories(root);

  const ParameterStore& params = model.params();
  json tensors = json::array();
  for (int id = 0; id < params.count(); ++id) {
    const Mat& value = params.value(id);
    const std::vector<float> data = ToFloat32(value);
    const std::string file = TensorFileName(id);
    WriteBinary(root / file, data);
    tensors.push_back(
        json{{"name", params.name(id)},
             {"rows", value.rows()},
             {"cols", value.cols()},
             {"file", file},
             {"digest",
              DigestHex(Fnv1a(data.data(), data.size() * sizeof(float)))}});
  }

  json masks = json::array();
  for (const PruneMask& mask : mask_history) {
    masks.push_back(mask.pruned);
  }

  const json manifest{{"format_version", kFormatVersion},
                      {"config", ConfigToJson(model.config())},
                      {"tensors", tensors},
                      {"vocab_file", "vocab.json"},
                      {"mask_history", masks},
                      {"deployed_mask", deployed_mask.pruned},
                      {"annotations", json::parse(annotations_json.empty()
                                                      ? "{}"
                                                      : annotations_json)},
                      {"settings_digest", settings_digest}};
  std::ofstream mf(root / "manifest.json", std::ios::trunc);
  mf << manifest.dump(2) << "\n";
  if (!mf) {
    throw std::runtime_error("checkpoint: cannot write manifest in " + dir);
  }

  std::ofstream vf(root / "vocab.json", std::ios::trunc);
  vf << json{{"words", vocab.words()}}.dump(2) << "\n";
  if (!vf) {
    throw std::runtime_error("checkpoint: cannot write vocab in " + dir);
  }
}

Checkpoint LoadCheckpoint(const std::string& dir) {
  const fs::path root(dir);
  std::ifstream mf(root / "manifest.json");
  if (!mf) {
    throw std::runtime_error("checkpoint: no manifest in " + dir);
  }
  json manifest;
  mf >> manifest;
  if (manifest.at("format_version").get<int>() != kFormatVersion) {
    throw std::runtime_error("checkpoint: unsupported format version in " +
                             dir);
  }

  const ModelConfig config = ConfigFromJson(manifest.at("config"));
  Autoencoder model = Autoencoder::Create(config, /*seed=*/0);
  ParameterStore& params = model.params();
  const json& tensors = manifest.at("tensors");
  if (static_cast<int>(tensors.size()) != params.count()) {
    throw std::runtime_error("checkpoint: tensor count mismatch in " + dir);
  }
  for (int id = 0; id < params.count(); ++id) {
    const json& entry = tensors.at(static_cast<std::size_t>(id));
    Mat& value = params.value(id);
    if (entry.at("name").get<std::string>() != params.name(id) ||
        entry.at("rows").get<Eigen::Index>() != value.rows() ||
        entry.at("cols").get<Eigen::Index>() != value.cols()) {
      throw std::runtime_error("checkpoint: tensor layout mismatch for " +
                               params.name(id));
    }
    const std::vector<float> data =
        ReadBinary(root / entry.at("file").get<std::string>(),
                   static_cast<std::size_t>(value.size()));
    const std::string digest =
        DigestHex(Fnv1a(data.data(), data.size() * sizeof(float)));
    if (digest != entry.at("digest").get<std::string>()) {
      throw std::runtime_error("checkpoint: digest mismatch for " +
                               params.name(id));
    }
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < value.rows(); ++r) {
      for (Eigen::Index c = 0; c < value.cols(); ++c) {
        value(r, c) = static_cast<double>(data[k++]);
      }
    }
  }

  std::ifstream vf(root / manifest.at("vocab_file").get<std::string>());
  if (!vf) {
    throw std::runtime_error("checkpoint: no vocab file in " + dir);
  }
  json vocab_json;
  vf >> vocab_json;
  Vocab vocab =
      Vocab::FromWordList(vocab_json.at("words").get<std::vector<std::string>>());
  if (vocab.size() != config.vocab_size) {
    throw std::runtime_error("checkpoint: vocab size mismatch in " + dir);
  }

  std::vector<PruneMask> mask_history;
  for (const json& entry : manifest.at("mask_history")) {
    PruneMask mask;
    mask.d_tok = config.d_tok;
    mask.pruned = entry.get<std::vector<int>>();
    mask.Validate();
    mask_history.push_back(std::move(mask));
  }
  PruneMask deployed;
  deployed.d_tok = config.d_tok;
  deployed.pruned = manifest.at("deployed_mask").get<std::vector<int>>();
  deployed.Validate();

  return Checkpoint{std::move(model),
                    std::move(vocab),
                    std::move(mask_history),
                    std::move(deployed),
                    manifest.at("annotations").dump(),
                    manifest.at("settings_digest").get<std::string>()};
}

bool CheckpointMatches(const std::string& dir,
                       const std::string& settings_digest) {
  std::ifstream mf(fs::path(dir) / "manifest.json");
  if (!mf) return false;
  json manifest;
  try {
    mf >> manifest;
    return manifest.at("format_version").get<int>() == kFormatVersion &&
           manifest.at("settings_digest").get<std::string>() ==
               settings_digest;
  } catch (const json::exception&) {
    return false;
  }
}

}  // namespace dprw
