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

#ifndef DPRW_CHECKPOINT_H_
#define DPRW_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "dprw/corpus.h"
#include "dprw/model.h"
#include "dprw/pruning.h"

namespace dprw {

// 64-bit FNV-1a, used for tensor-file integrity and for tagging checkpoints
// with the settings that produced them.
std::uint64_t Fnv1a(const void* data, std::size_t size);
std::uint64_t Fnv1aText(const std::string& text);
std::string DigestHex(std::uint64_t digest);

// A checkpoint directory holds manifest.json, vocab.json, and one raw
// little-endian float32 row-major .bin file per tensor. Weights round-trip
// through float32, so a reloaded model is bit-stable across save/load
// cycles even though it differs from the in-memory double weights.
struct Checkpoint {
  Autoencoder model;
  Vocab vocab;
  std::vector<PruneMask> mask_history;  // pruning rounds, oldest first
  PruneMask deployed_mask;              // empty when the stage did not prune
  std::string annotations_json;         // JSON object (clip spec, ε, stage)
  std::string settings_digest;          // opaque tag chosen by the writer
};

void SaveCheckpoint(const std::string& dir, const Autoencoder& model,
                    const Vocab& vocab,
                    const std::vector<PruneMask>& mask_history,
                    const PruneMask& deployed_mask,
                    const std::string& annotations_json,
                    const std::string& settings_digest);

// Throws std::runtime_error on a missing directory, a format-version
// mismatch, or a tensor file whose digest does not match the manifest.
Checkpoint LoadCheckpoint(const std::string& dir);

// True when `dir` holds a loadable manifest tagged with `settings_digest`.
bool CheckpointMatches(const std::string& dir,
                       const std::string& settings_digest);

}  // namespace dprw

#endif  // DPRW_CHECKPOINT_H_
