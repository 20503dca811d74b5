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

#include "dprw/parameter_store.h"

#include <stdexcept>

namespace dprw {

int ParameterStore::Add(const std::string& name, Eigen::Index rows,
                        Eigen::Index cols) {
  if (rows <= 0 || cols <= 0) {
    throw std::invalid_argument("params: tensor dims must be positive");
  }
  if (Find(name) != -1) {
    throw std::invalid_argument("params: duplicate tensor name " + name);
  }
  Entry entry;
  entry.name = name;
  entry.value = Mat::Zero(rows, cols);
  entry.grad = Mat::Zero(rows, cols);
  entry.velocity = Mat::Zero(rows, cols);
  entries_.push_back(std::move(entry));
  return static_cast<int>(entries_.size()) - 1;
}

int ParameterStore::Find(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

void ParameterStore::ZeroGrads() {
  for (Entry& entry : entries_) entry.grad.setZero();
}

void ParameterStore::Step(double learning_rate, double momentum) {
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("params: learning rate must be > 0");
  }
  if (momentum < 0.0 || momentum >= 1.0) {
    throw std::invalid_argument("params: momentum must be in [0, 1)");
  }
  for (Entry& entry : entries_) {
    entry.velocity = momentum * entry.velocity + entry.grad;
    entry.value -= learning_rate * entry.velocity;
  }
}

std::size_t ParameterStore::TotalParameters() const {
  std::size_t total = 0;
  for (const Entry& entry : entries_) {
    total += static_cast<std::size_t>(entry.value.size());
  }
  return total;
}

ParameterStore::Entry& ParameterStore::At(int id) {
  if (id < 0 || id >= count()) {
    throw std::invalid_argument("params: tensor id out of range");
  }
  return entries_[static_cast<std::size_t>(id)];
}

const ParameterStore::Entry& ParameterStore::At(int id) const {
  if (id < 0 || id >= count()) {
    throw std::invalid_argument("params: tensor id out of range");
  }
  return entries_[static_cast<std::size_t>(id)];
}

}  // namespace dprw
