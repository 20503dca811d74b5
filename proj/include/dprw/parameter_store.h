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

#ifndef DPRW_PARAMETER_STORE_H_
#define DPRW_PARAMETER_STORE_H_

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace dprw {

// Row-major everywhere so flattening and serialization agree with the
// token-major latent layout.
using Mat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Named dense tensors with gradient and momentum buffers; the single
// optimizer is SGD with classical momentum.
class ParameterStore {
 public:
  int Add(const std::string& name, Eigen::Index rows, Eigen::Index cols);

  int count() const { return static_cast<int>(entries_.size()); }
  const std::string& name(int id) const { return At(id).name; }
  Mat& value(int id) { return At(id).value; }
  const Mat& value(int id) const { return At(id).value; }
  Mat& grad(int id) { return At(id).grad; }
  const Mat& grad(int id) const { return At(id).grad; }

  // -1 when no tensor has that name.
  int Find(const std::string& name) const;

  void ZeroGrads();

  // velocity = momentum * velocity + grad; value -= learning_rate * velocity
  void Step(double learning_rate, double momentum);

  std::size_t TotalParameters() const;

 private:
  struct Entry {
    std::string name;
    Mat value, grad, velocity;
  };

  Entry& At(int id);
  const Entry& At(int id) const;

  std::vector<Entry> entries_;
};

}  // namespace dprw

#endif  // DPRW_PARAMETER_STORE_H_
