// Copyright 2026 The thzmesh Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef THZMESH_NN_HPP_
#define THZMESH_NN_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace thzmesh::nn {

using Rng = std::mt19937_64;

enum class Activation : std::uint8_t { kRelu, kTanh, kIdentity, kSoftmax };

struct LayerSpec {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::kIdentity;
};

// Max-subtracted softmax, renormalized so the entries sum to 1.
std::vector<double> softmax(std::span<const double> logits);

enum class Init : std::uint8_t {
  kHe,      // N(0, 2/in): rectifier layers
  kGlorot,  // U(+-sqrt(6/(in+out))): everything else
  kZero,
};

// Stack of fully connected layers with all parameters in one flat buffer,
// laid out per layer as weight (out x in, row-major) followed by bias.
class DenseNet {
 public:
  DenseNet() = default;
  explicit DenseNet(std::vector<LayerSpec> layers);

  // He for rectifier layers, Glorot otherwise; biases zero.
  void initialize(Rng& rng);
  void initialize_layer(std::size_t layer, Init init, Rng& rng);

  std::size_t num_layers() const { return layers_.size(); }
  const LayerSpec& layer(std::size_t l) const { return layers_.at(l); }
  std::size_t input_size() const;
  std::size_t output_size() const;
  std::size_t num_params() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::span<double> weights(std::size_t l);
  std::span<const double> weights(std::size_t l) const;
  std::span<double> bias(std::size_t l);
  std::span<const double> bias(std::size_t l) const;

  // Runs the network and keeps activations for backward().
  const std::vector<double>& forward(std::span<const double> x);
  // Stateless evaluation.
  std::vector<double> evaluate(std::span<const double> x) const;

  // Accumulates dL/dparams into param_grad (same layout as params()) and
  // returns dL/dinput for the cached forward pass. Throws UsageError when no
  // forward pass is cached.
  std::vector<double> backward(std::span<const double> grad_out,
                               std::span<double> param_grad);

  bool has_cache() const { return !acts_.empty(); }
  void clear_cache() { acts_.clear(); }

  // Tensors named "<prefix>layer<l>.weight" [out, in] and ".bias" [out].
  struct NamedTensor;
  std::vector<NamedTensor> export_tensors(const std::string& prefix) const;
  // Throws UsageError when a tensor is missing or has the wrong shape.
  void import_tensors(const std::map<std::string, NamedTensor>& tensors,
                      const std::string& prefix);

 private:
  std::vector<LayerSpec> layers_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
  // acts_[0] is the input; acts_[l + 1] is layer l's output.
  std::vector<std::vector<double>> acts_;
};

struct DenseNet::NamedTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
};
using NamedTensor = DenseNet::NamedTensor;

// Text format, one tensor per record:
//   tensor <name> <rank> <dim0> ... <dimN-1>
//   <values, row-major, %.17g separated by spaces>
void save_tensors(std::ostream& os, std::span<const NamedTensor> tensors);
std::map<std::string, NamedTensor> load_tensors(std::istream& is);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, AdamConfig config);

  std::size_t step_count() const { return step_; }
  const AdamConfig& config() const { return config_; }
  void reset();
  // Descends the gradient, or ascends it when maximize is set.
  void step(std::span<double> params, std::span<const double> grads,
            bool maximize);

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t step_ = 0;
};

// Central finite differences of a scalar function of a parameter block.
struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

// Relative error per coordinate is |a - n| / max(|a| + |n|, floor).
GradCheckResult check_gradient(std::span<double> x,
                               std::span<const double> analytic,
                               const std::function<double()>& f,
                               double step = 1e-5, double floor = 1e-6);

}  // namespace thzmesh::nn

#endif  // THZMESH_NN_HPP_
