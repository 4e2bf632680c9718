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

#include "thzmesh/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "thzmesh/errors.hpp"
#include "thzmesh/kernels.hpp"

namespace thzmesh::nn {
namespace {

void apply_activation(Activation act, std::span<double> z) {
  switch (act) {
    case Activation::kRelu:
      for (double& v : z) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::kTanh:
      for (double& v : z) v = std::tanh(v);
      break;
    case Activation::kIdentity:
      break;
    case Activation::kSoftmax: {
      const auto s = softmax(z);
      std::ranges::copy(s, z.begin());
      break;
    }
  }
}

// Converts dL/dy into dL/dz in place given the layer output y.
void activation_backward(Activation act, std::span<const double> y,
                         std::span<double> g) {
  switch (act) {
    case Activation::kRelu:
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (y[i] <= 0.0) g[i] = 0.0;
      }
      break;
    case Activation::kTanh:
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 1.0 - y[i] * y[i];
      break;
    case Activation::kIdentity:
      break;
    case Activation::kSoftmax: {
      double gy = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) gy += g[i] * y[i];
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = y[i] * (g[i] - gy);
      break;
    }
  }
}

}  // namespace

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double mx = *std::ranges::max_element(out);
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : out) v /= sum;
  // One renormalization pass pulls the sum to 1 within an ulp or two.
  double again = 0.0;
  for (double v : out) again += v;
  for (double& v : out) v /= again;
  return out;
}

DenseNet::DenseNet(std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
  std::size_t total = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (l > 0 && layers_[l].in != layers_[l - 1].out) {
      throw UsageError("incompatible consecutive layer sizes");
    }
    if (layers_[l].out == 0) throw UsageError("layer with zero outputs");
    offsets_.push_back(total);
    total += layers_[l].out * layers_[l].in + layers_[l].out;
  }
  params_.assign(total, 0.0);
}

std::size_t DenseNet::input_size() const {
  return layers_.empty() ? 0 : layers_.front().in;
}

std::size_t DenseNet::output_size() const {
  return layers_.empty() ? 0 : layers_.back().out;
}

std::span<double> DenseNet::weights(std::size_t l) {
  return std::span(params_).subspan(offsets_.at(l), layers_[l].out * layers_[l].in);
}
std::span<const double> DenseNet::weights(std::size_t l) const {
  return std::span(params_).subspan(offsets_.at(l), layers_[l].out * layers_[l].in);
}
std::span<double> DenseNet::bias(std::size_t l) {
  return std::span(params_).subspan(
      offsets_.at(l) + layers_[l].out * layers_[l].in, layers_[l].out);
}
std::span<const double> DenseNet::bias(std::size_t l) const {
  return std::span(params_).subspan(
      offsets_.at(l) + layers_[l].out * layers_[l].in, layers_[l].out);
}

void DenseNet::initialize(Rng& rng) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    initialize_layer(
        l, layers_[l].activation == Activation::kRelu ? Init::kHe : Init::kGlorot,
        rng);
  }
}

void DenseNet::initialize_layer(std::size_t l, Init init, Rng& rng) {
  const LayerSpec& s = layers_.at(l);
  auto w = weights(l);
  switch (init) {
    case Init::kHe: {
      std::normal_distribution<double> dist(
          0.0, std::sqrt(2.0 / static_cast<double>(std::max<std::size_t>(s.in, 1))));
      for (double& v : w) v = dist(rng);
      break;
    }
    case Init::kGlorot: {
      const double a = std::sqrt(6.0 / static_cast<double>(s.in + s.out));
      std::uniform_real_distribution<double> dist(-a, a);
      for (double& v : w) v = dist(rng);
      break;
    }
    case Init::kZero:
      std::ranges::fill(w, 0.0);
      break;
  }
  std::ranges::fill(bias(l), 0.0);
}

const std::vector<double>& DenseNet::forward(std::span<const double> x) {
  if (x.size() != input_size()) throw UsageError("input dimension mismatch");
  acts_.resize(layers_.size() + 1);
  acts_[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    acts_[l + 1].resize(layers_[l].out);
    kernels::gemv(layers_[l].out, layers_[l].in, weights(l), acts_[l], bias(l),
                  acts_[l + 1]);
    apply_activation(layers_[l].activation, acts_[l + 1]);
  }
  return acts_.back();
}

std::vector<double> DenseNet::evaluate(std::span<const double> x) const {
  if (x.size() != input_size()) throw UsageError("input dimension mismatch");
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    next.resize(layers_[l].out);
    kernels::gemv(layers_[l].out, layers_[l].in, weights(l), cur, bias(l), next);
    apply_activation(layers_[l].activation, next);
    cur.swap(next);
  }
  return cur;
}

std::vector<double> DenseNet::backward(std::span<const double> grad_out,
                                       std::span<double> param_grad) {
  if (acts_.size() != layers_.size() + 1) {
    throw UsageError("backward called without a cached forward pass");
  }
  if (grad_out.size() != output_size() || param_grad.size() != params_.size()) {
    throw UsageError("gradient buffer dimension mismatch");
  }
  std::vector<double> g(grad_out.begin(), grad_out.end());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const LayerSpec& s = layers_[l];
    activation_backward(s.activation, acts_[l + 1], g);
    auto gw = param_grad.subspan(offsets_[l], s.out * s.in);
    auto gb = param_grad.subspan(offsets_[l] + s.out * s.in, s.out);
    kernels::ger(s.out, s.in, 1.0, g, acts_[l], gw);
    for (std::size_t o = 0; o < s.out; ++o) gb[o] += g[o];
    std::vector<double> gin(s.in, 0.0);
    kernels::gemv_t(s.out, s.in, weights(l), g, gin);
    g.swap(gin);
  }
  return g;
}

std::vector<NamedTensor> DenseNet::export_tensors(const std::string& prefix) const {
  std::vector<NamedTensor> out;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto w = weights(l);
    const auto b = bias(l);
    const std::string base = prefix + "layer" + std::to_string(l);
    out.push_back({base + ".weight", {layers_[l].out, layers_[l].in},
                   {w.begin(), w.end()}});
    out.push_back({base + ".bias", {layers_[l].out}, {b.begin(), b.end()}});
  }
  return out;
}

void DenseNet::import_tensors(const std::map<std::string, NamedTensor>& tensors,
                              const std::string& prefix) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::string base = prefix + "layer" + std::to_string(l);
    auto fetch = [&](const std::string& name, std::span<double> dst,
                     const std::vector<std::size_t>& shape) {
      const auto it = tensors.find(name);
      if (it == tensors.end()) throw UsageError("missing tensor " + name);
      if (it->second.shape != shape || it->second.values.size() != dst.size()) {
        throw UsageError("shape mismatch for tensor " + name);
      }
      std::ranges::copy(it->second.values, dst.begin());
    };
    fetch(base + ".weight", weights(l), {layers_[l].out, layers_[l].in});
    fetch(base + ".bias", bias(l), {layers_[l].out});
  }
  clear_cache();
}

void save_tensors(std::ostream& os, std::span<const NamedTensor> tensors) {
  char buf[32];
  for (const NamedTensor& t : tensors) {
    os << "tensor " << t.name << ' ' << t.shape.size();
    for (std::size_t d : t.shape) os << ' ' << d;
    os << '\n';
    for (std::size_t i = 0; i < t.values.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", t.values[i]);
      os << (i ? " " : "") << buf;
    }
    os << '\n';
  }
}

std::map<std::string, NamedTensor> load_tensors(std::istream& is) {
  std::map<std::string, NamedTensor> out;
  std::string tag;
  while (is >> tag) {
    if (tag != "tensor") throw UsageError("malformed tensor file near " + tag);
    NamedTensor t;
    std::size_t rank = 0;
    if (!(is >> t.name >> rank)) throw UsageError("malformed tensor header");
    std::size_t count = 1;
    t.shape.resize(rank);
    for (auto& d : t.shape) {
      if (!(is >> d)) throw UsageError("malformed tensor shape");
      count *= d;
    }
    t.values.resize(count);
    for (double& v : t.values) {
      if (!(is >> v)) throw UsageError("truncated tensor " + t.name);
    }
    out.emplace(t.name, std::move(t));
  }
  return out;
}

Adam::Adam(std::size_t n, AdamConfig config)
    : config_(config), m_(n, 0.0), v_(n, 0.0) {}

void Adam::reset() {
  std::ranges::fill(m_, 0.0);
  std::ranges::fill(v_, 0.0);
  step_ = 0;
}

void Adam::step(std::span<double> params, std::span<const double> grads,
                bool maximize) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw UsageError("Adam state does not match parameter count");
  }
  ++step_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const double sign = maximize ? 1.0 : -1.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    const double mhat = m_[i] / c1;
    const double vhat = v_[i] / c2;
    params[i] += sign * config_.learning_rate * mhat /
                 (std::sqrt(vhat) + config_.epsilon);
  }
}

GradCheckResult check_gradient(std::span<double> x,
                               std::span<const double> analytic,
                               const std::function<double()>& f, double step,
                               double floor) {
  if (x.size() != analytic.size()) throw UsageError("gradient size mismatch");
  GradCheckResult res;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = f();
    x[i] = saved - step;
    const double down = f();
    x[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double rel = std::abs(numeric - analytic[i]) /
                       std::max(std::abs(numeric) + std::abs(analytic[i]), floor);
    if (rel > res.max_rel_error) {
      res.max_rel_error = rel;
      res.worst_index = i;
    }
    ++res.checked;
  }
  return res;
}

}  // namespace thzmesh::nn
