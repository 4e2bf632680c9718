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

#ifndef THZMESH_AGENT_HPP_
#define THZMESH_AGENT_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "thzmesh/netsim.hpp"
#include "thzmesh/nn.hpp"
#include "thzmesh/topology.hpp"

namespace thzmesh {

enum class NodeType : std::uint8_t { kBranch, kLeaf };
NodeType node_type(const RoutingTree& tree, NodeIndex i);

// Which safety mechanisms are switched off. Type I drops safe exploration,
// type II drops safe initialization, type III drops both.
enum class Variant : std::uint8_t { kSafe, kTypeI, kTypeII, kTypeIII };
Variant variant_from_type(int type);  // 0 -> kSafe; throws ConfigError
const char* variant_name(Variant v);

struct AgentConfig {
  std::size_t hidden = 64;
  std::size_t critic_feature = 16;
  double kappa = 0.5;
  double actor_lr = 0.03;
  double critic_lr = 0.1;
  double idle_bias = -10.0;
  // Exploration std as a fraction of the largest allocated share in a group.
  double noise_fraction = 0.05;
  // Variance multiplier for the idle share's noise.
  double idle_noise_variance = 5.0;
  // Critic output is multiplied by this to reach reward scale.
  double q_scale = 100.0;
  bool safe_initialization = true;
  bool safe_exploration = true;

  void apply(Variant v);
  void validate() const;
};

// Per link: log10(1 + SINR) on each uplink band, then each downlink band,
// then own and neighbor occupancy.
std::vector<double> observation_features(const NodeObservation& obs);
std::size_t observation_size(std::size_t links, std::size_t bands);

// [power shares, idle power, sub-array shares, idle sub-array]
std::vector<double> action_vector(const NodeAllocation& a);
std::size_t action_size(std::size_t links, std::size_t bands);

// Zero-sum Gaussian perturbation of both budget groups. The idle share gets
// idle_variance times the variance of the others. If any share would turn
// negative, the input is returned unchanged.
NodeAllocation safe_explore(const NodeAllocation& a, nn::Rng& rng,
                            double noise_scale, double idle_variance = 5.0);
// Independent noise, clipped at zero and renormalized per group.
NodeAllocation unsafe_explore(const NodeAllocation& a, nn::Rng& rng,
                              double noise_scale, double idle_variance = 5.0);

// Per-node policy. A customized encoder feeds a shared trunk; each task
// (power, sub-array) has a hidden layer, a 2-way utilized/idle split and a
// customized softmax that spreads the utilized share over the node's
// link/band entries.
class ActorNet {
 public:
  enum Part : std::size_t {
    kEncoder,
    kShared,
    kPowerHidden,
    kPowerSplit,
    kPowerDist,
    kSubarrayHidden,
    kSubarraySplit,
    kSubarrayDist,
    kNumParts,
  };
  static bool is_uniform(Part p);

  ActorNet() = default;
  ActorNet(std::size_t links, std::size_t bands, const AgentConfig& config,
           nn::Rng& rng);

  std::size_t links() const { return links_; }
  std::size_t bands() const { return bands_; }
  std::size_t input_size() const { return observation_size(links_, bands_); }

  // Throws UsageError on a feature size mismatch.
  NodeAllocation act(std::span<const double> features) const;
  NodeAllocation forward(std::span<const double> features);
  // grad is d(objective)/d(action_vector); accumulates into grad(part) and
  // returns d(objective)/d(features).
  std::vector<double> backward(std::span<const double> grad);

  nn::DenseNet& part(std::size_t p) { return parts_.at(p); }
  const nn::DenseNet& part(std::size_t p) const { return parts_.at(p); }
  std::vector<double>& grad(std::size_t p) { return grads_.at(p); }
  void zero_grad();

  // Safe variant: distribution layers start with zero weights, spreading
  // the utilized share evenly.
  void initialize_customized(nn::Rng& rng, bool safe);
  // Safe variant: split layers get zero weights and biases (0, idle_bias).
  void initialize_uniform(nn::Rng& rng, bool safe, double idle_bias);

  // Concatenated parameters of the uniform parts, in Part order.
  std::vector<double> uniform_params() const;
  void set_uniform_params(std::span<const double> values);

 private:
  // Task heads read the hidden layer averaged over its width, so a
  // parameter step moves the output logits by about one step size.
  std::vector<double> scaled(std::vector<double> h) const;

  std::size_t links_ = 0;
  std::size_t bands_ = 0;
  double head_scale_ = 1.0;
  std::array<nn::DenseNet, kNumParts> parts_;
  std::array<std::vector<double>, kNumParts> grads_;
  // Cached split and distribution outputs per task.
  std::array<std::vector<double>, 2> split_;
  std::array<std::vector<double>, 2> dist_;
};

// Central critic: a customized encoder per node maps its observation and
// action to a fixed-size feature; a uniform head maps all features to Q.
class CriticNet {
 public:
  CriticNet() = default;
  CriticNet(const std::vector<std::size_t>& node_inputs,
            const AgentConfig& config, nn::Rng& rng);

  std::size_t nodes() const { return encoders_.size(); }
  std::size_t node_input(std::size_t i) const {
    return encoders_.at(i).input_size();
  }
  double q_scale() const { return q_scale_; }

  double q(const std::vector<std::vector<double>>& inputs) const;
  double forward(const std::vector<std::vector<double>>& inputs);
  // dQ/dinput per node for the cached pass; parameter gradients times
  // upstream are accumulated.
  std::vector<std::vector<double>> backward(double upstream);

  nn::DenseNet& encoder(std::size_t i) { return encoders_.at(i); }
  const nn::DenseNet& encoder(std::size_t i) const { return encoders_.at(i); }
  nn::DenseNet& head() { return head_; }
  const nn::DenseNet& head() const { return head_; }
  std::vector<double>& encoder_grad(std::size_t i) { return encoder_grads_.at(i); }
  std::vector<double>& head_grad() { return head_grad_; }
  void zero_grad();

  void initialize_encoders(nn::Rng& rng);

 private:
  std::vector<nn::DenseNet> encoders_;
  std::vector<std::vector<double>> encoder_grads_;
  nn::DenseNet head_;
  std::vector<double> head_grad_;
  double q_scale_ = 1.0;
};

// r + kappa * q_next
double td_target(double reward, double kappa, double q_next);
// (target - q)^2
double critic_loss(double target, double q);

struct Transition {
  std::vector<NodeObservation> state;
  Allocation action;
  double reward = 0.0;
  std::vector<NodeObservation> next_state;
};

struct TrainStats {
  double td_target = 0.0;
  double q_sa = 0.0;
  double critic_loss = 0.0;
  double q_policy = 0.0;
};

// Decentralized actors with a central critic trained on one on-policy
// transition per slot.
class MultiAgent {
 public:
  MultiAgent(const NetworkLayout& layout, AgentConfig config,
             std::uint64_t seed);

  const AgentConfig& config() const { return config_; }
  const NetworkLayout& layout() const { return layout_; }
  std::size_t size() const { return actors_.size(); }
  ActorNet& actor(NodeIndex i) { return actors_.at(i); }
  const ActorNet& actor(NodeIndex i) const { return actors_.at(i); }
  CriticNet& critic() { return critic_; }
  const CriticNet& critic() const { return critic_; }

  Allocation act(const std::vector<NodeObservation>& obs) const;
  // Exploration noise per the configured safety mode.
  Allocation explore(const Allocation& a);
  double q(const std::vector<NodeObservation>& obs, const Allocation& a) const;

  // One on-policy step: TD target from the noise-free next action, actor
  // ascent on the current critic, then critic descent on the TD error.
  // Throws TrainingAbort when a loss or Q value is not finite.
  TrainStats train_step(const Transition& t);

  // Ascends Q(s, pi(s)) with the critic held fixed; returns that Q before
  // the update.
  double update_actors(const std::vector<NodeObservation>& state);
  // Descends (target - Q(s, a))^2; returns Q(s, a) before the update.
  double update_critic(const std::vector<NodeObservation>& state,
                       const Allocation& action, double target);

  // Rebuilds every unit for a new tree after a link failure.
  void recover(const NetworkLayout& new_layout);

  std::vector<nn::NamedTensor> export_tensors() const;
  void import_tensors(const std::map<std::string, nn::NamedTensor>& tensors);

 private:
  std::vector<std::vector<double>> critic_inputs(
      const std::vector<NodeObservation>& obs, const Allocation& a) const;
  void reset_actor_optimizers(NodeIndex i, bool uniform_too);
  void build_critic();

  AgentConfig config_;
  NetworkLayout layout_;
  nn::Rng init_rng_;
  nn::Rng noise_rng_;
  std::vector<ActorNet> actors_;
  std::vector<std::array<nn::Adam, ActorNet::kNumParts>> actor_adam_;
  CriticNet critic_;
  std::vector<nn::Adam> encoder_adam_;
  nn::Adam head_adam_;
};

}  // namespace thzmesh

#endif  // THZMESH_AGENT_HPP_
