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

#include "thzmesh/agent.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "thzmesh/errors.hpp"

namespace thzmesh {

using nn::Activation;
using nn::DenseNet;

NodeType node_type(const RoutingTree& tree, NodeIndex i) {
  return tree.is_branch(i) ? NodeType::kBranch : NodeType::kLeaf;
}

Variant variant_from_type(int type) {
  switch (type) {
    case 0: return Variant::kSafe;
    case 1: return Variant::kTypeI;
    case 2: return Variant::kTypeII;
    case 3: return Variant::kTypeIII;
    default:
      throw ConfigError("unsafe variant must be 1, 2 or 3, got " +
                        std::to_string(type));
  }
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kSafe: return "safe";
    case Variant::kTypeI: return "type1";
    case Variant::kTypeII: return "type2";
    case Variant::kTypeIII: return "type3";
  }
  return "unknown";
}

void AgentConfig::apply(Variant v) {
  safe_exploration = v == Variant::kSafe || v == Variant::kTypeII;
  safe_initialization = v == Variant::kSafe || v == Variant::kTypeI;
}

void AgentConfig::validate() const {
  if (hidden == 0 || critic_feature == 0) {
    throw ConfigError("network widths must be positive");
  }
  if (!(kappa >= 0.0 && kappa < 1.0)) {
    throw ConfigError("discount factor must lie in [0, 1)");
  }
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) {
    throw ConfigError("learning rates must be positive");
  }
  if (!(noise_fraction >= 0.0) || !(idle_noise_variance >= 0.0)) {
    throw ConfigError("exploration noise settings must be nonnegative");
  }
  if (!(q_scale > 0.0)) throw ConfigError("critic output scale must be positive");
}

std::size_t observation_size(std::size_t links, std::size_t bands) {
  return links * (2 * bands + 2);
}

std::size_t action_size(std::size_t links, std::size_t bands) {
  return links * bands + 1 + 2 * links + 1;
}

std::vector<double> observation_features(const NodeObservation& obs) {
  std::vector<double> out;
  for (const LinkObservation& l : obs.links) {
    if (l.uplink_sinr.size() != l.downlink_sinr.size()) {
      throw UsageError("uplink and downlink band counts differ");
    }
    for (double g : l.uplink_sinr) out.push_back(std::log10(1.0 + std::max(0.0, g)));
    for (double g : l.downlink_sinr) out.push_back(std::log10(1.0 + std::max(0.0, g)));
    out.push_back(l.own_occupancy);
    out.push_back(l.neighbor_occupancy);
  }
  return out;
}

std::vector<double> action_vector(const NodeAllocation& a) {
  std::vector<double> v(a.power);
  v.push_back(a.idle_power);
  v.insert(v.end(), a.subarray.begin(), a.subarray.end());
  v.push_back(a.idle_subarray);
  return v;
}

namespace {

double max_share(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

// Noise for one budget group: shares then idle.
std::vector<double> group_noise(const std::vector<double>& shares,
                                nn::Rng& rng, double scale,
                                double idle_variance) {
  std::normal_distribution<double> nd(0.0, 1.0);
  const double sigma = scale * max_share(shares);
  std::vector<double> n(shares.size() + 1, 0.0);
  for (std::size_t k = 0; k < shares.size(); ++k) n[k] = sigma * nd(rng);
  n.back() = sigma * std::sqrt(idle_variance) * nd(rng);
  return n;
}

}  // namespace

NodeAllocation safe_explore(const NodeAllocation& a, nn::Rng& rng,
                            double noise_scale, double idle_variance) {
  if (noise_scale <= 0.0) return a;
  NodeAllocation out = a;
  auto shift = [&](std::vector<double>& shares, double& idle) {
    std::vector<double> n = group_noise(shares, rng, noise_scale, idle_variance);
    double mean = 0.0;
    for (double x : n) mean += x;
    mean /= static_cast<double>(n.size());
    bool ok = true;
    for (std::size_t k = 0; k < shares.size(); ++k) {
      shares[k] += n[k] - mean;
      ok = ok && shares[k] >= 0.0;
    }
    idle += n.back() - mean;
    return ok && idle >= 0.0;
  };
  const bool power_ok = shift(out.power, out.idle_power);
  const bool sub_ok = shift(out.subarray, out.idle_subarray);
  return power_ok && sub_ok ? out : a;
}

NodeAllocation unsafe_explore(const NodeAllocation& a, nn::Rng& rng,
                              double noise_scale, double idle_variance) {
  if (noise_scale <= 0.0) return a;
  NodeAllocation out = a;
  auto perturb = [&](std::vector<double>& shares, double& idle) {
    const std::vector<double> orig = shares;
    const double orig_idle = idle;
    std::vector<double> n = group_noise(shares, rng, noise_scale, idle_variance);
    double total = 0.0;
    for (std::size_t k = 0; k < shares.size(); ++k) {
      shares[k] = std::max(0.0, shares[k] + n[k]);
      total += shares[k];
    }
    idle = std::max(0.0, idle + n.back());
    total += idle;
    if (!(total > 0.0)) {
      shares = orig;
      idle = orig_idle;
      return;
    }
    for (double& s : shares) s /= total;
    idle /= total;
  };
  perturb(out.power, out.idle_power);
  perturb(out.subarray, out.idle_subarray);
  return out;
}

// ---------------------------------------------------------------------------

bool ActorNet::is_uniform(Part p) {
  return p != kEncoder && p != kPowerDist && p != kSubarrayDist;
}

ActorNet::ActorNet(std::size_t links, std::size_t bands,
                   const AgentConfig& config, nn::Rng& rng)
    : links_(links),
      bands_(bands),
      head_scale_(1.0 / static_cast<double>(config.hidden)) {
  if (links == 0 || bands == 0) {
    throw ConfigError("an actor needs at least one link and one band");
  }
  const std::size_t h = config.hidden;
  parts_[kEncoder] = DenseNet({{input_size(), h, Activation::kRelu}});
  parts_[kShared] = DenseNet({{h, h, Activation::kRelu}});
  parts_[kPowerHidden] = DenseNet({{h, h, Activation::kTanh}});
  parts_[kPowerSplit] = DenseNet({{h, 2, Activation::kSoftmax}});
  parts_[kPowerDist] = DenseNet({{h, links * bands, Activation::kSoftmax}});
  parts_[kSubarrayHidden] = DenseNet({{h, h, Activation::kTanh}});
  parts_[kSubarraySplit] = DenseNet({{h, 2, Activation::kSoftmax}});
  parts_[kSubarrayDist] = DenseNet({{h, 2 * links, Activation::kSoftmax}});
  initialize_customized(rng, config.safe_initialization);
  initialize_uniform(rng, config.safe_initialization, config.idle_bias);
  zero_grad();
}

void ActorNet::zero_grad() {
  for (std::size_t p = 0; p < kNumParts; ++p) {
    grads_[p].assign(parts_[p].num_params(), 0.0);
  }
}

void ActorNet::initialize_customized(nn::Rng& rng, bool safe) {
  for (std::size_t p = 0; p < kNumParts; ++p) {
    if (is_uniform(static_cast<Part>(p))) continue;
    parts_[p].initialize(rng);
    if (safe && (p == kPowerDist || p == kSubarrayDist)) {
      for (double& w : parts_[p].weights(0)) w = 0.0;
    }
  }
}

void ActorNet::initialize_uniform(nn::Rng& rng, bool safe, double idle_bias) {
  for (std::size_t p = 0; p < kNumParts; ++p) {
    if (!is_uniform(static_cast<Part>(p))) continue;
    parts_[p].initialize(rng);
    if (safe && (p == kPowerSplit || p == kSubarraySplit)) {
      for (double& w : parts_[p].weights(0)) w = 0.0;
      auto b = parts_[p].bias(0);
      b[0] = 0.0;
      b[1] = idle_bias;
    }
  }
}

std::vector<double> ActorNet::uniform_params() const {
  std::vector<double> out;
  for (std::size_t p = 0; p < kNumParts; ++p) {
    if (!is_uniform(static_cast<Part>(p))) continue;
    auto v = parts_[p].params();
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

void ActorNet::set_uniform_params(std::span<const double> values) {
  std::size_t at = 0;
  for (std::size_t p = 0; p < kNumParts; ++p) {
    if (!is_uniform(static_cast<Part>(p))) continue;
    auto dst = parts_[p].params();
    if (at + dst.size() > values.size()) {
      throw UsageError("uniform parameter vector too short");
    }
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(at), dst.size(),
                dst.begin());
    at += dst.size();
  }
  if (at != values.size()) throw UsageError("uniform parameter vector too long");
}

std::vector<double> ActorNet::scaled(std::vector<double> h) const {
  for (double& v : h) v *= head_scale_;
  return h;
}

namespace {

void compose(const std::vector<double>& split, const std::vector<double>& dist,
             std::vector<double>& shares, double& idle) {
  shares.resize(dist.size());
  for (std::size_t k = 0; k < dist.size(); ++k) shares[k] = split[0] * dist[k];
  idle = split[1];
}

}  // namespace

NodeAllocation ActorNet::act(std::span<const double> features) const {
  if (features.size() != input_size()) {
    throw UsageError("observation has " + std::to_string(features.size()) +
                     " features, actor expects " + std::to_string(input_size()));
  }
  const auto h1 = parts_[kEncoder].evaluate(features);
  const auto h2 = parts_[kShared].evaluate(h1);
  NodeAllocation a;
  const auto hp = scaled(parts_[kPowerHidden].evaluate(h2));
  compose(parts_[kPowerSplit].evaluate(hp), parts_[kPowerDist].evaluate(hp),
          a.power, a.idle_power);
  const auto hs = scaled(parts_[kSubarrayHidden].evaluate(h2));
  compose(parts_[kSubarraySplit].evaluate(hs),
          parts_[kSubarrayDist].evaluate(hs), a.subarray, a.idle_subarray);
  return a;
}

NodeAllocation ActorNet::forward(std::span<const double> features) {
  if (features.size() != input_size()) {
    throw UsageError("observation has " + std::to_string(features.size()) +
                     " features, actor expects " + std::to_string(input_size()));
  }
  const std::vector<double> h1 = parts_[kEncoder].forward(features);
  const std::vector<double> h2 = parts_[kShared].forward(h1);
  NodeAllocation a;
  const std::vector<double> hp = scaled(parts_[kPowerHidden].forward(h2));
  split_[0] = parts_[kPowerSplit].forward(hp);
  dist_[0] = parts_[kPowerDist].forward(hp);
  compose(split_[0], dist_[0], a.power, a.idle_power);
  const std::vector<double> hs = scaled(parts_[kSubarrayHidden].forward(h2));
  split_[1] = parts_[kSubarraySplit].forward(hs);
  dist_[1] = parts_[kSubarrayDist].forward(hs);
  compose(split_[1], dist_[1], a.subarray, a.idle_subarray);
  return a;
}

std::vector<double> ActorNet::backward(std::span<const double> grad) {
  const std::size_t np = links_ * bands_;
  const std::size_t ns = 2 * links_;
  if (grad.size() != np + ns + 2) {
    throw UsageError("action gradient has the wrong size");
  }
  constexpr std::array<Part, 2> kHidden{kPowerHidden, kSubarrayHidden};
  constexpr std::array<Part, 2> kSplit{kPowerSplit, kSubarraySplit};
  constexpr std::array<Part, 2> kDist{kPowerDist, kSubarrayDist};
  const std::array<std::span<const double>, 2> g{grad.subspan(0, np + 1),
                                                 grad.subspan(np + 1, ns + 1)};
  std::vector<double> g_trunk(parts_[kShared].output_size(), 0.0);
  for (std::size_t t = 0; t < 2; ++t) {
    const auto& f = dist_[t];
    const std::size_t n = f.size();
    std::vector<double> g_split(2, 0.0);
    std::vector<double> g_dist(n);
    for (std::size_t k = 0; k < n; ++k) {
      g_split[0] += f[k] * g[t][k];
      g_dist[k] = split_[t][0] * g[t][k];
    }
    g_split[1] = g[t][n];
    auto gh = parts_[kSplit[t]].backward(g_split, grads_[kSplit[t]]);
    const auto gd = parts_[kDist[t]].backward(g_dist, grads_[kDist[t]]);
    for (std::size_t k = 0; k < gh.size(); ++k) {
      gh[k] = (gh[k] + gd[k]) * head_scale_;
    }
    const auto g2 = parts_[kHidden[t]].backward(gh, grads_[kHidden[t]]);
    for (std::size_t k = 0; k < g2.size(); ++k) g_trunk[k] += g2[k];
  }
  const auto g1 = parts_[kShared].backward(g_trunk, grads_[kShared]);
  return parts_[kEncoder].backward(g1, grads_[kEncoder]);
}

// ---------------------------------------------------------------------------

CriticNet::CriticNet(const std::vector<std::size_t>& node_inputs,
                     const AgentConfig& config, nn::Rng& rng)
    : q_scale_(config.q_scale) {
  if (node_inputs.empty()) throw ConfigError("critic needs at least one node");
  const std::size_t h = config.hidden;
  const std::size_t f = config.critic_feature;
  for (std::size_t in : node_inputs) {
    encoders_.emplace_back(std::vector<nn::LayerSpec>{
        {in, h, Activation::kRelu}, {h, f, Activation::kIdentity}});
  }
  head_ = DenseNet({{node_inputs.size() * f, h, Activation::kRelu},
                    {h, 1, Activation::kIdentity}});
  initialize_encoders(rng);
  head_.initialize(rng);
  zero_grad();
}

void CriticNet::initialize_encoders(nn::Rng& rng) {
  for (DenseNet& e : encoders_) e.initialize(rng);
}

void CriticNet::zero_grad() {
  encoder_grads_.resize(encoders_.size());
  for (std::size_t i = 0; i < encoders_.size(); ++i) {
    encoder_grads_[i].assign(encoders_[i].num_params(), 0.0);
  }
  head_grad_.assign(head_.num_params(), 0.0);
}

double CriticNet::q(const std::vector<std::vector<double>>& inputs) const {
  if (inputs.size() != encoders_.size()) {
    throw UsageError("critic needs one input per node");
  }
  std::vector<double> feats;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != encoders_[i].input_size()) {
      throw UsageError("critic input of node " +
                       std::to_string(node_label(i)) + " has the wrong size");
    }
    const auto f = encoders_[i].evaluate(inputs[i]);
    feats.insert(feats.end(), f.begin(), f.end());
  }
  return q_scale_ * head_.evaluate(feats)[0];
}

double CriticNet::forward(const std::vector<std::vector<double>>& inputs) {
  if (inputs.size() != encoders_.size()) {
    throw UsageError("critic needs one input per node");
  }
  std::vector<double> feats;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != encoders_[i].input_size()) {
      throw UsageError("critic input of node " +
                       std::to_string(node_label(i)) + " has the wrong size");
    }
    const auto& f = encoders_[i].forward(inputs[i]);
    feats.insert(feats.end(), f.begin(), f.end());
  }
  return q_scale_ * head_.forward(feats)[0];
}

std::vector<std::vector<double>> CriticNet::backward(double upstream) {
  const std::vector<double> g{upstream * q_scale_};
  const auto g_feat = head_.backward(g, head_grad_);
  std::vector<std::vector<double>> out(encoders_.size());
  std::size_t at = 0;
  for (std::size_t i = 0; i < encoders_.size(); ++i) {
    const std::size_t f = encoders_[i].output_size();
    std::span<const double> chunk(g_feat.data() + at, f);
    out[i] = encoders_[i].backward(chunk, encoder_grads_[i]);
    at += f;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

const char* kActorPartNames[ActorNet::kNumParts] = {
    "encoder",        "shared",          "power_hidden",  "power_split",
    "power_dist",     "subarray_hidden", "subarray_split", "subarray_dist"};

std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), stream};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

MultiAgent::MultiAgent(const NetworkLayout& layout, AgentConfig config,
                       std::uint64_t seed)
    : config_(config),
      layout_(layout),
      init_rng_(derive_seed(seed, 1)),
      noise_rng_(derive_seed(seed, 2)) {
  config_.validate();
  if (layout.size() < 2) throw ConfigError("a mesh needs at least two nodes");
  for (NodeIndex i = 0; i < layout.size(); ++i) {
    actors_.emplace_back(layout.links(i).count(), layout.bands_per_direction(),
                         config_, init_rng_);
    actor_adam_.emplace_back();
    reset_actor_optimizers(i, true);
  }
  build_critic();
}

void MultiAgent::reset_actor_optimizers(NodeIndex i, bool uniform_too) {
  for (std::size_t p = 0; p < ActorNet::kNumParts; ++p) {
    if (!uniform_too && ActorNet::is_uniform(static_cast<ActorNet::Part>(p))) {
      continue;
    }
    actor_adam_[i][p] = nn::Adam(actors_[i].part(p).num_params(),
                                 {.learning_rate = config_.actor_lr});
  }
}

void MultiAgent::build_critic() {
  std::vector<std::size_t> inputs;
  const std::size_t k = layout_.bands_per_direction();
  for (NodeIndex i = 0; i < layout_.size(); ++i) {
    const std::size_t l = layout_.links(i).count();
    inputs.push_back(observation_size(l, k) + action_size(l, k));
  }
  critic_ = CriticNet(inputs, config_, init_rng_);
  encoder_adam_.clear();
  for (NodeIndex i = 0; i < layout_.size(); ++i) {
    encoder_adam_.emplace_back(critic_.encoder(i).num_params(),
                               nn::AdamConfig{.learning_rate = config_.critic_lr});
  }
  head_adam_ = nn::Adam(critic_.head().num_params(),
                        {.learning_rate = config_.critic_lr});
}

Allocation MultiAgent::act(const std::vector<NodeObservation>& obs) const {
  if (obs.size() != actors_.size()) {
    throw UsageError("one observation per node is required");
  }
  Allocation out;
  out.reserve(obs.size());
  for (NodeIndex i = 0; i < obs.size(); ++i) {
    out.push_back(actors_[i].act(observation_features(obs[i])));
  }
  return out;
}

Allocation MultiAgent::explore(const Allocation& a) {
  Allocation out;
  out.reserve(a.size());
  for (const NodeAllocation& na : a) {
    out.push_back(config_.safe_exploration
                      ? safe_explore(na, noise_rng_, config_.noise_fraction,
                                     config_.idle_noise_variance)
                      : unsafe_explore(na, noise_rng_, config_.noise_fraction,
                                       config_.idle_noise_variance));
  }
  return out;
}

std::vector<std::vector<double>> MultiAgent::critic_inputs(
    const std::vector<NodeObservation>& obs, const Allocation& a) const {
  if (obs.size() != actors_.size() || a.size() != actors_.size()) {
    throw UsageError("critic inputs must cover every node");
  }
  std::vector<std::vector<double>> out(obs.size());
  for (NodeIndex i = 0; i < obs.size(); ++i) {
    out[i] = observation_features(obs[i]);
    const auto av = action_vector(a[i]);
    out[i].insert(out[i].end(), av.begin(), av.end());
  }
  return out;
}

double MultiAgent::q(const std::vector<NodeObservation>& obs,
                     const Allocation& a) const {
  return critic_.q(critic_inputs(obs, a));
}

double td_target(double reward, double kappa, double q_next) {
  return reward + kappa * q_next;
}

double critic_loss(double target, double q) {
  const double e = target - q;
  return e * e;
}

double MultiAgent::update_actors(const std::vector<NodeObservation>& state) {
  const std::size_t n = actors_.size();
  if (state.size() != n) throw UsageError("one observation per node is required");
  Allocation policy(n);
  for (NodeIndex i = 0; i < n; ++i) {
    actors_[i].zero_grad();
    policy[i] = actors_[i].forward(observation_features(state[i]));
  }
  critic_.zero_grad();
  const double q_policy = critic_.forward(critic_inputs(state, policy));
  if (!finite(q_policy)) throw TrainingAbort("non-finite policy Q value");
  const auto g_in = critic_.backward(1.0);
  critic_.zero_grad();
  for (NodeIndex i = 0; i < n; ++i) {
    const std::size_t nf = actors_[i].input_size();
    actors_[i].backward(std::span<const double>(g_in[i]).subspan(nf));
    for (std::size_t p = 0; p < ActorNet::kNumParts; ++p) {
      actor_adam_[i][p].step(actors_[i].part(p).params(), actors_[i].grad(p),
                             true);
    }
  }
  return q_policy;
}

double MultiAgent::update_critic(const std::vector<NodeObservation>& state,
                                 const Allocation& action, double target) {
  critic_.zero_grad();
  const double q_sa = critic_.forward(critic_inputs(state, action));
  const double loss = critic_loss(target, q_sa);
  if (!finite(q_sa) || !finite(loss)) {
    throw TrainingAbort("non-finite critic loss (target " +
                        std::to_string(target) + ", Q " +
                        std::to_string(q_sa) + ")");
  }
  critic_.backward(-2.0 * (target - q_sa));
  for (NodeIndex i = 0; i < critic_.nodes(); ++i) {
    encoder_adam_[i].step(critic_.encoder(i).params(), critic_.encoder_grad(i),
                          false);
  }
  head_adam_.step(critic_.head().params(), critic_.head_grad(), false);
  return q_sa;
}

TrainStats MultiAgent::train_step(const Transition& t) {
  TrainStats st;
  st.td_target =
      td_target(t.reward, config_.kappa, q(t.next_state, act(t.next_state)));
  if (!finite(st.td_target)) {
    throw TrainingAbort("non-finite TD target (reward " +
                        std::to_string(t.reward) + ")");
  }
  st.q_policy = update_actors(t.state);
  st.q_sa = update_critic(t.state, t.action, st.td_target);
  st.critic_loss = critic_loss(st.td_target, st.q_sa);
  return st;
}

void MultiAgent::recover(const NetworkLayout& new_layout) {
  if (new_layout.size() != layout_.size() ||
      new_layout.bands_per_direction() != layout_.bands_per_direction()) {
    throw UsageError("recovery keeps the node set and band plan");
  }
  const RoutingTree& old_tree = layout_.tree();
  const RoutingTree& new_tree = new_layout.tree();
  const std::size_t n = layout_.size();

  std::map<NodeType, std::vector<double>> mean_uniform;
  std::map<NodeType, std::size_t> members;
  for (NodeIndex i = 0; i < n; ++i) {
    const NodeType ty = node_type(old_tree, i);
    const auto u = actors_[i].uniform_params();
    auto& acc = mean_uniform[ty];
    if (acc.empty()) acc.assign(u.size(), 0.0);
    for (std::size_t k = 0; k < u.size(); ++k) acc[k] += u[k];
    ++members[ty];
  }
  for (auto& [ty, acc] : mean_uniform) {
    for (double& v : acc) v /= static_cast<double>(members[ty]);
  }

  for (NodeIndex i = 0; i < n; ++i) {
    ActorNet a(new_layout.links(i).count(), new_layout.bands_per_direction(),
               config_, init_rng_);
    const NodeType before = node_type(old_tree, i);
    const NodeType after = node_type(new_tree, i);
    bool keep_uniform_optimizer = false;
    if (before == after) {
      a.set_uniform_params(actors_[i].uniform_params());
      keep_uniform_optimizer = true;
    } else if (auto it = mean_uniform.find(after); it != mean_uniform.end()) {
      a.set_uniform_params(it->second);
    }
    actors_[i] = std::move(a);
    reset_actor_optimizers(i, !keep_uniform_optimizer);
  }

  layout_ = new_layout;
  nn::DenseNet head = critic_.head();
  nn::Adam head_adam = head_adam_;
  build_critic();
  critic_.head() = std::move(head);
  head_adam_ = std::move(head_adam);
  critic_.zero_grad();
}

std::vector<nn::NamedTensor> MultiAgent::export_tensors() const {
  std::vector<nn::NamedTensor> out;
  for (NodeIndex i = 0; i < actors_.size(); ++i) {
    for (std::size_t p = 0; p < ActorNet::kNumParts; ++p) {
      auto t = actors_[i].part(p).export_tensors(
          "actor." + std::to_string(node_label(i)) + "." + kActorPartNames[p] +
          ".");
      out.insert(out.end(), t.begin(), t.end());
    }
    auto t = critic_.encoder(i).export_tensors(
        "critic.encoder." + std::to_string(node_label(i)) + ".");
    out.insert(out.end(), t.begin(), t.end());
  }
  auto t = critic_.head().export_tensors("critic.head.");
  out.insert(out.end(), t.begin(), t.end());
  return out;
}

void MultiAgent::import_tensors(
    const std::map<std::string, nn::NamedTensor>& tensors) {
  for (NodeIndex i = 0; i < actors_.size(); ++i) {
    for (std::size_t p = 0; p < ActorNet::kNumParts; ++p) {
      actors_[i].part(p).import_tensors(
          tensors, "actor." + std::to_string(node_label(i)) + "." +
                       kActorPartNames[p] + ".");
    }
    critic_.encoder(i).import_tensors(
        tensors, "critic.encoder." + std::to_string(node_label(i)) + ".");
  }
  critic_.head().import_tensors(tensors, "critic.head.");
}

}  // namespace thzmesh
