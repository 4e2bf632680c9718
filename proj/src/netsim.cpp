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

#include "thzmesh/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "thzmesh/errors.hpp"

namespace thzmesh {

NetworkLayout::NetworkLayout(const RoutingTree& tree,
                             std::size_t bands_per_direction)
    : tree_(tree), bands_(bands_per_direction), links_(tree.size()) {
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    NodeLinks& nl = links_[i];
    if (auto p = tree.parent(i)) {
      nl.has_parent = true;
      nl.neighbors.push_back(*p);
    }
    for (NodeIndex c : tree.children(i)) nl.neighbors.push_back(c);
  }
}

std::size_t NetworkLayout::link_index(NodeIndex i, NodeIndex j) const {
  const auto& n = links(i).neighbors;
  auto it = std::find(n.begin(), n.end(), j);
  if (it == n.end()) {
    throw UsageError("node " + std::to_string(node_label(j)) +
                     " is not a tree neighbor of node " +
                     std::to_string(node_label(i)));
  }
  return static_cast<std::size_t>(it - n.begin());
}

NodeAllocation uniform_allocation(const NetworkLayout& layout, NodeIndex i,
                                  double utilized) {
  if (!(utilized >= 0.0 && utilized <= 1.0)) {
    throw UsageError("utilized share must lie in [0, 1]");
  }
  NodeAllocation a;
  const std::size_t np = layout.power_entries(i);
  const std::size_t ns = layout.subarray_roles(i);
  if (np == 0) {
    a.idle_power = 1.0;
    a.idle_subarray = 1.0;
    return a;
  }
  a.power.assign(np, utilized / static_cast<double>(np));
  a.idle_power = 1.0 - utilized;
  a.subarray.assign(ns, utilized / static_cast<double>(ns));
  a.idle_subarray = 1.0 - utilized;
  return a;
}

Allocation uniform_allocation(const NetworkLayout& layout, double utilized) {
  Allocation out;
  out.reserve(layout.size());
  for (NodeIndex i = 0; i < layout.size(); ++i) {
    out.push_back(uniform_allocation(layout, i, utilized));
  }
  return out;
}

bool budgets_hold(const NodeAllocation& a, double tol) {
  auto group_ok = [tol](const std::vector<double>& v, double idle) {
    if (idle < 0.0) return false;
    double s = idle;
    for (double x : v) {
      if (!(x >= 0.0)) return false;
      s += x;
    }
    return std::abs(s - 1.0) <= tol;
  };
  return group_ok(a.power, a.idle_power) &&
         group_ok(a.subarray, a.idle_subarray);
}

std::vector<int> quantize_subarrays(std::span<const double> shares, int s_max) {
  const auto roles = static_cast<std::int64_t>(shares.size());
  if (roles > s_max) {
    throw ConfigError("cannot pre-allocate " + std::to_string(roles) +
                      " sub-arrays out of " + std::to_string(s_max));
  }
  double total = 0.0;
  for (double s : shares) {
    if (!(s >= 0.0)) throw UsageError("sub-array shares must be nonnegative");
    total += s;
  }
  if (total > 1.0 + 1e-9) throw UsageError("sub-array shares sum above 1");
  const double remaining = static_cast<double>(s_max - roles);
  std::vector<int> out;
  out.reserve(shares.size());
  for (double s : shares) {
    out.push_back(1 + static_cast<int>(std::floor(s * remaining)));
  }
  return out;
}

std::int64_t transmittable_packets(double rate_bps, double slot_s,
                                   double packet_bits) {
  if (!(rate_bps > 0.0)) return 0;
  return static_cast<std::int64_t>(
      std::floor(rate_bps * slot_s / packet_bits + 1e-9));
}

std::int64_t link_loss(std::int64_t incoming, double rate_bps,
                       std::int64_t backlog, std::int64_t buffer_packets,
                       double slot_s, double packet_bits) {
  const std::int64_t cap = transmittable_packets(rate_bps, slot_s, packet_bits);
  return std::max<std::int64_t>(0, incoming - (buffer_packets - backlog) - cap);
}

double batch_latency(const LatencyQuery& q) {
  if (!(q.rate_bps > 0.0)) {
    throw DomainError("latency undefined at zero rate");
  }
  double t = static_cast<double>(q.position + 1) * q.packet_bits / q.rate_bps +
             q.distance_m / kSpeedOfLight;
  if (q.waited_slots > 0) {
    t += static_cast<double>(q.waited_slots) * q.slot_s - q.arrival_offset_s;
  }
  return t;
}

double reward(double mean_u, double up_latency_s, double down_latency_s,
              std::int64_t lost, const RewardWeights& w) {
  return -(w.chi1 * mean_u + w.chi2 * up_latency_s + w.chi3 * down_latency_s +
           w.chi4 * static_cast<double>(lost));
}

double reward(const SlotOutcome& o, const RewardWeights& w) {
  return reward(o.mean_u, o.up_latency_s, o.down_latency_s, o.lost, w);
}

// ---------------------------------------------------------------------------

QueueNetwork::QueueNetwork(const Topology& topology, const RoutingTree& tree,
                           QueueConfig config)
    : topology_(topology), config_(config) {
  if (!(config.slot_s > 0.0) || !(config.packet_bits > 0.0) ||
      config.buffer_packets <= 0) {
    throw ConfigError("slot length, packet size and buffer must be positive");
  }
  if (tree.size() != topology.size()) {
    throw ConfigError("routing tree does not match the topology");
  }
  build(tree);
}

void QueueNetwork::build(const RoutingTree& tree) {
  if (!validate_dag(tree)) throw RoutingError("routing tree is not a valid DAG");
  tree_ = tree;
  const std::size_t n = tree.size();
  std::vector<NodeIndex> order(n);
  std::iota(order.begin(), order.end(), NodeIndex{0});
  std::stable_sort(order.begin(), order.end(), [&](NodeIndex a, NodeIndex b) {
    return tree.depth(a) > tree.depth(b);
  });
  links_.clear();
  for (NodeIndex c : order) {
    if (auto p = tree.parent(c)) {
      links_.push_back({c, *p, Direction::kUplink});
    }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    for (NodeIndex c : tree.children(*it)) {
      links_.push_back({*it, c, Direction::kDownlink});
    }
  }
  index_.clear();
  for (std::size_t l = 0; l < links_.size(); ++l) {
    index_[{links_[l].from, links_[l].to}] = l;
  }
  queues_.assign(links_.size(), {});
  backlog_.assign(links_.size(), 0);
}

std::size_t QueueNetwork::link_id(NodeIndex from, NodeIndex to) const {
  auto it = index_.find({from, to});
  if (it == index_.end()) {
    throw UsageError("no tree link from node " +
                     std::to_string(node_label(from)) + " to node " +
                     std::to_string(node_label(to)));
  }
  return it->second;
}

std::size_t QueueNetwork::next_link(NodeIndex at, const Batch& b) const {
  if (b.direction == Direction::kUplink) {
    return link_id(at, *tree_.parent(at));
  }
  return link_id(at, *tree_.next_hop_down(at, b.destination));
}

double QueueNetwork::propagation_floor(NodeIndex origin,
                                       NodeIndex destination) const {
  const NodeIndex leaf = origin == kDonor ? destination : origin;
  const auto path = tree_.path_to_root(leaf);
  double d = 0.0;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    d += topology_.distance(path[k], path[k + 1]);
  }
  return d / kSpeedOfLight;
}

double QueueNetwork::occupancy(std::size_t link) const {
  return static_cast<double>(backlog_.at(link)) /
         static_cast<double>(config_.buffer_packets);
}

std::int64_t QueueNetwork::buffered_total() const {
  return std::accumulate(backlog_.begin(), backlog_.end(), std::int64_t{0});
}

std::vector<std::int64_t> QueueNetwork::buffered_by_origin() const {
  std::vector<std::int64_t> out(tree_.size(), 0);
  for (const auto& q : queues_) {
    for (const Batch& b : q) out[b.origin] += b.count;
  }
  return out;
}

QueueSlotResult QueueNetwork::advance(std::size_t slot,
                                      std::span<const double> rate_bps,
                                      const ArrivalSample& arrivals) {
  const std::size_t n = tree_.size();
  if (rate_bps.size() != links_.size()) {
    throw UsageError("one rate per directed link is required");
  }
  if (arrivals.uplink.size() != n || arrivals.downlink.size() != n) {
    throw UsageError("arrival sample does not match the network size");
  }
  QueueSlotResult r;
  r.lost_per_link.assign(links_.size(), 0);
  r.injected_by_origin.assign(n, 0);
  r.delivered_by_origin.assign(n, 0);
  r.lost_by_origin.assign(n, 0);
  r.min_latency_slack = std::numeric_limits<double>::infinity();

  std::vector<std::vector<Batch>> incoming(links_.size());
  for (NodeIndex i = 0; i < n; ++i) {
    if (i == kDonor) continue;
    if (const std::int64_t a = arrivals.uplink[i]; a > 0) {
      Batch b{a, slot, i, kDonor, Direction::kUplink, 0.0, 0.0};
      incoming[next_link(i, b)].push_back(b);
      r.injected_by_origin[i] += a;
    }
  }
  for (NodeIndex i = 0; i < n; ++i) {
    if (i == kDonor) continue;
    if (const std::int64_t a = arrivals.downlink[i]; a > 0) {
      Batch b{a, slot, kDonor, i, Direction::kDownlink, 0.0, 0.0};
      incoming[next_link(kDonor, b)].push_back(b);
      r.injected_by_origin[kDonor] += a;
    }
  }

  for (std::size_t l = 0; l < links_.size(); ++l) {
    const DirectedLink& link = links_[l];
    auto& in = incoming[l];
    std::int64_t gamma = 0;
    for (const Batch& b : in) gamma += b.count;
    const std::int64_t cap =
        transmittable_packets(rate_bps[l], config_.slot_s, config_.packet_bits);
    std::int64_t lost = link_loss(gamma, rate_bps[l], backlog_[l],
                                  config_.buffer_packets, config_.slot_s,
                                  config_.packet_bits);
    r.lost_per_link[l] = lost;
    r.lost += lost;
    // Tail drop: the last packets to arrive are the ones discarded.
    while (lost > 0) {
      Batch& b = in.back();
      const std::int64_t cut = std::min(lost, b.count);
      b.count -= cut;
      lost -= cut;
      r.lost_by_origin[b.origin] += cut;
      if (b.count == 0) in.pop_back();
    }
    for (Batch& b : in) {
      b.entered_slot = slot;
      backlog_[l] += b.count;
      queues_[l].push_back(b);
    }

    std::int64_t serve = std::min(cap, backlog_[l]);
    if (serve == 0) continue;
    const double d = topology_.distance(link.from, link.to);
    const double per_packet = config_.packet_bits / rate_bps[l];
    std::int64_t position = 0;
    auto& q = queues_[l];
    while (serve > 0) {
      Batch& head = q.front();
      const std::int64_t m = std::min(serve, head.count);
      LatencyQuery lq;
      lq.position = position;
      lq.rate_bps = rate_bps[l];
      lq.distance_m = d;
      lq.waited_slots = static_cast<std::int64_t>(slot - head.entered_slot);
      lq.slot_s = config_.slot_s;
      lq.packet_bits = config_.packet_bits;
      Batch piece = head;
      piece.count = m;
      piece.first_latency = head.first_latency + batch_latency(lq);
      piece.latency_step = head.latency_step + per_packet;
      piece.entered_slot = slot;

      head.first_latency += static_cast<double>(m) * head.latency_step;
      head.count -= m;
      if (head.count == 0) q.pop_front();
      backlog_[l] -= m;
      serve -= m;
      position += m;

      if (link.to == piece.destination) {
        const double mm = static_cast<double>(m);
        const double sum = mm * piece.first_latency +
                           piece.latency_step * mm * (mm - 1.0) / 2.0;
        if (piece.direction == Direction::kUplink) {
          r.delivered_up += m;
          r.latency_sum_up += sum;
        } else {
          r.delivered_down += m;
          r.latency_sum_down += sum;
        }
        r.delivered_by_origin[piece.origin] += m;
        r.min_latency_slack = std::min(
            r.min_latency_slack,
            piece.first_latency -
                propagation_floor(piece.origin, piece.destination));
      } else {
        incoming[next_link(link.to, piece)].push_back(piece);
      }
    }
  }
  if (!std::isfinite(r.min_latency_slack)) r.min_latency_slack = 0.0;
  return r;
}

std::vector<std::int64_t> QueueNetwork::reroute(const RoutingTree& tree) {
  std::vector<std::pair<NodeIndex, Batch>> held;
  for (std::size_t l = 0; l < links_.size(); ++l) {
    for (const Batch& b : queues_[l]) held.emplace_back(links_[l].from, b);
  }
  build(tree);
  std::vector<std::int64_t> lost(tree.size(), 0);
  for (auto& [at, b] : held) {
    std::optional<std::size_t> l;
    if (b.direction == Direction::kUplink) {
      l = link_id(at, *tree_.parent(at));
    } else if (auto hop = tree_.next_hop_down(at, b.destination)) {
      l = link_id(at, *hop);
    }
    if (!l) {
      lost[b.origin] += b.count;
      continue;
    }
    const std::int64_t room = config_.buffer_packets - backlog_[*l];
    const std::int64_t keep = std::min(room, b.count);
    lost[b.origin] += b.count - keep;
    if (keep == 0) continue;
    b.count = keep;
    backlog_[*l] += keep;
    queues_[*l].push_back(b);
  }
  return lost;
}

// ---------------------------------------------------------------------------

namespace {

double truncated_interference(const NetworkConfig& c, std::mt19937_64* rng) {
  if (rng == nullptr || c.interference_std_w <= 0.0) {
    return std::max(0.0, c.interference_mean_w);
  }
  std::normal_distribution<double> nd(c.interference_mean_w,
                                      c.interference_std_w);
  return std::max(0.0, nd(*rng));
}

}  // namespace

NetworkSimulator::NetworkSimulator(Topology topology, const RoutingTree& tree,
                                   NetworkConfig config, std::uint64_t seed)
    : topology_(std::move(topology)),
      config_(std::move(config)),
      layout_(tree, config_.plan.per_direction()),
      queues_(topology_, tree, config_.queue),
      rng_(seed) {
  config_.array.validate();
  if (!(config_.p_max_w > 0.0) || !(config_.noise_w > 0.0)) {
    throw ConfigError("transmit power and noise must be positive");
  }
  if (config_.interference_mean_w < 0.0 || config_.interference_std_w < 0.0) {
    throw ConfigError("interference statistics must be nonnegative");
  }
  const auto& w = config_.weights;
  if (w.chi1 < 0 || w.chi2 < 0 || w.chi3 < 0 || w.chi4 < 0) {
    throw ConfigError("penalty weights must be nonnegative");
  }
  for (NodeIndex i = 0; i < layout_.size(); ++i) {
    if (static_cast<int>(layout_.subarray_roles(i)) > config_.array.s_max) {
      throw ConfigError("node " + std::to_string(node_label(i)) +
                        " has more link roles than sub-arrays");
    }
  }
}

std::vector<LinkRate> NetworkSimulator::rates(const Allocation& allocation,
                                              std::mt19937_64* interference) const {
  const std::size_t n = layout_.size();
  if (allocation.size() != n) {
    throw UsageError("allocation does not cover every node");
  }
  std::vector<std::vector<int>> counts(n);
  for (NodeIndex i = 0; i < n; ++i) {
    const NodeAllocation& a = allocation[i];
    if (a.power.size() != layout_.power_entries(i) ||
        a.subarray.size() != layout_.subarray_roles(i)) {
      throw UsageError("allocation of node " + std::to_string(node_label(i)) +
                       " does not match its links");
    }
    counts[i] = quantize_subarrays(a.subarray, config_.array.s_max);
  }
  const std::size_t k_count = layout_.bands_per_direction();
  const auto& links = queues_.links();
  std::vector<LinkRate> out;
  out.reserve(links.size());
  for (const DirectedLink& dl : links) {
    const std::size_t lt = layout_.link_index(dl.from, dl.to);
    const std::size_t lr = layout_.link_index(dl.to, dl.from);
    const NodeAllocation& tx = allocation[dl.from];
    LinkBudget budget;
    budget.s_t = counts[dl.from][2 * lt];
    budget.s_r = counts[dl.to][2 * lr + 1];
    budget.distance_m = topology_.distance(dl.from, dl.to);
    std::vector<std::uint8_t> usage(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
      const double share = tx.power[lt * k_count + k];
      usage[k] = share > config_.band_usage_threshold ? 1 : 0;
      budget.power_w.push_back(share * config_.p_max_w);
      budget.interference_plus_noise_w.push_back(
          config_.noise_w + truncated_interference(config_, interference));
    }
    out.push_back(link_rate(budget, config_.plan.bands(dl.direction), usage,
                            config_.array));
  }
  return out;
}

SlotOutcome NetworkSimulator::step(const Allocation& allocation,
                                   const ArrivalSample& arrivals) {
  const std::size_t n = layout_.size();
  SlotOutcome o;
  o.slot = slot_;
  for (const NodeAllocation& a : allocation) {
    if (!budgets_hold(a, 1e-6)) ++o.budget_violations;
  }
  std::vector<LinkRate> lr = rates(allocation, &rng_);
  o.link_rate_bps.reserve(lr.size());
  for (const LinkRate& r : lr) o.link_rate_bps.push_back(r.total_bps);

  QueueSlotResult q = queues_.advance(slot_, o.link_rate_bps, arrivals);
  o.lost = q.lost;
  o.lost_per_link = std::move(q.lost_per_link);
  o.delivered_up = q.delivered_up;
  o.delivered_down = q.delivered_down;
  o.up_latency_s = q.delivered_up > 0
                       ? q.latency_sum_up / static_cast<double>(q.delivered_up)
                       : 0.0;
  o.down_latency_s =
      q.delivered_down > 0
          ? q.latency_sum_down / static_cast<double>(q.delivered_down)
          : 0.0;
  o.min_latency_slack = q.min_latency_slack;
  o.injected_by_origin = std::move(q.injected_by_origin);
  o.delivered_by_origin = std::move(q.delivered_by_origin);
  o.lost_by_origin = std::move(q.lost_by_origin);

  o.u_power.assign(n, 0.0);
  o.u_subarray.assign(n, 0.0);
  o.u.assign(n, 0.0);
  for (NodeIndex i = 0; i < n; ++i) {
    const NodeAllocation& a = allocation[i];
    double up = 0.0;
    for (double s : a.power) {
      if (s > config_.band_usage_threshold) up += s;
    }
    double us = 0.0;
    for (int c : quantize_subarrays(a.subarray, config_.array.s_max)) us += c;
    us /= static_cast<double>(config_.array.s_max);
    if (up > 1.0 + 1e-6 || us > 1.0 + 1e-9) ++o.budget_violations;
    o.u_power[i] = up;
    o.u_subarray[i] = us;
    o.u[i] = 0.5 * (up + us);
  }
  const double dn = static_cast<double>(n);
  o.mean_u = std::accumulate(o.u.begin(), o.u.end(), 0.0) / dn;
  o.mean_u_power = std::accumulate(o.u_power.begin(), o.u_power.end(), 0.0) / dn;
  o.mean_u_subarray =
      std::accumulate(o.u_subarray.begin(), o.u_subarray.end(), 0.0) / dn;
  o.reward = reward(o, config_.weights);

  last_rates_ = std::move(lr);
  ++slot_;
  return o;
}

std::vector<NodeObservation> NetworkSimulator::observe() const {
  const std::size_t n = layout_.size();
  // Before the first slot (and after a failure) the state is what a full,
  // evenly spread allocation would measure.
  const std::vector<LinkRate> rates =
      last_rates_.empty() ? this->rates(uniform_allocation(layout_), nullptr)
                          : last_rates_;
  std::vector<NodeObservation> out(n);
  for (NodeIndex i = 0; i < n; ++i) {
    const NodeLinks& nl = layout_.links(i);
    for (std::size_t l = 0; l < nl.count(); ++l) {
      const NodeIndex j = nl.neighbors[l];
      const std::size_t out_id = queues_.link_id(i, j);
      const std::size_t in_id = queues_.link_id(j, i);
      const std::size_t up_id = nl.is_parent_link(l) ? out_id : in_id;
      const std::size_t dn_id = nl.is_parent_link(l) ? in_id : out_id;
      LinkObservation lo;
      lo.uplink_sinr = rates[up_id].stream_sinr;
      lo.downlink_sinr = rates[dn_id].stream_sinr;
      lo.own_occupancy = queues_.occupancy(out_id);
      lo.neighbor_occupancy = queues_.occupancy(in_id);
      out[i].links.push_back(std::move(lo));
    }
  }
  return out;
}

std::int64_t NetworkSimulator::apply_failure(Link failed,
                                             const RoutingTree& new_tree) {
  topology_.fail_link(failed);
  if (new_tree.size() != topology_.size()) {
    throw ConfigError("routing tree does not match the topology");
  }
  for (NodeIndex i = 0; i < new_tree.size(); ++i) {
    if (auto p = new_tree.parent(i); p && !topology_.is_neighbor(i, *p)) {
      throw RoutingError("new tree uses an unavailable link");
    }
  }
  const auto lost = queues_.reroute(new_tree);
  layout_ = NetworkLayout(new_tree, config_.plan.per_direction());
  for (NodeIndex i = 0; i < layout_.size(); ++i) {
    if (static_cast<int>(layout_.subarray_roles(i)) > config_.array.s_max) {
      throw ConfigError("node " + std::to_string(node_label(i)) +
                        " has more link roles than sub-arrays");
    }
  }
  last_rates_.clear();
  return std::accumulate(lost.begin(), lost.end(), std::int64_t{0});
}

double calibrate_noise(const Topology& topology, const RoutingTree& tree,
                       const NetworkConfig& config, double mu_up, double mu_dn,
                       double margin) {
  if (!(margin > 0.0) || !(mu_up >= 0.0) || !(mu_dn >= 0.0)) {
    throw ConfigError("calibration margin and demands must be positive");
  }
  NetworkConfig probe = config;
  probe.interference_std_w = 0.0;
  probe.noise_w = 1.0;
  const NetworkLayout layout(tree, probe.plan.per_direction());
  const Allocation alloc = uniform_allocation(layout, 1.0);
  auto worst_ratio = [&](double noise) {
    probe.noise_w = noise;
    const NetworkSimulator sim(topology, tree, probe, 0);
    const auto& links = sim.queues().links();
    const auto lr = sim.rates(alloc, nullptr);
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < links.size(); ++l) {
      const NodeIndex child = links[l].direction == Direction::kUplink
                                  ? links[l].from
                                  : links[l].to;
      const double mu = links[l].direction == Direction::kUplink ? mu_up : mu_dn;
      const double demand = mu * static_cast<double>(tree.subtree_size(child));
      if (demand <= 0.0) continue;
      const double cap =
          lr[l].total_bps * config.queue.slot_s / config.queue.packet_bits;
      worst = std::min(worst, cap / demand);
    }
    return worst;
  };
  double lo = -60.0;  // log10 watts
  double hi = 2.0;
  if (worst_ratio(std::pow(10.0, hi)) > margin ||
      worst_ratio(std::pow(10.0, lo)) < margin) {
    throw ConfigError("no noise level in range reaches the requested margin");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (worst_ratio(std::pow(10.0, mid)) > margin) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::pow(10.0, 0.5 * (lo + hi));
}

}  // namespace thzmesh
