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

#ifndef THZMESH_NETSIM_HPP_
#define THZMESH_NETSIM_HPP_

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "thzmesh/channel.hpp"
#include "thzmesh/topology.hpp"
#include "thzmesh/traffic.hpp"

namespace thzmesh {

// Links of one node in canonical order: parent first (if any), then children
// in ascending index order.
struct NodeLinks {
  std::vector<NodeIndex> neighbors;
  bool has_parent = false;

  std::size_t count() const { return neighbors.size(); }
  bool is_parent_link(std::size_t l) const { return has_parent && l == 0; }
};

class NetworkLayout {
 public:
  NetworkLayout() = default;
  NetworkLayout(const RoutingTree& tree, std::size_t bands_per_direction);

  std::size_t size() const { return links_.size(); }
  const RoutingTree& tree() const { return tree_; }
  std::size_t bands_per_direction() const { return bands_; }
  const NodeLinks& links(NodeIndex i) const { return links_.at(i); }
  // Position of neighbor j in links(i). Throws UsageError when absent.
  std::size_t link_index(NodeIndex i, NodeIndex j) const;

  std::size_t power_entries(NodeIndex i) const { return links(i).count() * bands_; }
  std::size_t subarray_roles(NodeIndex i) const { return 2 * links(i).count(); }

 private:
  RoutingTree tree_;
  std::size_t bands_ = 0;
  std::vector<NodeLinks> links_;
};

// Resource split of one node. power[l * bands + k] is the share of P_max on
// link l and band k (the node's uplink bands on its parent link, downlink
// bands on child links). subarray[2 l] is the transmit share and
// subarray[2 l + 1] the receive share of link l.
struct NodeAllocation {
  std::vector<double> power;
  double idle_power = 1.0;
  std::vector<double> subarray;
  double idle_subarray = 1.0;
};
using Allocation = std::vector<NodeAllocation>;

// Every share spread evenly over entries, with `utilized` of each budget in
// use.
NodeAllocation uniform_allocation(const NetworkLayout& layout, NodeIndex i,
                                  double utilized = 1.0);
Allocation uniform_allocation(const NetworkLayout& layout, double utilized = 1.0);

// Nonnegative shares whose total (idle included) is 1 within tol.
bool budgets_hold(const NodeAllocation& a, double tol = 1e-9);

// One sub-array per role up front, then 1 + floor(share * remaining) each.
// Throws ConfigError when the roles outnumber S_max and UsageError when the
// shares are negative or sum above 1.
std::vector<int> quantize_subarrays(std::span<const double> shares, int s_max);

// floor(R dt / omega), guarded against representation error just below an
// integer.
std::int64_t transmittable_packets(double rate_bps, double slot_s,
                                   double packet_bits);

// Tail-drop loss of one output buffer in a slot.
std::int64_t link_loss(std::int64_t incoming, double rate_bps,
                       std::int64_t backlog, std::int64_t buffer_packets,
                       double slot_s, double packet_bits);

// Per-hop latency of a packet served with `position` packets ahead of it.
// waited_slots == 0 is same-slot service; otherwise the packet waited that
// many slot boundaries (carryover + 1) before being served at rate_bps.
struct LatencyQuery {
  std::int64_t position = 0;
  double rate_bps = 0.0;
  double distance_m = 0.0;
  std::int64_t waited_slots = 0;
  double slot_s = 0.15;
  double packet_bits = 16000.0;
  double arrival_offset_s = 0.0;
};
// Throws DomainError when the rate is not positive.
double batch_latency(const LatencyQuery& q);

struct RewardWeights {
  double chi1 = 100.0;
  double chi2 = 5000.0;
  double chi3 = 5000.0;
  double chi4 = 0.1;
};

double reward(double mean_u, double up_latency_s, double down_latency_s,
              std::int64_t lost, const RewardWeights& w);

struct QueueConfig {
  double slot_s = 0.15;
  double packet_bits = 16000.0;
  std::int64_t buffer_packets = 200000;
};

struct DirectedLink {
  NodeIndex from = 0;
  NodeIndex to = 0;
  Direction direction = Direction::kUplink;
};

// Run of packets that entered a buffer together. Packet k of the run has
// accumulated latency first_latency + k * latency_step.
struct Batch {
  std::int64_t count = 0;
  std::size_t entered_slot = 0;
  NodeIndex origin = 0;
  NodeIndex destination = 0;
  Direction direction = Direction::kUplink;
  double first_latency = 0.0;
  double latency_step = 0.0;
};

struct QueueSlotResult {
  std::vector<std::int64_t> lost_per_link;
  std::int64_t lost = 0;
  std::int64_t delivered_up = 0;
  std::int64_t delivered_down = 0;
  double latency_sum_up = 0.0;
  double latency_sum_down = 0.0;
  // Minimum over delivered packets of latency minus the propagation floor of
  // its path; negative would mean a violated floor.
  double min_latency_slack = 0.0;
  std::vector<std::int64_t> injected_by_origin;
  std::vector<std::int64_t> delivered_by_origin;
  std::vector<std::int64_t> lost_by_origin;
};

// FIFO output buffers, one per directed tree link, served in an order where
// every link is processed after the links that feed it.
class QueueNetwork {
 public:
  QueueNetwork(const Topology& topology, const RoutingTree& tree,
               QueueConfig config);

  const std::vector<DirectedLink>& links() const { return links_; }
  std::size_t link_id(NodeIndex from, NodeIndex to) const;
  const QueueConfig& config() const { return config_; }

  // rate_bps is indexed like links().
  QueueSlotResult advance(std::size_t slot, std::span<const double> rate_bps,
                          const ArrivalSample& arrivals);

  std::int64_t backlog(std::size_t link) const { return backlog_.at(link); }
  double occupancy(std::size_t link) const;
  std::int64_t buffered_total() const;
  std::vector<std::int64_t> buffered_by_origin() const;
  const std::deque<Batch>& queue(std::size_t link) const { return queues_.at(link); }

  // Moves every buffered batch onto the new tree's links. Downlink batches
  // stranded at a node that no longer lies on the destination's path are
  // dropped. Returns lost packets per origin.
  std::vector<std::int64_t> reroute(const RoutingTree& tree);

 private:
  void build(const RoutingTree& tree);
  std::size_t next_link(NodeIndex at, const Batch& b) const;
  double propagation_floor(NodeIndex origin, NodeIndex destination) const;

  Topology topology_;
  RoutingTree tree_;
  QueueConfig config_;
  std::vector<DirectedLink> links_;
  std::map<std::pair<NodeIndex, NodeIndex>, std::size_t> index_;
  std::vector<std::deque<Batch>> queues_;
  std::vector<std::int64_t> backlog_;
};

struct NetworkConfig {
  QueueConfig queue;
  double p_max_w = 1.0;  // 30 dBm
  ArrayConfig array;
  SubBandPlan plan = SubBandPlan::standard();
  double noise_w = 1e-21;
  double interference_mean_w = 0.0;
  double interference_std_w = 0.0;
  double band_usage_threshold = 1e-9;
  RewardWeights weights;
};

// What node i sees on each of its links (canonical order): per-stream SINR on
// the link's uplink and downlink bands during the last slot, its own output
// buffer occupancy toward the neighbor and the neighbor's toward it.
struct LinkObservation {
  std::vector<double> uplink_sinr;
  std::vector<double> downlink_sinr;
  double own_occupancy = 0.0;
  double neighbor_occupancy = 0.0;
};
struct NodeObservation {
  std::vector<LinkObservation> links;
};

struct SlotOutcome {
  std::size_t slot = 0;
  std::int64_t lost = 0;
  std::vector<std::int64_t> lost_per_link;  // indexed like QueueNetwork::links()
  double up_latency_s = 0.0;                // 0 when nothing was delivered
  double down_latency_s = 0.0;
  std::int64_t delivered_up = 0;
  std::int64_t delivered_down = 0;
  std::vector<double> u_power;
  std::vector<double> u_subarray;
  std::vector<double> u;
  double mean_u = 0.0;
  double mean_u_power = 0.0;
  double mean_u_subarray = 0.0;
  double reward = 0.0;
  std::vector<double> link_rate_bps;
  std::size_t budget_violations = 0;
  double min_latency_slack = 0.0;
  std::vector<std::int64_t> injected_by_origin;
  std::vector<std::int64_t> delivered_by_origin;
  std::vector<std::int64_t> lost_by_origin;
};

double reward(const SlotOutcome& o, const RewardWeights& w);

class NetworkSimulator {
 public:
  NetworkSimulator(Topology topology, const RoutingTree& tree,
                   NetworkConfig config, std::uint64_t seed);

  const Topology& topology() const { return topology_; }
  const NetworkLayout& layout() const { return layout_; }
  const NetworkConfig& config() const { return config_; }
  const QueueNetwork& queues() const { return queues_; }
  std::size_t slot() const { return slot_; }

  // Applies the allocation for one slot, serves every buffer and scores the
  // slot. Allocation shares must already satisfy the node budgets.
  SlotOutcome step(const Allocation& allocation, const ArrivalSample& arrivals);

  std::vector<NodeObservation> observe() const;

  // Link rates (indexed like queues().links()) for an allocation, with the
  // interference drawn from `interference` or held at its mean when null.
  std::vector<LinkRate> rates(const Allocation& allocation,
                              std::mt19937_64* interference) const;

  // Removes the link, installs the new tree and moves buffered traffic.
  // Returns the packets lost in the move.
  std::int64_t apply_failure(Link failed, const RoutingTree& new_tree);

 private:
  Topology topology_;
  NetworkConfig config_;
  NetworkLayout layout_;
  QueueNetwork queues_;
  std::mt19937_64 rng_;
  std::size_t slot_ = 0;
  std::vector<LinkRate> last_rates_;
};

// Noise power at which the uniform full-resource allocation serves every
// link's mean demand with exactly `margin` times the needed packet capacity.
double calibrate_noise(const Topology& topology, const RoutingTree& tree,
                       const NetworkConfig& config, double mu_up, double mu_dn,
                       double margin);

}  // namespace thzmesh

#endif  // THZMESH_NETSIM_HPP_
