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


// Reference models shared by the unit tests and the acceptance binary. They
// are written independently of the library code they check.

#ifndef THZMESH_TESTS_ORACLES_HPP_
#define THZMESH_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "thzmesh/channel.hpp"
#include "thzmesh/routing.hpp"
#include "thzmesh/topology.hpp"

namespace oracle {

using thzmesh::NodeIndex;

// Minimal cost to the donor over every simple path, summed from the node
// toward the donor. Unreachable nodes get +inf.
inline std::vector<double> brute_force_costs(const thzmesh::Topology& t,
                                             const thzmesh::CostParams& p) {
  const std::size_t n = t.size();
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  best[0] = 0.0;
  std::vector<NodeIndex> path;
  std::vector<bool> on_path(n, false);
  // depth-first walk from each source; cost summed in path order
  auto dfs = [&](auto&& self, NodeIndex v, NodeIndex src) -> void {
    if (v == 0) {
      double c = 0.0;
      for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        const double d = t.distance(path[k], path[k + 1]);
        c += 1.0 + p.iota * (d / p.d_min) * (d / p.d_min);
      }
      best[src] = std::min(best[src], c);
      return;
    }
    for (NodeIndex u = 0; u < n; ++u) {
      if (on_path[u] || !t.is_neighbor(v, u)) continue;
      on_path[u] = true;
      path.push_back(u);
      self(self, u, src);
      path.pop_back();
      on_path[u] = false;
    }
  };
  for (NodeIndex s = 1; s < n; ++s) {
    path = {s};
    std::fill(on_path.begin(), on_path.end(), false);
    on_path[s] = true;
    dfs(dfs, s, s);
  }
  return best;
}

inline bool connected(const thzmesh::Topology& t) {
  std::vector<bool> seen(t.size(), false);
  std::vector<NodeIndex> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const NodeIndex v = stack.back();
    stack.pop_back();
    for (NodeIndex u : t.neighbors(v)) {
      if (!seen[u]) {
        seen[u] = true;
        stack.push_back(u);
      }
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

// Random connected placement of n nodes with d_min = 100, d_max = 200.
inline thzmesh::Topology random_connected_topology(std::mt19937_64& rng,
                                                   std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 120.0 * std::sqrt(double(n)) + 100.0);
  for (;;) {
    std::vector<thzmesh::Point> pts;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      const thzmesh::Point q{u(rng), u(rng)};
      for (const auto& p : pts) {
        if (std::hypot(p.x - q.x, p.y - q.y) < 100.0) ok = false;
      }
      pts.push_back(q);
    }
    if (!ok) continue;
    thzmesh::Topology t(pts, 100.0, 200.0);
    if (connected(t)) return t;
  }
}

// Packet-by-packet FIFO simulator of the same slot model: local arrivals are
// offered to their first link before relayed traffic, admission is limited by
// free buffer space plus this slot's service, and every served packet pays
// its transmission order, propagation and the slots it waited.
class PacketSim {
 public:
  struct Config {
    double slot_s = 0.15;
    double packet_bits = 16000.0;
    std::int64_t buffer = 200000;
    double arrival_offset_s = 0.0;
  };
  struct Result {
    std::map<std::pair<NodeIndex, NodeIndex>, std::int64_t> lost;
    std::int64_t lost_total = 0;
    std::int64_t delivered_up = 0;
    std::int64_t delivered_down = 0;
    double latency_sum_up = 0.0;
    double latency_sum_down = 0.0;
  };

  PacketSim(const thzmesh::Topology& t, const thzmesh::RoutingTree& tree,
            Config c)
      : topo_(t), tree_(tree), cfg_(c) {
    const std::size_t n = tree.size();
    std::vector<std::size_t> depth(n, 0);
    for (NodeIndex i = 0; i < n; ++i) {
      for (NodeIndex v = i; tree.parent(v); v = *tree.parent(v)) ++depth[i];
    }
    struct Key {
      int dir;
      long d;
      NodeIndex from, to;
    };
    std::vector<Key> keys;
    for (NodeIndex i = 1; i < n; ++i) {
      const NodeIndex p = *tree.parent(i);
      keys.push_back({0, -long(depth[i]), i, p});
      keys.push_back({1, long(depth[p]), p, i});
    }
    std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
      if (a.dir != b.dir) return a.dir < b.dir;
      if (a.d != b.d) return a.d < b.d;
      if (a.from != b.from) return a.from < b.from;
      return a.to < b.to;
    });
    for (const Key& k : keys) order_.push_back({k.from, k.to});
  }

  // rate[{from, to}] in bit/s; uplink[i] and downlink[i] as in ArrivalSample.
  Result step(std::size_t slot,
              const std::map<std::pair<NodeIndex, NodeIndex>, double>& rate,
              const std::vector<std::int64_t>& uplink,
              const std::vector<std::int64_t>& downlink) {
    Result res;
    std::map<std::pair<NodeIndex, NodeIndex>, std::vector<Packet>> in;
    const std::size_t n = tree_.size();
    for (NodeIndex i = 1; i < n; ++i) {
      for (std::int64_t k = 0; k < uplink[i]; ++k) {
        in[{i, *tree_.parent(i)}].push_back({true, i, 0.0, 0});
      }
    }
    for (NodeIndex i = 1; i < n; ++i) {
      for (std::int64_t k = 0; k < downlink[i]; ++k) {
        in[{0, hop_toward(0, i)}].push_back({false, i, 0.0, 0});
      }
    }
    for (const auto& key : order_) {
      auto& q = buf_[key];
      auto& arriving = in[key];
      const double r = rate.at(key);
      const std::int64_t cap = std::int64_t(
          std::floor(r * cfg_.slot_s / cfg_.packet_bits + 1e-9));
      std::int64_t room = cfg_.buffer - std::int64_t(q.size()) + cap;
      std::int64_t dropped = 0;
      for (Packet& p : arriving) {
        if (room > 0) {
          p.entered = slot;
          q.push_back(p);
          --room;
        } else {
          ++dropped;
        }
      }
      res.lost[key] = dropped;
      res.lost_total += dropped;
      const double d = topo_.distance(key.first, key.second);
      for (std::int64_t pos = 0; pos < cap && !q.empty(); ++pos) {
        Packet p = q.front();
        q.pop_front();
        p.latency += double(pos + 1) * cfg_.packet_bits / r +
                     d / thzmesh::kSpeedOfLight;
        if (slot > p.entered) {
          p.latency += double(slot - p.entered) * cfg_.slot_s -
                       cfg_.arrival_offset_s;
        }
        const NodeIndex at = key.second;
        const bool done = p.up ? at == 0 : at == p.dest;
        if (done) {
          if (p.up) {
            ++res.delivered_up;
            res.latency_sum_up += p.latency;
          } else {
            ++res.delivered_down;
            res.latency_sum_down += p.latency;
          }
        } else {
          const NodeIndex next = p.up ? *tree_.parent(at) : hop_toward(at, p.dest);
          in[{at, next}].push_back(p);
        }
      }
    }
    return res;
  }

  std::int64_t buffered() const {
    std::int64_t s = 0;
    for (const auto& [k, q] : buf_) s += std::int64_t(q.size());
    return s;
  }

 private:
  struct Packet {
    bool up;
    NodeIndex dest;  // destination of downlink packets
    double latency;
    std::size_t entered;
  };

  NodeIndex hop_toward(NodeIndex at, NodeIndex dest) const {
    NodeIndex v = dest;
    while (*tree_.parent(v) != at) v = *tree_.parent(v);
    return v;
  }

  const thzmesh::Topology& topo_;
  thzmesh::RoutingTree tree_;
  Config cfg_;
  std::vector<std::pair<NodeIndex, NodeIndex>> order_;
  std::map<std::pair<NodeIndex, NodeIndex>, std::deque<Packet>> buf_;
};

}  // namespace oracle

#endif  // THZMESH_TESTS_ORACLES_HPP_
