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

#include "thzmesh/routing.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <string>

#include "thzmesh/errors.hpp"

namespace thzmesh {
namespace {

// Two path costs closer than this (relative) count as a tie.
constexpr double kTieTolerance = 1e-12;

bool nearly_equal(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b)) return false;
  return std::abs(a - b) <= kTieTolerance * std::max(std::abs(a), std::abs(b));
}

}  // namespace

double link_cost(double d, const CostParams& params) {
  if (!(d > 0.0)) throw DomainError("link cost needs a positive distance");
  const double r = d / params.d_min;
  return params.iota * r * r + 1.0;
}

RoutingTree deflect_route(const Topology& topology, const CostParams& params) {
  if (params.iota < 0.0) throw ConfigError("iota must be nonnegative");
  const std::size_t n = topology.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> cost(n, kInf);
  std::vector<std::optional<NodeIndex>> parent(n);
  std::vector<bool> done(n, false);

  using Entry = std::pair<double, NodeIndex>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  cost[kDonor] = 0.0;
  heap.emplace(0.0, kDonor);
  while (!heap.empty()) {
    const auto [c, v] = heap.top();
    heap.pop();
    if (done[v] || c > cost[v]) continue;
    done[v] = true;
    for (NodeIndex u : topology.neighbors(v)) {
      if (done[u]) continue;
      const double cand = cost[v] + link_cost(topology.distance(u, v), params);
      if (nearly_equal(cand, cost[u])) {
        if (parent[u] && v < *parent[u]) parent[u] = v;
      } else if (cand < cost[u]) {
        cost[u] = cand;
        parent[u] = v;
        heap.emplace(cand, u);
      }
    }
  }

  std::string missing;
  for (NodeIndex i = 0; i < n; ++i) {
    if (!done[i]) {
      missing += (missing.empty() ? "" : ", ") + std::to_string(node_label(i));
    }
  }
  if (!missing.empty()) {
    throw RoutingError("nodes unreachable from the donor: " + missing);
  }
  return RoutingTree(std::move(parent));
}

double path_cost(const Topology& topology, const RoutingTree& tree,
                 NodeIndex i, const CostParams& params) {
  double total = 0.0;
  const auto path = tree.path_to_root(i);
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    total += link_cost(topology.distance(path[k], path[k + 1]), params);
  }
  return total;
}

RoutingTree recompute_on_failure(const Topology& topology, Link failed,
                                 const CostParams& params) {
  Topology reduced = topology;
  reduced.fail_link(failed);
  return deflect_route(reduced, params);
}

double normalized_link_consumption(double gamma0, std::size_t demands,
                                   double d, double d_min) {
  if (!(gamma0 > 0.0)) throw DomainError("gamma0 must be positive");
  const double r = d / d_min;
  const double rate_factor =
      (std::pow(1.0 + gamma0, static_cast<double>(demands)) - 1.0) / gamma0;
  return rate_factor * r * r;
}

ResourceAnalysis resource_analysis(const RoutingTree& tree,
                                   const Topology& topology, double gamma0) {
  if (!(gamma0 > 0.0)) throw DomainError("gamma0 must be positive");
  ResourceAnalysis out;
  out.gamma0 = gamma0;
  out.per_node.assign(tree.size(), 0.0);
  if (tree.size() < 2) return out;
  double sum = 0.0;
  for (NodeIndex i = 1; i < tree.size(); ++i) {
    const NodeIndex p = tree.parent(i).value();
    out.per_node[i] = normalized_link_consumption(
        gamma0, tree.subtree_size(i), topology.distance(i, p),
        topology.d_min());
    sum += out.per_node[i];
  }
  out.mean = sum / static_cast<double>(tree.size() - 1);
  return out;
}

}  // namespace thzmesh
