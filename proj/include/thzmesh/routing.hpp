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

#ifndef THZMESH_ROUTING_HPP_
#define THZMESH_ROUTING_HPP_

#include <vector>

#include "thzmesh/topology.hpp"

namespace thzmesh {

struct CostParams {
  double iota = 1.0;  // weight of the squared-distance term
  double d_min = 100.0;
};

// iota * (d / d_min)^2 + 1. Throws DomainError for d <= 0.
double link_cost(double d, const CostParams& params);

// Minimum-cost parent tree toward the donor (binary-heap Dijkstra). Equal
// costs resolve to the lower parent index. Throws RoutingError listing the
// labels of unreachable nodes.
RoutingTree deflect_route(const Topology& topology, const CostParams& params);

// Sum of link costs along i's parent chain.
double path_cost(const Topology& topology, const RoutingTree& tree,
                 NodeIndex i, const CostParams& params);

// Routes on a copy of `topology` with `failed` removed.
RoutingTree recompute_on_failure(const Topology& topology, Link failed,
                                 const CostParams& params);

// Consumption of P * S_t * S_r per node relative to a leaf at d_min, with
// every node demanding the rate a leaf reaches at SINR gamma0.
struct ResourceAnalysis {
  double gamma0 = 1.0;
  std::vector<double> per_node;  // index 0 (donor) is unused and left 0
  double mean = 0.0;             // over nodes 2..N
};

// ((1 + g)^n - 1) / g * (d / d_min)^2 for a link carrying n node demands.
double normalized_link_consumption(double gamma0, std::size_t demands,
                                   double d, double d_min);

ResourceAnalysis resource_analysis(const RoutingTree& tree,
                                   const Topology& topology, double gamma0);

}  // namespace thzmesh

#endif  // THZMESH_ROUTING_HPP_
