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

#ifndef THZMESH_TOPOLOGY_HPP_
#define THZMESH_TOPOLOGY_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <utility>
#include <vector>

namespace thzmesh {

// Nodes are addressed by 0-based index internally; index 0 is the IAB donor.
// Config files and reports use 1-based labels (donor = 1).
using NodeIndex = std::size_t;
inline constexpr NodeIndex kDonor = 0;

inline int node_label(NodeIndex i) { return static_cast<int>(i) + 1; }

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Unordered node pair, stored with first < second.
struct Link {
  NodeIndex a = 0;
  NodeIndex b = 0;

  Link() = default;
  Link(NodeIndex u, NodeIndex v) : a(u < v ? u : v), b(u < v ? v : u) {}
  friend auto operator<=>(const Link&, const Link&) = default;
};

class Topology {
 public:
  // Throws ConfigError if d_min >= d_max, the node list is empty, or two
  // nodes are closer than d_min.
  Topology(std::vector<Point> positions, double d_min, double d_max);

  std::size_t size() const { return positions_.size(); }
  const Point& position(NodeIndex i) const { return positions_.at(i); }
  const std::vector<Point>& positions() const { return positions_; }
  double d_min() const { return d_min_; }
  double d_max() const { return d_max_; }

  double distance(NodeIndex i, NodeIndex j) const;

  // j is a neighbor of i iff j != i, d(i,j) in [d_min, d_max] and the pair
  // has not failed.
  bool is_neighbor(NodeIndex i, NodeIndex j) const;
  std::vector<NodeIndex> neighbors(NodeIndex i) const;
  std::vector<Link> available_links() const;

  // Removes the link from all neighbor sets. Failing a pair that is not in
  // range is allowed and has no effect on neighbor sets.
  void fail_link(Link link);
  bool link_failed(Link link) const { return failed_.contains(link); }
  const std::set<Link>& failed_links() const { return failed_; }

 private:
  std::vector<Point> positions_;
  double d_min_;
  double d_max_;
  std::set<Link> failed_;
};

// Donor at the origin plus `rings` hexagonal rings of a triangular lattice
// with nearest-neighbor distance `spacing`. Ring r holds 6r nodes.
Topology build_hexagonal(double spacing, int rings, double d_min, double d_max);

using AdjacencyMatrix = std::vector<std::vector<std::uint8_t>>;

// Parent-pointer tree rooted at the donor. A(i, j) = 1 iff j is the parent
// of i.
class RoutingTree {
 public:
  RoutingTree() = default;
  explicit RoutingTree(std::vector<std::optional<NodeIndex>> parent);

  std::size_t size() const { return parent_.size(); }
  std::optional<NodeIndex> parent(NodeIndex i) const { return parent_.at(i); }
  const std::vector<std::optional<NodeIndex>>& parents() const {
    return parent_;
  }
  // Children in ascending index order.
  const std::vector<NodeIndex>& children(NodeIndex i) const {
    return children_.at(i);
  }
  bool is_branch(NodeIndex i) const { return !children_.at(i).empty(); }

  // Nodes from i (inclusive) up to the donor (inclusive). Requires a valid
  // tree.
  std::vector<NodeIndex> path_to_root(NodeIndex i) const;
  std::size_t depth(NodeIndex i) const;
  // Number of nodes in the subtree rooted at i (including i).
  std::size_t subtree_size(NodeIndex i) const;
  // Child of `ancestor` on the path to `descendant`, if ancestor is a strict
  // ancestor.
  std::optional<NodeIndex> next_hop_down(NodeIndex ancestor,
                                         NodeIndex descendant) const;

  AdjacencyMatrix adjacency() const;
  friend bool operator==(const RoutingTree& a, const RoutingTree& b) {
    return a.parent_ == b.parent_;
  }

 private:
  std::vector<std::optional<NodeIndex>> parent_;
  std::vector<std::vector<NodeIndex>> children_;
};

// Acyclicity of the directed graph with edge i->j for A(i,j) != 0,
// self-loops included, by iterative depth-first search.
bool is_acyclic(const AdjacencyMatrix& a);

// Row-sum condition (donor has no parent, everyone else exactly one) and
// acyclicity. Non-square input returns false.
bool validate_dag(const AdjacencyMatrix& a);
bool validate_dag(const RoutingTree& tree);

}  // namespace thzmesh

#endif  // THZMESH_TOPOLOGY_HPP_
