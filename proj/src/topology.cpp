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

#include "thzmesh/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "thzmesh/errors.hpp"

namespace thzmesh {
namespace {

// Geometry comparisons tolerate rounding in lattice construction.
constexpr double kDistanceSlack = 1e-9;

}  // namespace

Topology::Topology(std::vector<Point> positions, double d_min, double d_max)
    : positions_(std::move(positions)), d_min_(d_min), d_max_(d_max) {
  if (positions_.empty()) throw ConfigError("topology needs at least one node");
  if (!(d_min_ > 0.0) || !(d_min_ < d_max_)) {
    throw ConfigError("topology requires 0 < d_min < d_max");
  }
  for (NodeIndex i = 0; i < size(); ++i) {
    for (NodeIndex j = i + 1; j < size(); ++j) {
      if (distance(i, j) < d_min_ - kDistanceSlack) {
        throw ConfigError("nodes " + std::to_string(node_label(i)) + " and " +
                          std::to_string(node_label(j)) +
                          " are closer than d_min");
      }
    }
  }
}

double Topology::distance(NodeIndex i, NodeIndex j) const {
  const Point& p = positions_.at(i);
  const Point& q = positions_.at(j);
  return std::hypot(p.x - q.x, p.y - q.y);
}

bool Topology::is_neighbor(NodeIndex i, NodeIndex j) const {
  if (i == j) return false;
  const double d = distance(i, j);
  if (d < d_min_ - kDistanceSlack || d > d_max_ + kDistanceSlack) return false;
  return !failed_.contains(Link(i, j));
}

std::vector<NodeIndex> Topology::neighbors(NodeIndex i) const {
  std::vector<NodeIndex> out;
  for (NodeIndex j = 0; j < size(); ++j) {
    if (is_neighbor(i, j)) out.push_back(j);
  }
  return out;
}

std::vector<Link> Topology::available_links() const {
  std::vector<Link> out;
  for (NodeIndex i = 0; i < size(); ++i) {
    for (NodeIndex j = i + 1; j < size(); ++j) {
      if (is_neighbor(i, j)) out.emplace_back(i, j);
    }
  }
  return out;
}

void Topology::fail_link(Link link) {
  if (link.a == link.b || link.b >= size()) {
    throw ConfigError("failed link references an invalid node pair");
  }
  failed_.insert(link);
}

Topology build_hexagonal(double spacing, int rings, double d_min,
                         double d_max) {
  if (rings < 0) throw ConfigError("ring count must be nonnegative");
  if (spacing < d_min || spacing > d_max) {
    throw ConfigError("hexagon spacing must lie in [d_min, d_max]");
  }
  std::vector<Point> pts{{0.0, 0.0}};
  auto corner = [](int k) {
    const double a = std::numbers::pi / 3.0 * static_cast<double>(k % 6);
    return Point{std::cos(a), std::sin(a)};
  };
  for (int r = 1; r <= rings; ++r) {
    for (int k = 0; k < 6; ++k) {
      const Point c = corner(k);
      const Point step = corner(k + 2);
      for (int m = 0; m < r; ++m) {
        pts.push_back({spacing * (r * c.x + m * step.x),
                       spacing * (r * c.y + m * step.y)});
      }
    }
  }
  return Topology(std::move(pts), d_min, d_max);
}

RoutingTree::RoutingTree(std::vector<std::optional<NodeIndex>> parent)
    : parent_(std::move(parent)), children_(parent_.size()) {
  for (NodeIndex i = 0; i < parent_.size(); ++i) {
    if (parent_[i]) {
      if (*parent_[i] >= parent_.size()) {
        throw UsageError("parent index out of range");
      }
      children_[*parent_[i]].push_back(i);
    }
  }
}

std::vector<NodeIndex> RoutingTree::path_to_root(NodeIndex i) const {
  std::vector<NodeIndex> path{i};
  while (parent_.at(path.back())) {
    path.push_back(*parent_[path.back()]);
    if (path.size() > size()) throw UsageError("routing tree has a cycle");
  }
  return path;
}

std::size_t RoutingTree::depth(NodeIndex i) const {
  return path_to_root(i).size() - 1;
}

std::size_t RoutingTree::subtree_size(NodeIndex i) const {
  std::size_t n = 1;
  for (NodeIndex c : children_.at(i)) n += subtree_size(c);
  return n;
}

std::optional<NodeIndex> RoutingTree::next_hop_down(
    NodeIndex ancestor, NodeIndex descendant) const {
  NodeIndex cur = descendant;
  while (parent_.at(cur)) {
    if (*parent_[cur] == ancestor) return cur;
    cur = *parent_[cur];
  }
  return std::nullopt;
}

AdjacencyMatrix RoutingTree::adjacency() const {
  AdjacencyMatrix a(size(), std::vector<std::uint8_t>(size(), 0));
  for (NodeIndex i = 0; i < size(); ++i) {
    if (parent_[i]) a[i][*parent_[i]] = 1;
  }
  return a;
}

bool is_acyclic(const AdjacencyMatrix& a) {
  const std::size_t n = a.size();
  enum class Mark : std::uint8_t { kWhite, kGrey, kBlack };
  std::vector<Mark> mark(n, Mark::kWhite);
  // Explicit stack of (node, next successor to inspect).
  std::vector<std::pair<std::size_t, std::size_t>> stack;
  for (std::size_t s = 0; s < n; ++s) {
    if (mark[s] != Mark::kWhite) continue;
    stack.emplace_back(s, 0);
    mark[s] = Mark::kGrey;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      if (next == n) {
        mark[v] = Mark::kBlack;
        stack.pop_back();
        continue;
      }
      const std::size_t u = next++;
      if (a[v][u] == 0) continue;
      if (mark[u] == Mark::kGrey) return false;
      if (mark[u] == Mark::kWhite) {
        mark[u] = Mark::kGrey;
        stack.emplace_back(u, 0);
      }
    }
  }
  return true;
}

bool validate_dag(const AdjacencyMatrix& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i].size() != n) return false;
    std::size_t row = 0;
    for (std::uint8_t v : a[i]) row += v != 0 ? 1 : 0;
    if (row != (i == kDonor ? 0u : 1u)) return false;
  }
  return is_acyclic(a);
}

bool validate_dag(const RoutingTree& tree) {
  return validate_dag(tree.adjacency());
}

}  // namespace thzmesh
