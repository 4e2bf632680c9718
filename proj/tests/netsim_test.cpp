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


#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <random>

#include "support/oracles.hpp"
#include "thzmesh/errors.hpp"
#include "thzmesh/netsim.hpp"

using namespace thzmesh;

namespace {

constexpr double kSlot = 0.15;
constexpr double kBits = 16000.0;

double rate_for(std::int64_t packets, double extra = 0.0) {
  return (double(packets) + extra) * kBits / kSlot;
}

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n,
                                   double total) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(n);
  double s = 0;
  for (auto& x : v) s += (x = e(rng));
  for (auto& x : v) x *= total / s;
  return v;
}

// Random allocation that meets each node budget exactly.
Allocation random_allocation(std::mt19937_64& rng, const NetworkLayout& layout) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Allocation out;
  for (NodeIndex i = 0; i < layout.size(); ++i) {
    NodeAllocation a;
    auto p = random_simplex(rng, layout.power_entries(i) + 1, 1.0);
    a.idle_power = p.back();
    p.pop_back();
    for (auto& x : p) {
      if (u(rng) < 0.1) {  // switch some bands off entirely
        a.idle_power += x;
        x = 0.0;
      }
    }
    a.power = p;
    auto s = random_simplex(rng, layout.subarray_roles(i) + 1, 1.0);
    a.idle_subarray = s.back();
    s.pop_back();
    a.subarray = s;
    out.push_back(a);
  }
  return out;
}

ArrivalSample zero_arrivals(std::size_t n) {
  return {std::vector<std::int64_t>(n, 0), std::vector<std::int64_t>(n, 0)};
}

}  // namespace

TEST_CASE("sub-array quantization") {
  CHECK(quantize_subarrays(std::vector<double>{0.5, 0.25}, 64) ==
        std::vector<int>{32, 16});
  CHECK(quantize_subarrays(std::vector<double>(6, 0.0), 64) == std::vector<int>(6, 1));
  CHECK_THROWS_AS(quantize_subarrays(std::vector<double>(65, 0.0), 64), ConfigError);
  CHECK_THROWS_AS(quantize_subarrays(std::vector<double>{-0.1, 0.2}, 64), UsageError);
  CHECK_THROWS_AS(quantize_subarrays(std::vector<double>{0.7, 0.4}, 64), UsageError);

  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> roles(1, 32);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    const auto shares = random_simplex(rng, std::size_t(roles(rng)), u(rng));
    const auto c = quantize_subarrays(shares, 64);
    CHECK(std::accumulate(c.begin(), c.end(), 0) <= 64);
    for (int v : c) CHECK(v >= 1);
  }
}

TEST_CASE("link loss") {
  CHECK(link_loss(100, rate_for(30), 0, 50, kSlot, kBits) == 20);
  CHECK(link_loss(10, rate_for(30), 20, 50, kSlot, kBits) == 0);
  CHECK(link_loss(0, rate_for(30), 50, 50, kSlot, kBits) == 0);
  CHECK(link_loss(7, 0.0, 50, 50, kSlot, kBits) == 7);
  CHECK(transmittable_packets(rate_for(30), kSlot, kBits) == 30);
  CHECK(transmittable_packets(rate_for(30, 0.999), kSlot, kBits) == 30);
  CHECK(transmittable_packets(0.0, kSlot, kBits) == 0);
}

TEST_CASE("batch latency") {
  LatencyQuery q;
  q.position = 9;
  q.rate_bps = kBits / 1e-4;
  q.distance_m = 150.0;
  CHECK(batch_latency(q) == doctest::Approx(1e-3 + 150.0 / kSpeedOfLight).epsilon(1e-14));
  CHECK(150.0 / kSpeedOfLight == doctest::Approx(0.5e-6).epsilon(1e-3));

  LatencyQuery fast;
  fast.rate_bps = 1e30;
  fast.distance_m = 150.0;
  CHECK(batch_latency(fast) == doctest::Approx(150.0 / kSpeedOfLight).epsilon(1e-12));

  LatencyQuery waited = q;
  waited.waited_slots = 1;
  CHECK(batch_latency(waited) - batch_latency(q) == doctest::Approx(kSlot).epsilon(1e-12));
  waited.arrival_offset_s = 0.05;
  CHECK(batch_latency(waited) - batch_latency(q) == doctest::Approx(0.1).epsilon(1e-12));

  q.rate_bps = 0.0;
  CHECK_THROWS_AS(batch_latency(q), DomainError);
}

TEST_CASE("reward") {
  const RewardWeights w;
  CHECK(reward(0.75, 0.0, 1e-3, 0, w) == doctest::Approx(-80.0));
  CHECK(reward(0.0, 0.0, 0.0, 0, w) == 0.0);
  CHECK(reward(0.0, 0.0, 0.0, 10, w) == doctest::Approx(-1.0));
}

TEST_CASE("layout and uniform allocation") {
  const Topology t = build_hexagonal(150.0, 1, 100.0, 200.0);
  const RoutingTree tree = deflect_route(t, {});
  const NetworkLayout layout(tree, 5);
  CHECK(layout.links(0).count() == 6);
  CHECK_FALSE(layout.links(0).has_parent);
  CHECK(layout.links(3).count() == 1);
  CHECK(layout.links(3).is_parent_link(0));
  CHECK(layout.power_entries(0) == 30);
  CHECK(layout.subarray_roles(3) == 2);
  CHECK(layout.link_index(0, 4) == 3);
  CHECK_THROWS_AS(layout.link_index(1, 2), UsageError);
  for (const auto& a : uniform_allocation(layout, 0.6)) {
    CHECK(budgets_hold(a));
    CHECK(a.idle_power == doctest::Approx(0.4));
  }
  NodeAllocation bad = uniform_allocation(layout, NodeIndex{3});
  bad.power[0] += 0.01;
  CHECK_FALSE(budgets_hold(bad));
}

TEST_CASE("idle slot reports the allocated occupation and no penalty") {
  const Topology t = build_hexagonal(150.0, 1, 100.0, 200.0);
  const RoutingTree tree = deflect_route(t, {});
  NetworkSimulator sim(t, tree, NetworkConfig{}, 1);
  const Allocation alloc = uniform_allocation(sim.layout(), 0.7);
  const SlotOutcome o = sim.step(alloc, zero_arrivals(7));
  CHECK(o.lost == 0);
  CHECK(o.up_latency_s == 0.0);
  CHECK(o.down_latency_s == 0.0);
  CHECK(o.budget_violations == 0);
  // donor: 12 roles sharing 0.7 of the 52 free sub-arrays
  const double donor_s = 12.0 * (1.0 + std::floor(0.7 / 12.0 * 52.0)) / 64.0;
  const double leaf_s = 2.0 * (1.0 + std::floor(0.35 * 62.0)) / 64.0;
  CHECK(o.u_power[0] == doctest::Approx(0.7));
  CHECK(o.u_subarray[0] == doctest::Approx(donor_s));
  CHECK(o.u_power[4] == doctest::Approx(0.7));
  CHECK(o.u_subarray[4] == doctest::Approx(leaf_s));
  CHECK(o.mean_u == doctest::Approx((0.7 + (donor_s + 6 * leaf_s) / 7.0) / 2.0));
  CHECK(o.reward == doctest::Approx(-100.0 * o.mean_u));
}

TEST_CASE("balanced flow is served within the slot") {
  const Topology t({{0, 0}, {0, 150}, {0, 290}}, 100.0, 200.0);
  const RoutingTree tree = deflect_route(t, {});
  QueueNetwork q(t, tree, {kSlot, kBits, 100});
  const ArrivalSample a{{0, 13, 21}, {0, 8, 5}};
  std::vector<double> rate(q.links().size());
  rate[q.link_id(2, 1)] = rate_for(21);
  rate[q.link_id(1, 0)] = rate_for(34);
  rate[q.link_id(0, 1)] = rate_for(13);
  rate[q.link_id(1, 2)] = rate_for(5);
  const QueueSlotResult r = q.advance(0, rate, a);
  CHECK(r.lost == 0);
  CHECK(r.delivered_up == 34);
  CHECK(r.delivered_down == 13);
  CHECK(q.buffered_total() == 0);
}

TEST_CASE("two-node line oversubscribed by one packet beyond buffer and service") {
  const Topology t({{0, 0}, {150, 0}}, 100.0, 200.0);
  const RoutingTree tree = deflect_route(t, {});
  const std::int64_t omega = 40, cap = 12;
  QueueNetwork q(t, tree, {kSlot, kBits, omega});
  oracle::PacketSim sim(t, tree, {kSlot, kBits, omega, 0.0});
  const ArrivalSample a{{0, omega + cap + 1}, {0, 0}};
  std::vector<double> rate(q.links().size(), rate_for(cap));
  const auto r = q.advance(0, rate, a);
  const auto s = sim.step(0, {{{1, 0}, rate_for(cap)}, {{0, 1}, rate_for(cap)}},
                          a.uplink, a.downlink);
  CHECK(r.lost == 1);
  CHECK(s.lost_total == 1);
  CHECK(q.backlog(q.link_id(1, 0)) == omega);
}

namespace {

struct SmallCase {
  Topology topo;
  RoutingTree tree;
};

SmallCase small_case(int kind) {
  if (kind == 0) {
    Topology t({{0, 0}, {0, 150}}, 100.0, 200.0);
    return {t, deflect_route(t, {})};
  }
  if (kind == 1) {
    Topology t({{0, 0}, {0, 150}, {0, 290}}, 100.0, 200.0);  // chain
    return {t, deflect_route(t, {})};
  }
  Topology t({{0, 0}, {150, 0}, {0, 150}}, 100.0, 200.0);  // star
  return {t, deflect_route(t, {})};
}

// Runs the fluid queues and the packet oracle side by side; returns the
// largest latency gap in seconds. Counts are compared exactly.
double compare_with_packets(std::uint64_t seed, double offset) {
  std::mt19937_64 rng(seed);
  const SmallCase c = small_case(int(seed % 3));
  const std::size_t n = c.tree.size();
  std::uniform_int_distribution<std::int64_t> buf(5, 60), arr(0, 50), cap(0, 40);
  std::uniform_int_distribution<int> frac(0, 3);
  const double fracs[4] = {0.0, 0.25, 0.5, 0.9};
  const std::int64_t omega = buf(rng);
  QueueNetwork fluid(c.topo, c.tree, {kSlot, kBits, omega});
  oracle::PacketSim packets(c.topo, c.tree, {kSlot, kBits, omega, offset});
  double gap = 0.0;
  for (std::size_t slot = 0; slot < 20; ++slot) {
    ArrivalSample a = zero_arrivals(n);
    for (NodeIndex i = 1; i < n; ++i) {
      a.uplink[i] = arr(rng);
      a.downlink[i] = arr(rng);
    }
    std::vector<double> rate(fluid.links().size());
    std::map<std::pair<NodeIndex, NodeIndex>, double> by_pair;
    for (std::size_t l = 0; l < rate.size(); ++l) {
      const std::int64_t k = cap(rng);
      rate[l] = k == 0 && frac(rng) == 0 ? 0.0 : rate_for(k, fracs[frac(rng)]);
      by_pair[{fluid.links()[l].from, fluid.links()[l].to}] = rate[l];
    }
    const QueueSlotResult f = fluid.advance(slot, rate, a);
    const auto p = packets.step(slot, by_pair, a.uplink, a.downlink);
    REQUIRE(f.lost == p.lost_total);
    for (std::size_t l = 0; l < rate.size(); ++l) {
      REQUIRE(f.lost_per_link[l] ==
              p.lost.at({fluid.links()[l].from, fluid.links()[l].to}));
    }
    REQUIRE(f.delivered_up == p.delivered_up);
    REQUIRE(f.delivered_down == p.delivered_down);
    REQUIRE(fluid.buffered_total() == packets.buffered());
    if (f.delivered_up > 0) {
      gap = std::max(gap, std::abs(f.latency_sum_up / double(f.delivered_up) -
                                   p.latency_sum_up / double(p.delivered_up)));
    }
    if (f.delivered_down > 0) {
      gap = std::max(gap, std::abs(f.latency_sum_down / double(f.delivered_down) -
                                   p.latency_sum_down / double(p.delivered_down)));
    }
  }
  return gap;
}

}  // namespace

TEST_CASE("fluid queues equal the packet-level simulator") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    CHECK(compare_with_packets(seed, 0.0) <= 1e-9);
  }
}

TEST_CASE("arrival offsets bound the gap to the packet-level simulator") {
  // each delivered packet waits on at most two hops
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CHECK(compare_with_packets(seed, 0.02) <= 2 * 0.02 + 1e-9);
  }
}

TEST_CASE("conservation, budgets and latency floor under random allocations") {
  const Topology t = build_hexagonal(150.0, 1, 100.0, 200.0);
  const CostParams cp{};
  const RoutingTree tree = deflect_route(t, cp);
  NetworkConfig cfg;
  cfg.queue.buffer_packets = 3000;
  cfg.noise_w = calibrate_noise(t, tree, cfg, 500.0, 1000.0, 1.5);
  cfg.interference_mean_w = 0.2 * cfg.noise_w;
  cfg.interference_std_w = 0.2 * cfg.noise_w;
  NetworkSimulator sim(t, tree, cfg, 3);
  const TrafficGenerator traffic(7, {500.0, 50.0, 0.8}, {1000.0, 100.0, 0.8}, 60, 5);
  std::mt19937_64 rng(8);
  std::vector<std::int64_t> injected(7, 0), delivered(7, 0), lost(7, 0);
  std::int64_t total_lost = 0;
  for (std::size_t s = 0; s < 60; ++s) {
    if (s == 30) {
      const RoutingTree after = recompute_on_failure(sim.topology(), Link(0, 1), cp);
      const auto moved = sim.apply_failure(Link(0, 1), after);
      total_lost += moved;
      // buffered traffic that could not be moved counts against its origin
      CHECK(moved >= 0);
    }
    const Allocation alloc = random_allocation(rng, sim.layout());
    const SlotOutcome o = sim.step(alloc, traffic.arrivals(s));
    CHECK(o.budget_violations == 0);
    CHECK(o.min_latency_slack >= -1e-15);
    for (NodeIndex i = 0; i < 7; ++i) {
      CHECK(o.u_power[i] <= 1.0 + 1e-12);
      CHECK(o.u_subarray[i] <= 1.0);
      injected[i] += o.injected_by_origin[i];
      delivered[i] += o.delivered_by_origin[i];
      lost[i] += o.lost_by_origin[i];
    }
    total_lost += o.lost;
  }
  const auto buffered = sim.queues().buffered_by_origin();
  std::int64_t all_in = 0, all_out = 0;
  for (NodeIndex i = 0; i < 7; ++i) {
    all_in += injected[i];
    all_out += delivered[i] + buffered[i] + lost[i];
    CHECK(injected[i] >= delivered[i] + buffered[i] + lost[i]);
  }
  // the difference is exactly what the failure move dropped
  CHECK(all_in - all_out == total_lost - std::accumulate(lost.begin(), lost.end(), std::int64_t{0}));
  CHECK(all_in > 0);
}

TEST_CASE("per-slot conservation without failures") {
  const Topology t = build_hexagonal(150.0, 1, 100.0, 200.0);
  const RoutingTree tree = deflect_route(t, {});
  NetworkConfig cfg;
  cfg.queue.buffer_packets = 2000;
  cfg.noise_w = calibrate_noise(t, tree, cfg, 400.0, 800.0, 1.0);
  NetworkSimulator sim(t, tree, cfg, 9);
  const TrafficGenerator traffic(7, {400.0, 80.0, 0.8}, {800.0, 160.0, 0.8}, 40, 2);
  std::mt19937_64 rng(10);
  auto before = sim.queues().buffered_by_origin();
  for (std::size_t s = 0; s < 40; ++s) {
    const SlotOutcome o = sim.step(random_allocation(rng, sim.layout()), traffic.arrivals(s));
    const auto after = sim.queues().buffered_by_origin();
    for (NodeIndex i = 0; i < 7; ++i) {
      CHECK(before[i] + o.injected_by_origin[i] ==
            after[i] + o.delivered_by_origin[i] + o.lost_by_origin[i]);
    }
    before = after;
  }
}

TEST_CASE("noise calibration hits the requested margin") {
  const Topology t = build_hexagonal(150.0, 1, 100.0, 200.0);
  const RoutingTree tree = deflect_route(t, {});
  NetworkConfig cfg;
  const double mu_up = 2e4, mu_dn = 5e4;
  cfg.noise_w = calibrate_noise(t, tree, cfg, mu_up, mu_dn, 1.2);
  const NetworkSimulator sim(t, tree, cfg, 0);
  const auto rates = sim.rates(uniform_allocation(sim.layout()), nullptr);
  double worst = 1e300;
  for (std::size_t l = 0; l < rates.size(); ++l) {
    const auto& dl = sim.queues().links()[l];
    const NodeIndex child = dl.direction == Direction::kUplink ? dl.from : dl.to;
    const double mu = dl.direction == Direction::kUplink ? mu_up : mu_dn;
    const double demand = mu * double(tree.subtree_size(child));
    worst = std::min(worst, rates[l].total_bps * kSlot / kBits / demand);
  }
  CHECK(worst == doctest::Approx(1.2).epsilon(1e-6));
  CHECK_THROWS_AS(calibrate_noise(t, tree, cfg, mu_up, mu_dn, 0.0), ConfigError);
}

TEST_CASE("observation shape and failure checks") {
  const Topology t = build_hexagonal(150.0, 1, 100.0, 200.0);
  const RoutingTree tree = deflect_route(t, {});
  NetworkSimulator sim(t, tree, NetworkConfig{}, 1);
  const auto obs = sim.observe();
  REQUIRE(obs.size() == 7);
  CHECK(obs[0].links.size() == 6);
  CHECK(obs[2].links.size() == 1);
  CHECK(obs[2].links[0].uplink_sinr.size() == 5);
  CHECK(obs[2].links[0].downlink_sinr[0] > 0.0);
  CHECK(obs[2].links[0].own_occupancy == 0.0);
  CHECK_THROWS_AS(sim.apply_failure(Link(0, 1), tree), RoutingError);
  CHECK_THROWS_AS(sim.step(Allocation(3), zero_arrivals(7)), UsageError);
}
