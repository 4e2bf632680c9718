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
#include <random>
#include <sstream>

#include "support/gradcheck.hpp"
#include "thzmesh/agent.hpp"
#include "thzmesh/errors.hpp"
#include "thzmesh/routing.hpp"

using namespace thzmesh;

namespace {

struct Hex {
  Topology topo = build_hexagonal(150.0, 1, 100.0, 200.0);
  RoutingTree tree = deflect_route(topo, {});
  NetworkLayout layout{tree, 5};
};

std::vector<NodeObservation> random_obs(nn::Rng& rng, const NetworkLayout& layout) {
  std::uniform_real_distribution<double> snr(0.0, 1e4), occ(0.0, 1.0);
  std::vector<NodeObservation> out(layout.size());
  for (NodeIndex i = 0; i < layout.size(); ++i) {
    for (std::size_t l = 0; l < layout.links(i).count(); ++l) {
      LinkObservation lo;
      for (std::size_t k = 0; k < layout.bands_per_direction(); ++k) {
        lo.uplink_sinr.push_back(snr(rng));
        lo.downlink_sinr.push_back(snr(rng));
      }
      lo.own_occupancy = occ(rng);
      lo.neighbor_occupancy = occ(rng);
      out[i].links.push_back(lo);
    }
  }
  return out;
}

double utilized(const std::vector<double>& shares) {
  double s = 0;
  for (double x : shares) s += x;
  return s;
}

bool exact_budget(const NodeAllocation& a) { return budgets_hold(a, 1e-12); }

}  // namespace

TEST_CASE("variants map to the two safety switches") {
  AgentConfig c;
  c.apply(variant_from_type(0));
  CHECK(c.safe_initialization);
  CHECK(c.safe_exploration);
  c.apply(variant_from_type(1));
  CHECK(c.safe_initialization);
  CHECK_FALSE(c.safe_exploration);
  c.apply(variant_from_type(2));
  CHECK_FALSE(c.safe_initialization);
  CHECK(c.safe_exploration);
  c.apply(variant_from_type(3));
  CHECK_FALSE(c.safe_initialization);
  CHECK_FALSE(c.safe_exploration);
  CHECK_THROWS_AS(variant_from_type(4), ConfigError);
  AgentConfig bad;
  bad.kappa = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("feature and action layouts") {
  LinkObservation lo{{0.0, 9.0}, {99.0, -1.0}, 0.25, 0.5};
  const auto f = observation_features({{lo}});
  REQUIRE(f.size() == observation_size(1, 2));
  CHECK(f[0] == 0.0);
  CHECK(f[1] == doctest::Approx(1.0));
  CHECK(f[2] == doctest::Approx(2.0));
  CHECK(f[3] == 0.0);
  CHECK(f[4] == 0.25);
  CHECK(f[5] == 0.5);

  NodeAllocation a{{0.1, 0.2}, 0.7, {0.3, 0.4}, 0.3};
  CHECK(action_vector(a) == std::vector<double>{0.1, 0.2, 0.7, 0.3, 0.4, 0.3});
  CHECK(action_size(1, 2) == 6);

  Hex h;
  CHECK(node_type(h.tree, 0) == NodeType::kBranch);
  CHECK(node_type(h.tree, 3) == NodeType::kLeaf);
}

TEST_CASE("safe initialization leaves almost nothing idle") {
  Hex h;
  MultiAgent agent(h.layout, AgentConfig{}, 7);
  nn::Rng rng(1);
  const double expect_idle = std::exp(-10.0) / (1.0 + std::exp(-10.0));
  CHECK(expect_idle == doctest::Approx(4.54e-5).epsilon(1e-3));
  for (int t = 0; t < 5; ++t) {
    const Allocation a = agent.act(random_obs(rng, h.layout));
    for (NodeIndex i = 0; i < 7; ++i) {
      CHECK(a[i].idle_power == doctest::Approx(expect_idle).epsilon(1e-9));
      CHECK(a[i].idle_subarray == doctest::Approx(expect_idle).epsilon(1e-9));
      CHECK(utilized(a[i].power) > 0.999);
      CHECK(utilized(a[i].subarray) > 0.999);
      CHECK(utilized(a[i].power) > 0.9999);
      CHECK(exact_budget(a[i]));
    }
    // a leaf allocates only over its parent link
    CHECK(a[3].power.size() == 5);
    CHECK(a[3].subarray.size() == 2);
    CHECK(a[0].power.size() == 30);
  }
}

TEST_CASE("without safe initialization the idle share is not pinned") {
  Hex h;
  AgentConfig c;
  c.apply(Variant::kTypeII);
  MultiAgent agent(h.layout, c, 7);
  nn::Rng rng(2);
  const Allocation a = agent.act(random_obs(rng, h.layout));
  double max_idle = 0;
  for (const auto& na : a) max_idle = std::max(max_idle, na.idle_power);
  CHECK(max_idle > 1e-3);
}

TEST_CASE("actor outputs stay on the budget simplex for random parameters") {
  nn::Rng rng(3);
  AgentConfig c;
  c.hidden = 16;
  for (int t = 0; t < 50; ++t) {
    const std::size_t links = 1 + std::size_t(t % 6);
    ActorNet actor(links, 5, c, rng);
    for (std::size_t p = 0; p < ActorNet::kNumParts; ++p) {
      gradcheck::jitter(actor.part(p), rng, 2.0);
    }
    const auto x = gradcheck::uniform_vec(rng, actor.input_size(), 0.0, 5.0);
    const NodeAllocation a = actor.act(x);
    CHECK(exact_budget(a));
    CHECK(a.power.size() == links * 5);
    CHECK(a.subarray.size() == 2 * links);
  }
  ActorNet actor(2, 5, c, rng);
  CHECK_THROWS_AS(actor.act(std::vector<double>(3, 0.0)), UsageError);
}

TEST_CASE("safe exploration keeps budgets or withdraws") {
  nn::Rng rng(4);
  const NodeAllocation a{{0.2, 0.3, 0.45}, 0.05, {0.5, 0.5}, 0.0};
  const NodeAllocation same = safe_explore(a, rng, 0.0);
  CHECK(same.power == a.power);
  CHECK(same.idle_subarray == a.idle_subarray);

  int changed = 0;
  for (int t = 0; t < 200; ++t) {
    const NodeAllocation b = safe_explore(a, rng, 0.05);
    CHECK(budgets_hold(b, 1e-12));
    changed += b.power != a.power ? 1 : 0;
  }
  CHECK(changed > 0);

  // a zero share under large noise goes negative for some draws
  const NodeAllocation z{{0.0, 0.6, 0.4}, 0.0, {0.0, 1.0}, 0.0};
  int withdrawn = 0;
  for (int t = 0; t < 50; ++t) {
    const NodeAllocation b = safe_explore(z, rng, 2.0);
    const bool identical = b.power == z.power && b.subarray == z.subarray &&
                           b.idle_power == z.idle_power &&
                           b.idle_subarray == z.idle_subarray;
    withdrawn += identical ? 1 : 0;
    if (!identical) CHECK(budgets_hold(b, 1e-12));
  }
  CHECK(withdrawn > 0);
}

TEST_CASE("unsafe exploration renormalizes") {
  nn::Rng rng(5);
  const NodeAllocation a{{0.0, 0.6, 0.4}, 0.0, {0.0, 1.0}, 0.0};
  bool went_idle = false;
  for (int t = 0; t < 200; ++t) {
    const NodeAllocation b = unsafe_explore(a, rng, 0.5);
    CHECK(budgets_hold(b, 1e-12));
    went_idle = went_idle || b.idle_power > 0.0;
  }
  CHECK(went_idle);
}

TEST_CASE("zero-weight critic returns its output bias") {
  Hex h;
  AgentConfig c;
  c.q_scale = 1.0;
  MultiAgent agent(h.layout, c, 1);
  auto& cr = agent.critic();
  for (std::size_t i = 0; i < cr.nodes(); ++i) {
    std::fill(cr.encoder(i).params().begin(), cr.encoder(i).params().end(), 0.0);
  }
  std::fill(cr.head().params().begin(), cr.head().params().end(), 0.0);
  cr.head().bias(1)[0] = -3.5;
  nn::Rng rng(6);
  const auto obs = random_obs(rng, h.layout);
  CHECK(agent.q(obs, agent.act(obs)) == -3.5);
}

TEST_CASE("critic depends on which node sees which input") {
  Hex h;
  MultiAgent agent(h.layout, AgentConfig{}, 2);
  nn::Rng rng(7);
  std::vector<std::vector<double>> in;
  for (NodeIndex i = 0; i < 7; ++i) {
    in.push_back(gradcheck::uniform_vec(rng, agent.critic().node_input(i), 0.0, 1.0));
  }
  const double q0 = agent.critic().q(in);
  std::swap(in[1], in[2]);  // same shapes, different owners
  CHECK(agent.critic().q(in) != q0);
}

TEST_CASE("TD target and critic loss") {
  CHECK(td_target(-80.0, 0.5, -150.0) == -155.0);
  CHECK(critic_loss(-155.0, -160.0) == 25.0);
  CHECK(td_target(-80.0, 0.0, -150.0) == -80.0);
}

TEST_CASE("bias-only critic converges to the discounted fixed point") {
  Hex h;
  AgentConfig c;
  c.q_scale = 1.0;
  c.critic_lr = 0.05;
  c.kappa = 0.5;
  MultiAgent agent(h.layout, c, 3);
  auto& cr = agent.critic();
  for (std::size_t i = 0; i < cr.nodes(); ++i) {
    std::fill(cr.encoder(i).params().begin(), cr.encoder(i).params().end(), 0.0);
  }
  std::fill(cr.head().params().begin(), cr.head().params().end(), 0.0);
  nn::Rng rng(8);
  Transition t;
  t.state = random_obs(rng, h.layout);
  t.next_state = random_obs(rng, h.layout);
  t.action = agent.act(t.state);
  t.reward = -8.0;
  for (int k = 0; k < 3000; ++k) agent.train_step(t);
  CHECK(agent.q(t.state, t.action) == doctest::Approx(-8.0 / (1.0 - 0.5)).epsilon(0.01));
}

TEST_CASE("actor step ascends a frozen critic") {
  nn::Rng rng(9);
  for (int inst = 0; inst < 20; ++inst) {
    Hex h;
    AgentConfig c;
    c.hidden = 16;
    c.actor_lr = 1e-6;
    if (inst % 2 == 1) c.apply(Variant::kTypeIII);
    MultiAgent agent(h.layout, c, 100 + std::uint64_t(inst));
    const auto s = random_obs(rng, h.layout);
    const auto critic_before = agent.critic().head().export_tensors("h.");
    const double q0 = agent.q(s, agent.act(s));
    const double reported = agent.update_actors(s);
    const double q1 = agent.q(s, agent.act(s));
    CHECK(reported == doctest::Approx(q0).epsilon(1e-12));
    CHECK(q1 > q0);
    const auto critic_after = agent.critic().head().export_tensors("h.");
    CHECK(critic_before[0].values == critic_after[0].values);
  }
}

TEST_CASE("training is deterministic per seed") {
  Hex h;
  AgentConfig c;
  c.hidden = 16;
  auto run = [&](std::uint64_t seed) {
    MultiAgent agent(h.layout, c, seed);
    nn::Rng rng(10);
    auto s = random_obs(rng, h.layout);
    for (int k = 0; k < 5; ++k) {
      Transition t;
      t.state = s;
      t.action = agent.explore(agent.act(s));
      t.reward = -50.0 - k;
      t.next_state = random_obs(rng, h.layout);
      agent.train_step(t);
      s = t.next_state;
    }
    std::ostringstream os;
    const auto tensors = agent.export_tensors();
    nn::save_tensors(os, tensors);
    return os.str();
  };
  const std::string a = run(5);
  CHECK(a == run(5));
  CHECK(a != run(6));
}

TEST_CASE("non-finite values abort training") {
  Hex h;
  MultiAgent agent(h.layout, AgentConfig{}, 1);
  nn::Rng rng(11);
  Transition t;
  t.state = random_obs(rng, h.layout);
  t.next_state = t.state;
  t.action = agent.act(t.state);
  t.reward = std::nan("");
  CHECK_THROWS_AS(agent.train_step(t), TrainingAbort);
}

TEST_CASE("recovery keeps, averages or rebuilds units by node type") {
  Hex h;
  MultiAgent agent(h.layout, AgentConfig{}, 12);
  nn::Rng rng(12);
  // move the uniform units away from their identical safe start
  for (int k = 0; k < 3; ++k) {
    Transition t;
    t.state = random_obs(rng, h.layout);
    t.action = agent.explore(agent.act(t.state));
    t.reward = -60.0;
    t.next_state = random_obs(rng, h.layout);
    agent.train_step(t);
  }
  std::vector<std::vector<double>> before;
  for (NodeIndex i = 0; i < 7; ++i) before.push_back(agent.actor(i).uniform_params());
  const auto head_before = agent.critic().head().export_tensors("h.");
  const auto enc_before = agent.critic().encoder(3).export_tensors("e.");
  const auto obs_before = random_obs(rng, h.layout);

  Topology cut = h.topo;
  const RoutingTree after = recompute_on_failure(cut, Link(0, 1), {});
  cut.fail_link(Link(0, 1));
  const NetworkLayout new_layout(after, 5);
  REQUIRE(node_type(after, 2) == NodeType::kBranch);
  REQUIRE(node_type(h.tree, 2) == NodeType::kLeaf);
  agent.recover(new_layout);

  CHECK(agent.actor(0).uniform_params() == before[0]);  // stays branch
  CHECK(agent.actor(4).uniform_params() == before[4]);  // stays leaf
  CHECK(agent.actor(1).uniform_params() == before[1]);
  // the only branch before the failure was the donor
  CHECK(agent.actor(2).uniform_params() == before[0]);
  CHECK(agent.actor(2).links() == 2);
  CHECK(agent.actor(0).links() == 5);
  CHECK(agent.critic().head().export_tensors("h.")[0].values == head_before[0].values);
  CHECK(agent.critic().encoder(3).export_tensors("e.")[0].values != enc_before[0].values);

  const NetworkSimulator sim(cut, after, NetworkConfig{}, 0);
  const auto obs = sim.observe();
  const Allocation a = agent.act(obs);
  for (const auto& na : a) CHECK(exact_budget(na));
  for (int k = 0; k < 20; ++k) {
    for (const auto& na : agent.explore(a)) CHECK(budgets_hold(na, 1e-12));
  }
  CHECK(std::isfinite(agent.q(obs, a)));
}

TEST_CASE("type changes take the element-wise mean of the former type") {
  // branches {0, 1} and leaves {2, 3} before; 1 turns leaf and 2 turns branch
  const RoutingTree old_tree({std::nullopt, 0, 1, 0});
  const RoutingTree new_tree({std::nullopt, 0, 0, 2});
  AgentConfig c;
  c.hidden = 8;
  c.apply(Variant::kTypeIII);  // distinct random uniform units per node
  MultiAgent agent(NetworkLayout(old_tree, 5), c, 3);
  std::vector<std::vector<double>> before;
  for (NodeIndex i = 0; i < 4; ++i) before.push_back(agent.actor(i).uniform_params());
  agent.recover(NetworkLayout(new_tree, 5));
  const auto u1 = agent.actor(1).uniform_params();
  const auto u2 = agent.actor(2).uniform_params();
  for (std::size_t k = 0; k < u1.size(); ++k) {
    CHECK(u1[k] == doctest::Approx((before[2][k] + before[3][k]) / 2.0).epsilon(1e-15));
    CHECK(u2[k] == doctest::Approx((before[0][k] + before[1][k]) / 2.0).epsilon(1e-15));
  }
  CHECK(agent.actor(0).uniform_params() == before[0]);
  CHECK(agent.actor(3).uniform_params() == before[3]);
}

TEST_CASE("gradient checks on the instantiated actors and critics") {
  Hex h;
  AgentConfig c;
  nn::Rng rng(13);
  MultiAgent agent(h.layout, c, 14);
  for (NodeIndex i : {NodeIndex{0}, NodeIndex{1}}) {
    ActorNet& a = agent.actor(i);
    CHECK(gradcheck::check_actor(a, rng).worst < 1e-4);
    for (std::size_t p = 0; p < ActorNet::kNumParts; ++p) gradcheck::jitter(a.part(p), rng, 0.3);
    CHECK(gradcheck::check_actor(a, rng).worst < 1e-4);
  }
  CHECK(gradcheck::check_critic(agent.critic(), rng).worst < 1e-4);
}
