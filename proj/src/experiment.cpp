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

#include "thzmesh/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <string>

#include "thzmesh/errors.hpp"
#include "thzmesh/kernels.hpp"

namespace thzmesh {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.contains(key)) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), stream,
                    0x5eedu};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

}  // namespace

Topology TopologySpec::build() const {
  if (kind == "hexagonal") return build_hexagonal(spacing, rings, d_min, d_max);
  if (kind == "points") return Topology(points, d_min, d_max);
  throw ConfigError("unknown topology kind '" + kind + "'");
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  try {
    check_keys(j,
               {"topology", "channel", "traffic", "routing", "network",
                "reward", "agent", "unsafe", "failures", "seed", "slots"},
               "config");
    if (j.contains("topology")) {
      const json& t = j.at("topology");
      check_keys(t, {"kind", "spacing", "rings", "points", "d_min", "d_max"},
                 "topology");
      read(t, "kind", c.topology.kind);
      read(t, "spacing", c.topology.spacing);
      read(t, "rings", c.topology.rings);
      read(t, "d_min", c.topology.d_min);
      read(t, "d_max", c.topology.d_max);
      if (t.contains("points")) {
        for (const json& p : t.at("points")) {
          if (!p.is_array() || p.size() != 2) {
            throw ConfigError("topology points must be [x, y] pairs");
          }
          c.topology.points.push_back({p[0].get<double>(), p[1].get<double>()});
        }
      }
    }
    if (j.contains("channel")) {
      const json& ch = j.at("channel");
      check_keys(ch,
                 {"g_abs", "noise_w", "calibration_margin",
                  "interference_to_noise", "interference_std_to_noise"},
                 "channel");
      read(ch, "g_abs", c.channel.g_abs);
      if (ch.contains("noise_w") && !ch.at("noise_w").is_null()) {
        c.channel.noise_w = ch.at("noise_w").get<double>();
      }
      read(ch, "calibration_margin", c.channel.calibration_margin);
      read(ch, "interference_to_noise", c.channel.interference_to_noise);
      read(ch, "interference_std_to_noise",
           c.channel.interference_std_to_noise);
    }
    if (j.contains("traffic")) {
      const json& t = j.at("traffic");
      check_keys(t, {"mu_up", "mu_dn", "hurst", "sigma_fraction"}, "traffic");
      double mu_up = c.uplink.mu;
      double mu_dn = c.downlink.mu;
      double hurst = c.uplink.hurst;
      double frac = 0.1;
      read(t, "mu_up", mu_up);
      read(t, "mu_dn", mu_dn);
      read(t, "hurst", hurst);
      read(t, "sigma_fraction", frac);
      c.uplink = {mu_up, frac * mu_up, hurst};
      c.downlink = {mu_dn, frac * mu_dn, hurst};
    }
    c.routing.d_min = c.topology.d_min;
    if (j.contains("routing")) {
      const json& r = j.at("routing");
      check_keys(r, {"iota", "gamma0_db", "iota_sweep"}, "routing");
      read(r, "iota", c.routing.iota);
      read(r, "gamma0_db", c.gamma0_db);
      read(r, "iota_sweep", c.iota_sweep);
    }
    if (j.contains("network")) {
      const json& n = j.at("network");
      check_keys(n,
                 {"slot_s", "packet_bits", "buffer_packets", "p_max_w",
                  "s_max", "m_x", "m_y", "band_usage_threshold"},
                 "network");
      read(n, "slot_s", c.network.queue.slot_s);
      read(n, "packet_bits", c.network.queue.packet_bits);
      read(n, "buffer_packets", c.network.queue.buffer_packets);
      read(n, "p_max_w", c.network.p_max_w);
      read(n, "s_max", c.network.array.s_max);
      read(n, "m_x", c.network.array.m_x);
      read(n, "m_y", c.network.array.m_y);
      read(n, "band_usage_threshold", c.network.band_usage_threshold);
    }
    if (j.contains("reward")) {
      const json& w = j.at("reward");
      check_keys(w, {"chi1", "chi2", "chi3", "chi4"}, "reward");
      read(w, "chi1", c.network.weights.chi1);
      read(w, "chi2", c.network.weights.chi2);
      read(w, "chi3", c.network.weights.chi3);
      read(w, "chi4", c.network.weights.chi4);
    }
    if (j.contains("agent")) {
      const json& a = j.at("agent");
      check_keys(a,
                 {"hidden", "critic_feature", "kappa", "actor_lr",
                  "critic_lr", "idle_bias", "noise_fraction",
                  "idle_noise_variance", "q_scale"},
                 "agent");
      read(a, "hidden", c.agent.hidden);
      read(a, "critic_feature", c.agent.critic_feature);
      read(a, "kappa", c.agent.kappa);
      read(a, "actor_lr", c.agent.actor_lr);
      read(a, "critic_lr", c.agent.critic_lr);
      read(a, "idle_bias", c.agent.idle_bias);
      read(a, "noise_fraction", c.agent.noise_fraction);
      read(a, "idle_noise_variance", c.agent.idle_noise_variance);
      read(a, "q_scale", c.agent.q_scale);
    }
    read(j, "unsafe", c.unsafe);
    read(j, "seed", c.seed);
    read(j, "slots", c.slots);
    if (j.contains("failures")) {
      for (const json& f : j.at("failures")) {
        check_keys(f, {"slot", "link"}, "failure event");
        const auto ends = f.at("link").get<std::vector<int>>();
        if (ends.size() != 2 || ends[0] < 1 || ends[1] < 1) {
          throw ConfigError("failure link must name two 1-based nodes");
        }
        c.failures.push_back(
            {f.at("slot").get<std::size_t>(),
             Link(static_cast<NodeIndex>(ends[0] - 1),
                  static_cast<NodeIndex>(ends[1] - 1))});
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " +
                      e.what());
  }
  return from_json(j);
}

json ExperimentConfig::to_json() const {
  json points = json::array();
  for (const Point& p : topology.points) points.push_back({p.x, p.y});
  json failures_j = json::array();
  for (const FailureEvent& f : failures) {
    failures_j.push_back(
        {{"slot", f.slot},
         {"link", {node_label(f.link.a), node_label(f.link.b)}}});
  }
  json j;
  j["topology"] = {{"kind", topology.kind},     {"spacing", topology.spacing},
                   {"rings", topology.rings},   {"points", points},
                   {"d_min", topology.d_min},   {"d_max", topology.d_max}};
  j["channel"] = {
      {"g_abs", channel.g_abs},
      {"noise_w", channel.noise_w ? json(*channel.noise_w) : json(nullptr)},
      {"calibration_margin", channel.calibration_margin},
      {"interference_to_noise", channel.interference_to_noise},
      {"interference_std_to_noise", channel.interference_std_to_noise}};
  j["traffic"] = {{"mu_up", uplink.mu},
                  {"mu_dn", downlink.mu},
                  {"hurst", uplink.hurst},
                  {"sigma_fraction",
                   uplink.mu > 0 ? uplink.sigma_f / uplink.mu : 0.0}};
  j["routing"] = {{"iota", routing.iota},
                  {"gamma0_db", gamma0_db},
                  {"iota_sweep", iota_sweep}};
  j["network"] = {{"slot_s", network.queue.slot_s},
                  {"packet_bits", network.queue.packet_bits},
                  {"buffer_packets", network.queue.buffer_packets},
                  {"p_max_w", network.p_max_w},
                  {"s_max", network.array.s_max},
                  {"m_x", network.array.m_x},
                  {"m_y", network.array.m_y},
                  {"band_usage_threshold", network.band_usage_threshold}};
  j["reward"] = {{"chi1", network.weights.chi1},
                 {"chi2", network.weights.chi2},
                 {"chi3", network.weights.chi3},
                 {"chi4", network.weights.chi4}};
  j["agent"] = {{"hidden", agent.hidden},
                {"critic_feature", agent.critic_feature},
                {"kappa", agent.kappa},
                {"actor_lr", agent.actor_lr},
                {"critic_lr", agent.critic_lr},
                {"idle_bias", agent.idle_bias},
                {"noise_fraction", agent.noise_fraction},
                {"idle_noise_variance", agent.idle_noise_variance},
                {"q_scale", agent.q_scale}};
  j["unsafe"] = unsafe;
  j["failures"] = failures_j;
  j["seed"] = seed;
  j["slots"] = slots;
  return j;
}

void ExperimentConfig::validate() const {
  const Topology topo = topology.build();
  if (topo.size() < 2) throw ConfigError("a mesh needs at least two nodes");
  uplink.validate();
  downlink.validate();
  if (!(routing.iota >= 0.0)) throw ConfigError("iota must be nonnegative");
  for (double i : iota_sweep) {
    if (!(i >= 0.0)) throw ConfigError("iota sweep values must be nonnegative");
  }
  if (!(channel.calibration_margin > 0.0) || !(channel.g_abs >= 0.0) ||
      !(channel.interference_to_noise >= 0.0) ||
      !(channel.interference_std_to_noise >= 0.0)) {
    throw ConfigError("channel settings must be nonnegative");
  }
  if (channel.noise_w && !(*channel.noise_w > 0.0)) {
    throw ConfigError("noise power must be positive");
  }
  if (unsafe < 0 || unsafe > 3) throw ConfigError("unsafe must be 0..3");
  network.array.validate();
  agent.validate();
  const auto avail = topo.available_links();
  for (const FailureEvent& f : failures) {
    if (f.link.b >= topo.size()) {
      throw ConfigError("failure names a node outside the topology");
    }
    if (std::find(avail.begin(), avail.end(), f.link) == avail.end()) {
      throw ConfigError("failure link " + std::to_string(node_label(f.link.a)) +
                        "-" + std::to_string(node_label(f.link.b)) +
                        " is not an available link");
    }
    if (f.slot == 0 || f.slot >= slots) {
      throw ConfigError("failure slot " + std::to_string(f.slot) +
                        " is outside 1.." + std::to_string(slots) + "-1");
    }
  }
}

NetworkConfig resolve_network(const ExperimentConfig& config,
                              const Topology& topology,
                              const RoutingTree& tree) {
  NetworkConfig n = config.network;
  n.plan = SubBandPlan::standard(config.channel.g_abs);
  double floor_w = 0.0;
  if (config.channel.noise_w) {
    floor_w = *config.channel.noise_w;
  } else {
    NetworkConfig probe = n;
    probe.interference_mean_w = 0.0;
    probe.interference_std_w = 0.0;
    // Calibrate the total floor, then split it into noise and interference.
    const double total =
        calibrate_noise(topology, tree, probe, config.uplink.mu,
                        config.downlink.mu, config.channel.calibration_margin);
    floor_w = total / (1.0 + config.channel.interference_to_noise);
  }
  n.noise_w = floor_w;
  n.interference_mean_w = config.channel.interference_to_noise * floor_w;
  n.interference_std_w = config.channel.interference_std_to_noise * floor_w;
  return n;
}

RunReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  RunReport report;
  const Topology topo = config.topology.build();
  const RoutingTree tree = deflect_route(topo, config.routing);
  const NetworkConfig net = resolve_network(config, topo, tree);
  report.noise_w = net.noise_w;
  if (config.slots == 0) return report;

  NetworkSimulator sim(topo, tree, net, derive_seed(config.seed, 1));
  AgentConfig ac = config.agent;
  if (config.unsafe != 0) ac.apply(variant_from_type(config.unsafe));
  MultiAgent agent(sim.layout(), ac, derive_seed(config.seed, 2));
  const TrafficGenerator traffic(topo.size(), config.uplink, config.downlink,
                                 config.slots, derive_seed(config.seed, 3));

  std::multimap<std::size_t, Link> schedule;
  for (const FailureEvent& f : config.failures) schedule.emplace(f.slot, f.link);

  report.rows.reserve(config.slots);
  for (std::size_t t = 0; t < config.slots; ++t) {
    std::int64_t reroute_lost = 0;
    auto [first, last] = schedule.equal_range(t);
    for (auto it = first; it != last; ++it) {
      const RoutingTree next =
          recompute_on_failure(sim.topology(), it->second, config.routing);
      const std::int64_t lost = sim.apply_failure(it->second, next);
      agent.recover(sim.layout());
      reroute_lost += lost;
      report.recoveries.push_back({t, it->second, 0.0, lost, std::nullopt});
    }

    const auto obs = sim.observe();
    const Allocation applied = agent.explore(agent.act(obs));
    const SlotOutcome out = sim.step(applied, traffic.arrivals(t));
    const auto next_obs = sim.observe();
    const TrainStats st =
        agent.train_step({obs, applied, out.reward, next_obs});

    SlotRow row;
    row.slot = t;
    row.mean_u = out.mean_u;
    row.u_power_mean = out.mean_u_power;
    row.u_subarray_mean = out.mean_u_subarray;
    row.lost = out.lost + reroute_lost;
    row.up_latency_s = out.up_latency_s;
    row.down_latency_s = out.down_latency_s;
    row.reward = out.reward;
    row.budget_violations = out.budget_violations;
    row.critic_loss = st.critic_loss;
    report.rows.push_back(row);
  }
  summarize_rows(report);
  return report;
}

void summarize_rows(RunReport& report) {
  const auto& rows = report.rows;
  report.cumulative_loss = 0;
  report.budget_violations = 0;
  std::size_t up_ok = 0;
  std::size_t down_ok = 0;
  for (const SlotRow& r : rows) {
    report.cumulative_loss += r.lost;
    report.budget_violations += r.budget_violations;
    if (r.up_latency_s <= kUplinkLatencyTarget) ++up_ok;
    if (r.down_latency_s <= kDownlinkLatencyTarget) ++down_ok;
  }
  report.convergence_slot.reset();
  if (rows.empty()) {
    report.converged_u = 0.0;
    report.up_latency_ok = 1.0;
    report.down_latency_ok = 1.0;
    return;
  }
  const double n = static_cast<double>(rows.size());
  report.up_latency_ok = static_cast<double>(up_ok) / n;
  report.down_latency_ok = static_cast<double>(down_ok) / n;

  const std::size_t w = std::min(kConvergenceWindow, rows.size());
  double tail = 0.0;
  for (std::size_t k = rows.size() - w; k < rows.size(); ++k) {
    tail += rows[k].mean_u;
  }
  report.converged_u = tail / static_cast<double>(w);
  for (const SlotRow& r : rows) {
    if (std::abs(r.mean_u - report.converged_u) <=
        kConvergenceTolerance * report.converged_u) {
      report.convergence_slot = r.slot;
      break;
    }
  }

  for (RecoveryEvent& ev : report.recoveries) {
    const std::size_t f = ev.slot;
    const std::size_t from = f > kConvergenceWindow ? f - kConvergenceWindow : 0;
    double pre = 0.0;
    for (std::size_t k = from; k < f; ++k) pre += rows[k].mean_u;
    ev.pre_failure_u = f > from ? pre / static_cast<double>(f - from) : 0.0;
    ev.recovery_slots.reset();
    for (std::size_t t = f; t + kRecoveryHold <= rows.size(); ++t) {
      bool ok = true;
      for (std::size_t k = t; k < t + kRecoveryHold && ok; ++k) {
        ok = std::abs(rows[k].mean_u - ev.pre_failure_u) <= kRecoveryTolerance &&
             rows[k].lost == 0;
      }
      if (ok) {
        ev.recovery_slots = t - f;
        break;
      }
    }
  }
}

void write_slots_csv(std::ostream& os, const RunReport& report) {
  os << "slot,mean_U,U_P_mean,U_S_mean,lost_packets,up_latency_s,"
        "down_latency_s,reward\n";
  for (const SlotRow& r : report.rows) {
    os << r.slot << ',' << fmt(r.mean_u) << ',' << fmt(r.u_power_mean) << ','
       << fmt(r.u_subarray_mean) << ',' << r.lost << ',' << fmt(r.up_latency_s)
       << ',' << fmt(r.down_latency_s) << ',' << fmt(r.reward) << '\n';
  }
}

json summary_json(const RunReport& report) {
  json rec = json::array();
  for (const RecoveryEvent& ev : report.recoveries) {
    rec.push_back({{"slot", ev.slot},
                   {"link", {node_label(ev.link.a), node_label(ev.link.b)}},
                   {"pre_failure_u", ev.pre_failure_u},
                   {"reroute_lost", ev.reroute_lost},
                   {"recovery_slots", ev.recovery_slots
                                          ? json(*ev.recovery_slots)
                                          : json(nullptr)}});
  }
  return {{"slots", report.rows.size()},
          {"noise_w", report.noise_w},
          {"cumulative_loss", report.cumulative_loss},
          {"converged_u", report.converged_u},
          {"convergence_slot", report.convergence_slot
                                   ? json(*report.convergence_slot)
                                   : json(nullptr)},
          {"up_latency_ok", report.up_latency_ok},
          {"down_latency_ok", report.down_latency_ok},
          {"budget_violations", report.budget_violations},
          {"recoveries", rec}};
}

void write_run(const std::filesystem::path& dir, const ExperimentConfig& config,
               const RunReport& report) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "slots.csv");
    write_slots_csv(os, report);
  }
  {
    std::ofstream os(dir / "summary.json");
    os << summary_json(report).dump(2) << '\n';
  }
  {
    json meta = {{"version", kVersion},
                 {"seed", config.seed},
                 {"variant", variant_name(config.unsafe == 0
                                              ? Variant::kSafe
                                              : variant_from_type(config.unsafe))},
                 {"isa", kernels::isa_name(kernels::active_isa())},
                 {"noise_w", report.noise_w},
                 {"config", config.to_json()}};
    std::ofstream os(dir / "run_meta.json");
    os << meta.dump(2) << '\n';
  }
}

std::vector<RoutingRow> routing_analysis(const ExperimentConfig& config) {
  const Topology topo = config.topology.build();
  std::vector<RoutingRow> rows;
  for (double g_db : config.gamma0_db) {
    const double gamma0 = std::pow(10.0, g_db / 10.0);
    for (double iota : config.iota_sweep) {
      const RoutingTree tree =
          deflect_route(topo, {iota, config.topology.d_min});
      rows.push_back({g_db, iota, resource_analysis(tree, topo, gamma0).mean});
    }
  }
  return rows;
}

void write_routing_csv(std::ostream& os, const std::vector<RoutingRow>& rows) {
  os << "gamma0_db,iota,mean_consumption\n";
  for (const RoutingRow& r : rows) {
    os << fmt(r.gamma0_db) << ',' << fmt(r.iota) << ','
       << fmt(r.mean_consumption) << '\n';
  }
}

json summarize_runs(const std::vector<std::filesystem::path>& dirs) {
  if (dirs.empty()) throw ConfigError("summarize needs at least one run");
  std::vector<double> loss, conv_u, conv_slot, up_ok, down_ok;
  std::size_t violations = 0;
  std::map<std::size_t, std::vector<double>> recovery;
  std::map<std::size_t, std::size_t> unrecovered;
  for (const auto& d : dirs) {
    std::ifstream in(d / "summary.json");
    if (!in) throw ConfigError("no summary.json in " + d.string());
    json s;
    try {
      in >> s;
      loss.push_back(s.at("cumulative_loss").get<double>());
      conv_u.push_back(s.at("converged_u").get<double>());
      if (!s.at("convergence_slot").is_null()) {
        conv_slot.push_back(s.at("convergence_slot").get<double>());
      }
      up_ok.push_back(s.at("up_latency_ok").get<double>());
      down_ok.push_back(s.at("down_latency_ok").get<double>());
      violations += s.at("budget_violations").get<std::size_t>();
      const json& rec = s.at("recoveries");
      for (std::size_t k = 0; k < rec.size(); ++k) {
        if (rec[k].at("recovery_slots").is_null()) {
          ++unrecovered[k];
        } else {
          recovery[k].push_back(rec[k].at("recovery_slots").get<double>());
        }
      }
    } catch (const json::exception& e) {
      throw ConfigError("malformed summary in " + d.string() + ": " + e.what());
    }
  }
  json rec = json::array();
  std::size_t events = 0;
  for (const auto& [k, v] : recovery) events = std::max(events, k + 1);
  for (const auto& [k, v] : unrecovered) events = std::max(events, k + 1);
  for (std::size_t k = 0; k < events; ++k) {
    // Runs that never recovered count as an infinite recovery time.
    std::vector<double> v = recovery[k];
    for (std::size_t u = 0; u < unrecovered[k]; ++u) {
      v.push_back(std::numeric_limits<double>::infinity());
    }
    const double m = median(v);
    rec.push_back({{"event", k},
                   {"median_recovery_slots",
                    std::isfinite(m) ? json(m) : json(nullptr)},
                   {"unrecovered_runs", unrecovered[k]}});
  }
  return {{"runs", dirs.size()},
          {"median_cumulative_loss", median(loss)},
          {"median_converged_u", median(conv_u)},
          {"median_convergence_slot",
           conv_slot.empty() ? json(nullptr) : json(median(conv_slot))},
          {"median_up_latency_ok", median(up_ok)},
          {"median_down_latency_ok", median(down_ok)},
          {"budget_violations", violations},
          {"recoveries", rec}};
}

}  // namespace thzmesh
