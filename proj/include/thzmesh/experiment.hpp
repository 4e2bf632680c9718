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

#ifndef THZMESH_EXPERIMENT_HPP_
#define THZMESH_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "thzmesh/agent.hpp"
#include "thzmesh/netsim.hpp"
#include "thzmesh/routing.hpp"
#include "thzmesh/topology.hpp"
#include "thzmesh/traffic.hpp"

namespace thzmesh {

struct TopologySpec {
  // "hexagonal" uses spacing and rings; "points" uses the listed positions.
  std::string kind = "hexagonal";
  double spacing = 150.0;
  int rings = 1;
  std::vector<Point> points;
  double d_min = 100.0;
  double d_max = 200.0;

  Topology build() const;
};

struct ChannelSpec {
  double g_abs = 0.005;
  // When set, used as-is; otherwise derived by calibration.
  std::optional<double> noise_w;
  double calibration_margin = 3.0;
  // Interference statistics relative to the noise floor.
  double interference_to_noise = 0.0;
  double interference_std_to_noise = 0.0;
};

struct FailureEvent {
  std::size_t slot = 0;
  Link link;
};

struct ExperimentConfig {
  TopologySpec topology;
  ChannelSpec channel;
  TrafficModel uplink{20000.0, 2000.0, 0.8};
  TrafficModel downlink{50000.0, 5000.0, 0.8};
  CostParams routing;
  std::vector<double> gamma0_db{-10.0, -5.0, 0.0, 5.0, 10.0};
  std::vector<double> iota_sweep{0.0, 0.5, 1.0, 1.5, 2.0};
  NetworkConfig network;
  AgentConfig agent;
  int unsafe = 0;
  std::vector<FailureEvent> failures;
  std::uint64_t seed = 1;
  std::size_t slots = 200;

  // Throws ConfigError on unknown keys, bad values or dangling references.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void validate() const;
};

struct SlotRow {
  std::size_t slot = 0;
  double mean_u = 0.0;
  double u_power_mean = 0.0;
  double u_subarray_mean = 0.0;
  std::int64_t lost = 0;
  double up_latency_s = 0.0;
  double down_latency_s = 0.0;
  double reward = 0.0;
  std::size_t budget_violations = 0;
  double critic_loss = 0.0;
};

struct RecoveryEvent {
  std::size_t slot = 0;
  Link link;
  double pre_failure_u = 0.0;
  std::int64_t reroute_lost = 0;
  std::optional<std::size_t> recovery_slots;
};

struct RunReport {
  std::vector<SlotRow> rows;
  double noise_w = 0.0;
  double converged_u = 0.0;
  std::optional<std::size_t> convergence_slot;
  std::int64_t cumulative_loss = 0;
  std::size_t budget_violations = 0;
  // Fractions of slots meeting the latency targets below.
  double up_latency_ok = 1.0;
  double down_latency_ok = 1.0;
  std::vector<RecoveryEvent> recoveries;
};

inline constexpr double kUplinkLatencyTarget = 5e-3;
inline constexpr double kDownlinkLatencyTarget = 50e-3;
inline constexpr std::size_t kConvergenceWindow = 20;
inline constexpr double kConvergenceTolerance = 0.01;
inline constexpr double kRecoveryTolerance = 0.05;
inline constexpr std::size_t kRecoveryHold = 5;

// Fully resolved network parameters for a config, calibration included.
NetworkConfig resolve_network(const ExperimentConfig& config,
                              const Topology& topology,
                              const RoutingTree& tree);

// Throws RoutingError on disconnection and TrainingAbort on non-finite
// training values.
RunReport run_experiment(const ExperimentConfig& config);

// Fills the convergence, latency and recovery summaries from rows.
void summarize_rows(RunReport& report);

void write_slots_csv(std::ostream& os, const RunReport& report);
nlohmann::json summary_json(const RunReport& report);
void write_run(const std::filesystem::path& dir, const ExperimentConfig& config,
               const RunReport& report);

struct RoutingRow {
  double gamma0_db = 0.0;
  double iota = 0.0;
  double mean_consumption = 0.0;
};
std::vector<RoutingRow> routing_analysis(const ExperimentConfig& config);
void write_routing_csv(std::ostream& os, const std::vector<RoutingRow>& rows);

// Medians of the per-run summaries found in each directory.
nlohmann::json summarize_runs(const std::vector<std::filesystem::path>& dirs);

}  // namespace thzmesh

#endif  // THZMESH_EXPERIMENT_HPP_
