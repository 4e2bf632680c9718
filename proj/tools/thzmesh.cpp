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

// Command-line front end: run, analyze-routing, summarize.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "thzmesh/errors.hpp"
#include "thzmesh/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            const std::string& out, std::optional<int> unsafe,
            std::optional<std::size_t> slots) {
  thzmesh::ExperimentConfig cfg = thzmesh::ExperimentConfig::load(config_path);
  if (seed) cfg.seed = *seed;
  if (unsafe) cfg.unsafe = *unsafe;
  if (slots) cfg.slots = *slots;
  cfg.validate();
  const thzmesh::RunReport report = thzmesh::run_experiment(cfg);
  thzmesh::write_run(out, cfg, report);
  std::cout << thzmesh::summary_json(report).dump(2) << '\n';
  return 0;
}

int cmd_routing(const std::string& config_path, const std::string& out) {
  const auto cfg = thzmesh::ExperimentConfig::load(config_path);
  const auto rows = thzmesh::routing_analysis(cfg);
  if (out.empty()) {
    thzmesh::write_routing_csv(std::cout, rows);
    return 0;
  }
  std::filesystem::create_directories(out);
  std::ofstream os(std::filesystem::path(out) / "routing.csv");
  thzmesh::write_routing_csv(os, rows);
  return 0;
}

int cmd_summarize(const std::vector<std::string>& runs, const std::string& out) {
  std::vector<std::filesystem::path> dirs(runs.begin(), runs.end());
  const auto summary = thzmesh::summarize_runs(dirs);
  if (out.empty()) {
    std::cout << summary.dump(2) << '\n';
    return 0;
  }
  std::filesystem::create_directories(out);
  std::ofstream os(std::filesystem::path(out) / "summary.json");
  os << summary.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"THz mesh backhaul simulator and resource-allocation trainer"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> unsafe;
  std::optional<std::size_t> slots;
  std::vector<std::string> runs;

  auto* run = app.add_subcommand("run", "Train the allocation agents on one seeded run");
  run->add_option("--config", config_path, "Experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--unsafe", unsafe, "Ablation type")
      ->check(CLI::IsMember({1, 2, 3}));
  run->add_option("--slots", slots, "Override the slot count");

  auto* routing = app.add_subcommand(
      "analyze-routing", "Mean resource consumption over the gamma0 x iota grid");
  routing->add_option("--config", config_path, "Experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  routing->add_option("--out", out, "Output directory (default: stdout)");

  auto* summarize =
      app.add_subcommand("summarize", "Medians across run directories");
  summarize->add_option("runs", runs, "Run directories")->required();
  summarize->add_option("--out", out, "Output directory (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path, seed, out, unsafe, slots);
    if (*routing) return cmd_routing(config_path, out);
    return cmd_summarize(runs, out);
  } catch (const thzmesh::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
}
