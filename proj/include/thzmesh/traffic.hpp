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

#ifndef THZMESH_TRAFFIC_HPP_
#define THZMESH_TRAFFIC_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

namespace thzmesh {

// Per-slot packet counts driven by fractional Gaussian noise.
struct TrafficModel {
  double mu = 0.0;       // mean packets per slot
  double sigma_f = 0.0;  // fluctuation scale, packets per slot
  double hurst = 0.8;

  void validate() const;
};

// Autocorrelation of unit-variance fGn at integer lag k.
double fgn_autocorrelation(double hurst, std::int64_t lag);

// Exact stationary fGn (unit variance) by Hosking's recursion. O(length^2).
// Throws ConfigError for hurst outside (0, 1) or length == 0.
std::vector<double> fgn_sequence(double hurst, std::size_t length,
                                 std::uint64_t seed);

// max(0, round(mu + sigma_f * fgn_value))
std::int64_t slot_arrivals(const TrafficModel& model, double fgn_value);

struct ArrivalSample {
  // Indexed by node. uplink[i] enters node i toward the donor; downlink[i]
  // enters the donor destined for node i. Both are zero for the donor.
  std::vector<std::int64_t> uplink;
  std::vector<std::int64_t> downlink;
};

// Pre-generates independent fGn streams for every node and direction over a
// fixed horizon.
class TrafficGenerator {
 public:
  TrafficGenerator(std::size_t nodes, TrafficModel uplink,
                   TrafficModel downlink, std::size_t horizon,
                   std::uint64_t seed);

  std::size_t horizon() const { return horizon_; }
  ArrivalSample arrivals(std::size_t slot) const;

 private:
  std::size_t nodes_;
  std::size_t horizon_;
  TrafficModel uplink_;
  TrafficModel downlink_;
  std::vector<std::vector<double>> up_noise_;
  std::vector<std::vector<double>> down_noise_;
};

}  // namespace thzmesh

#endif  // THZMESH_TRAFFIC_HPP_
