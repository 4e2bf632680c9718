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

#include "thzmesh/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "thzmesh/errors.hpp"
#include "thzmesh/kernels.hpp"

namespace thzmesh {

void TrafficModel::validate() const {
  if (!(mu >= 0.0) || !(sigma_f >= 0.0)) {
    throw ConfigError("traffic mean and fluctuation must be nonnegative");
  }
  if (!(hurst > 0.0 && hurst < 1.0)) {
    throw ConfigError("Hurst exponent must lie in (0, 1)");
  }
}

double fgn_autocorrelation(double hurst, std::int64_t lag) {
  const double k = std::abs(static_cast<double>(lag));
  const double h2 = 2.0 * hurst;
  return 0.5 * (std::pow(k + 1.0, h2) - 2.0 * std::pow(k, h2) +
                std::pow(std::abs(k - 1.0), h2));
}

std::vector<double> fgn_sequence(double hurst, std::size_t length,
                                 std::uint64_t seed) {
  if (!(hurst > 0.0 && hurst < 1.0)) {
    throw ConfigError("Hurst exponent must lie in (0, 1)");
  }
  if (length == 0) throw ConfigError("fGn length must be at least 1");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> rho(length);
  for (std::size_t k = 0; k < length; ++k) {
    rho[k] = fgn_autocorrelation(hurst, static_cast<std::int64_t>(k));
  }

  std::vector<double> x(length);
  x[0] = normal(rng);

  // phi holds the order-n prediction coefficients phi_{n,1..n}; phi_rev the
  // same values reversed so both recursions are contiguous dot products.
  std::vector<double> phi;
  std::vector<double> phi_rev;
  std::vector<double> next;
  phi.reserve(length);
  phi_rev.reserve(length);
  double variance = 1.0;
  for (std::size_t n = 1; n < length; ++n) {
    const std::size_t m = n - 1;
    const double proj = kernels::dot(std::span(phi_rev.data(), m),
                                     std::span(rho.data() + 1, m));
    const double d = (rho[n] - proj) / variance;
    next.assign(phi.begin(), phi.end());
    kernels::axpy(-d, std::span<const double>(phi_rev.data(), m),
                  std::span(next.data(), m));
    next.push_back(d);
    phi.swap(next);
    phi_rev.assign(phi.rbegin(), phi.rend());
    variance *= 1.0 - d * d;

    const double mean = kernels::dot(std::span(phi_rev.data(), n),
                                     std::span(x.data(), n));
    x[n] = mean + std::sqrt(std::max(variance, 0.0)) * normal(rng);
  }
  return x;
}

std::int64_t slot_arrivals(const TrafficModel& model, double fgn_value) {
  const double v = std::round(model.mu + model.sigma_f * fgn_value);
  return v <= 0.0 ? 0 : static_cast<std::int64_t>(v);
}

TrafficGenerator::TrafficGenerator(std::size_t nodes, TrafficModel uplink,
                                   TrafficModel downlink, std::size_t horizon,
                                   std::uint64_t seed)
    : nodes_(nodes),
      horizon_(horizon),
      uplink_(uplink),
      downlink_(downlink),
      up_noise_(nodes),
      down_noise_(nodes) {
  uplink_.validate();
  downlink_.validate();
  if (horizon_ == 0) return;
  std::seed_seq seq{seed, std::uint64_t{0x7a11'f1c0}};
  std::vector<std::uint64_t> seeds(2 * nodes);
  seq.generate(seeds.begin(), seeds.end());
  for (std::size_t i = 1; i < nodes; ++i) {
    up_noise_[i] = fgn_sequence(uplink_.hurst, horizon_, seeds[2 * i]);
    down_noise_[i] = fgn_sequence(downlink_.hurst, horizon_, seeds[2 * i + 1]);
  }
}

ArrivalSample TrafficGenerator::arrivals(std::size_t slot) const {
  if (slot >= horizon_) throw UsageError("slot beyond traffic horizon");
  ArrivalSample s;
  s.uplink.assign(nodes_, 0);
  s.downlink.assign(nodes_, 0);
  for (std::size_t i = 1; i < nodes_; ++i) {
    s.uplink[i] = slot_arrivals(uplink_, up_noise_[i][slot]);
    s.downlink[i] = slot_arrivals(downlink_, down_noise_[i][slot]);
  }
  return s;
}

}  // namespace thzmesh
