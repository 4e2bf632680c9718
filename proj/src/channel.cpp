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

#include "thzmesh/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "thzmesh/errors.hpp"

namespace thzmesh {

void ArrayConfig::validate() const {
  if (s_max < 1 || m_x < 1 || m_y < 1 || !(d0 > 0.0) || !(g_t > 0.0) ||
      !(g_r > 0.0)) {
    throw ConfigError("array config needs S_max, M_x, M_y >= 1 and d0 > 0");
  }
}

SubBandPlan::SubBandPlan(std::vector<SubBand> bands) : bands_(std::move(bands)) {
  if (bands_.empty() || bands_.size() % 2 != 0) {
    throw ConfigError("sub-band plan needs an even, nonzero band count");
  }
  for (const SubBand& b : bands_) {
    if (!(b.center_hz > 0.0) || !(b.bandwidth_hz > 0.0) || b.g_abs < 0.0) {
      throw ConfigError("sub-band needs positive frequency and bandwidth");
    }
    (b.direction == Direction::kUplink ? uplink_ : downlink_).push_back(b);
  }
  if (uplink_.size() != downlink_.size()) {
    throw ConfigError("sub-band plan must split evenly between directions");
  }
  std::vector<SubBand> sorted = bands_;
  std::ranges::sort(sorted, {}, &SubBand::center_hz);
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    const double hi = sorted[k - 1].center_hz + sorted[k - 1].bandwidth_hz / 2;
    const double lo = sorted[k].center_hz - sorted[k].bandwidth_hz / 2;
    if (lo < hi - 1.0) throw ConfigError("sub-bands overlap");
  }
  std::ranges::sort(uplink_, {}, &SubBand::center_hz);
  std::ranges::sort(downlink_, {}, &SubBand::center_hz);
}

SubBandPlan SubBandPlan::standard(double g_abs) {
  std::vector<SubBand> bands;
  constexpr double kWidth = 5e9;
  for (int k = 0; k < 5; ++k) {
    bands.push_back({275e9 + kWidth * (k + 0.5), kWidth, Direction::kUplink,
                     g_abs});
  }
  for (int k = 0; k < 5; ++k) {
    bands.push_back({300e9 + kWidth * (k + 0.5), kWidth, Direction::kDownlink,
                     g_abs});
  }
  return SubBandPlan(std::move(bands));
}

std::vector<std::complex<double>> steering_vector(double theta,
                                                  const ArrayConfig& config,
                                                  double wavelength) {
  const int n = config.antennas_per_subarray();
  if (n < 1) throw DomainError("steering vector needs at least one antenna");
  const double amp = 1.0 / std::sqrt(static_cast<double>(n));
  const double k = 2.0 * std::numbers::pi * config.d0 / wavelength *
                   std::sin(theta);
  std::vector<std::complex<double>> a;
  a.reserve(static_cast<std::size_t>(n));
  for (int mx = 0; mx < config.m_x; ++mx) {
    for (int my = 0; my < config.m_y; ++my) {
      a.push_back(std::polar(amp, k * static_cast<double>(mx + my)));
    }
  }
  return a;
}

double path_gain(double f_hz, double d_m, double g_abs) {
  if (!(d_m > 0.0)) throw DomainError("path gain needs positive distance");
  if (!(f_hz > 0.0)) throw DomainError("path gain needs positive frequency");
  if (g_abs < 0.0) throw DomainError("absorption coefficient must be >= 0");
  const double free_space = kSpeedOfLight / (4.0 * std::numbers::pi * f_hz * d_m);
  return free_space * free_space * std::exp(-g_abs * d_m);
}

std::vector<double> stream_singular_values(int s_t, int s_r,
                                           const ArrayConfig& config,
                                           double alpha_sq) {
  if (s_t <= 0 || s_r <= 0) return {};
  const int streams = std::min(s_t, s_r);
  const double m = config.antennas_per_subarray();
  const double frobenius =
      std::sqrt(static_cast<double>(s_t) * m * static_cast<double>(s_r) * m) *
      config.g_t * config.g_r * alpha_sq;
  return std::vector<double>(static_cast<std::size_t>(streams),
                             frobenius / std::sqrt(static_cast<double>(streams)));
}

double sinr(double power_w, double h_sq, double a_r_sq,
            double interference_plus_noise_w) {
  const double denom = a_r_sq * interference_plus_noise_w;
  if (!(denom > 0.0)) throw DomainError("SINR denominator must be positive");
  return power_w * h_sq / denom;
}

LinkRate link_rate(const LinkBudget& budget, std::span<const SubBand> bands,
                   std::span<const std::uint8_t> usage,
                   const ArrayConfig& config) {
  const std::size_t k_count = bands.size();
  if (budget.power_w.size() != k_count || usage.size() != k_count ||
      budget.interference_plus_noise_w.size() != k_count) {
    throw UsageError("link budget does not match the band list");
  }
  LinkRate out;
  out.per_band_bps.assign(k_count, 0.0);
  out.stream_sinr.assign(k_count, 0.0);
  for (std::size_t k = 0; k < k_count; ++k) {
    if (usage[k] == 0) continue;
    const double alpha_sq =
        path_gain(bands[k].center_hz, budget.distance_m, bands[k].g_abs);
    const std::vector<double> kappa =
        stream_singular_values(budget.s_t, budget.s_r, config, alpha_sq);
    if (kappa.empty()) continue;
    const double p_stream = budget.power_w[k] / static_cast<double>(kappa.size());
    double bits = 0.0;
    for (double kv : kappa) {
      const double g = sinr(p_stream, kv * kv, 1.0,
                            budget.interference_plus_noise_w[k]);
      out.stream_sinr[k] = g;
      bits += std::log1p(g) / std::numbers::ln2;
    }
    out.per_band_bps[k] = bands[k].bandwidth_hz * bits;
    out.total_bps += out.per_band_bps[k];
  }
  return out;
}

}  // namespace thzmesh
