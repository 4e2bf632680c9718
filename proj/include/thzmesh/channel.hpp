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

#ifndef THZMESH_CHANNEL_HPP_
#define THZMESH_CHANNEL_HPP_

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace thzmesh {

inline constexpr double kSpeedOfLight = 299792458.0;

// Widely-spaced multi-subarray front end shared by every node.
struct ArrayConfig {
  int s_max = 64;
  int m_x = 4;
  int m_y = 4;
  double d0 = 0.5e-3;  // half wavelength at 300 GHz
  double g_t = 1.0;    // 0 dB
  double g_r = 1.0;

  int antennas_per_subarray() const { return m_x * m_y; }
  void validate() const;
};

enum class Direction : std::uint8_t { kUplink, kDownlink };

struct SubBand {
  double center_hz = 0.0;
  double bandwidth_hz = 0.0;
  Direction direction = Direction::kUplink;
  double g_abs = 0.0;  // molecular absorption, 1/m
};

class SubBandPlan {
 public:
  SubBandPlan() = default;
  // Throws ConfigError unless K is even, half of the bands serve each
  // direction and no two bands overlap.
  explicit SubBandPlan(std::vector<SubBand> bands);

  // Five 5 GHz uplink bands in 275-300 GHz, five downlink bands in
  // 300-325 GHz, absorption 0.005/m everywhere.
  static SubBandPlan standard(double g_abs = 0.005);

  std::size_t size() const { return bands_.size(); }
  std::size_t per_direction() const { return bands_.size() / 2; }
  const std::vector<SubBand>& bands() const { return bands_; }
  // Bands of one direction in ascending frequency order.
  const std::vector<SubBand>& bands(Direction d) const {
    return d == Direction::kUplink ? uplink_ : downlink_;
  }

 private:
  std::vector<SubBand> bands_;
  std::vector<SubBand> uplink_;
  std::vector<SubBand> downlink_;
};

// Unit-norm planar steering vector, entries ordered m_x-major.
std::vector<std::complex<double>> steering_vector(double theta,
                                                  const ArrayConfig& config,
                                                  double wavelength);

// Free-space gain with molecular absorption, (c / 4 pi f d)^2 exp(-g d).
// Throws DomainError for d <= 0, f <= 0 or g_abs < 0.
double path_gain(double f_hz, double d_m, double g_abs);

// Singular values of the per-link MIMO response spread evenly over
// min(S_t, S_r) streams. Empty when either count is zero.
std::vector<double> stream_singular_values(int s_t, int s_r,
                                           const ArrayConfig& config,
                                           double alpha_sq);

// P |h|^2 / (|a_r|^2 (I + sigma^2)). Throws DomainError when the
// denominator is not positive.
double sinr(double power_w, double h_sq, double a_r_sq,
            double interference_plus_noise_w);

struct LinkBudget {
  int s_t = 0;
  int s_r = 0;
  double distance_m = 0.0;
  std::vector<double> power_w;                    // per band
  std::vector<double> interference_plus_noise_w;  // per band
};

struct LinkRate {
  std::vector<double> per_band_bps;
  std::vector<double> stream_sinr;  // per band, per stream, 0 when unused
  double total_bps = 0.0;
};

// Multiplexed capacity of one directed link over the given bands with equal
// power per stream. usage[k] == 0 switches band k off.
LinkRate link_rate(const LinkBudget& budget, std::span<const SubBand> bands,
                   std::span<const std::uint8_t> usage,
                   const ArrayConfig& config);

}  // namespace thzmesh

#endif  // THZMESH_CHANNEL_HPP_
