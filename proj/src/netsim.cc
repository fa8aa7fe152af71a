/******************************************************************************
 * Copyright 2026 The coperc Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *****************************************************************************/
#include "coperc/netsim.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "coperc/errors.h"

namespace coperc {

ShareMode ParseShareMode(const std::string& s) {
  if (s == "fdma" || s == "equal" || s == "equal-fdma") return ShareMode::kEqualFdma;
  if (s == "tdma" || s == "round-robin" || s == "round-robin-tdma") {
    return ShareMode::kRoundRobinTdma;
  }
  throw Error(ErrorCode::kParseError, "unknown share mode '" + s + "'");
}

std::string ShareModeName(ShareMode m) {
  return m == ShareMode::kEqualFdma ? "fdma" : "tdma";
}

void RadioConfig::Validate() const {
  if (!(bandwidth_hz > 0.0) || !(carrier_ghz > 0.0) || !(fading_sigma >= 0.0) ||
      !(fading_decorrelation_m > 0.0) ||
      !(min_distance_m > 0.0) || !std::isfinite(tx_power_dbm) ||
      !std::isfinite(noise_psd_dbm_hz) || !base_station.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "radio configuration out of range");
  }
}

double PathLossDb(double distance_m, double carrier_ghz) {
  if (!(carrier_ghz > 0.0) || std::isnan(distance_m)) {
    throw Error(ErrorCode::kInvalidArgument, "path loss needs a positive carrier");
  }
  return 32.4 + 21.0 * std::log10(std::max(distance_m, 1.0)) + 20.0 * std::log10(carrier_ghz);
}

double UplinkRate(const Point3& cav_position, int active_cavs, const RadioConfig& radio,
                  double fading) {
  radio.Validate();
  if (active_cavs < 1) throw Error(ErrorCode::kInvalidArgument, "active CAV count must be >= 1");
  const double d = std::max((cav_position - radio.base_station).norm(), radio.min_distance_m);
  if (!(fading >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "negative fading multiplier");
  const double rx_dbm = radio.tx_power_dbm - PathLossDb(d, radio.carrier_ghz);
  if (radio.share_mode == ShareMode::kEqualFdma) {
    const double band = radio.bandwidth_hz / active_cavs;
    const double noise_dbm = radio.noise_psd_dbm_hz + 10.0 * std::log10(band) + radio.noise_figure_db;
    return fading * band * std::log2(1.0 + std::pow(10.0, (rx_dbm - noise_dbm) / 10.0));
  }
  // whole band for 1/n of the time
  const double noise_dbm =
      radio.noise_psd_dbm_hz + 10.0 * std::log10(radio.bandwidth_hz) + radio.noise_figure_db;
  const double snr = std::pow(10.0, (rx_dbm - noise_dbm) / 10.0);
  return fading * radio.bandwidth_hz * std::log2(1.0 + snr) / active_cavs;
}

double NextFadingLog(double prev_log, double moved_m, const RadioConfig& radio, Rng& rng) {
  if (radio.fading_sigma <= 0.0) return 0.0;
  std::normal_distribution<double> n(0.0, 1.0);
  const double z = n(rng);
  if (std::isnan(prev_log)) return radio.fading_sigma * z;
  const double rho = std::exp(-std::max(moved_m, 0.0) / radio.fading_decorrelation_m);
  return rho * prev_log + std::sqrt(1.0 - rho * rho) * radio.fading_sigma * z;
}

std::vector<double> ScheduleUplink(const std::vector<UplinkRequest>& requests,
                                   const RadioConfig& radio) {
  radio.Validate();
  const std::size_t n = requests.size();
  std::vector<double> out(n, 0.0);
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < n; ++i) {
    if (requests[i].bytes > 0.0) pending.push_back(i);
  }
  if (pending.empty()) return out;
  if (!radio.reallocate) {
    const int active = static_cast<int>(pending.size());
    for (std::size_t i : pending) {
      const double r = UplinkRate(requests[i].position, active, radio, requests[i].fading);
      out[i] = r > 0.0 ? requests[i].bytes * 8.0 / r * 1000.0 : kInfiniteLatency;
    }
    return out;
  }
  std::stable_sort(pending.begin(), pending.end(), [&](std::size_t a, std::size_t b) {
    if (requests[a].start_ms != requests[b].start_ms) {
      return requests[a].start_ms < requests[b].start_ms;
    }
    return requests[a].cav_id < requests[b].cav_id;
  });
  std::vector<double> bits(n, 0.0);
  std::vector<std::size_t> active;
  std::size_t next = 0;
  double t = requests[pending[0]].start_ms;
  while (next < pending.size() || !active.empty()) {
    while (next < pending.size() && requests[pending[next]].start_ms <= t) {
      bits[pending[next]] = requests[pending[next]].bytes * 8.0;
      active.push_back(pending[next++]);
    }
    if (active.empty()) {
      t = requests[pending[next]].start_ms;
      continue;
    }
    const int k = static_cast<int>(active.size());
    std::vector<double> rate(active.size());
    double step = kInfiniteLatency;  // ms until the first completion
    for (std::size_t a = 0; a < active.size(); ++a) {
      const auto& r = requests[active[a]];
      rate[a] = UplinkRate(r.position, k, radio, r.fading) / 1000.0;  // bits per ms
      if (rate[a] > 0.0) step = std::min(step, bits[active[a]] / rate[a]);
    }
    const double until_start =
        next < pending.size() ? requests[pending[next]].start_ms - t : kInfiniteLatency;
    if (std::isinf(step) && std::isinf(until_start)) {
      for (std::size_t i : active) out[i] = kInfiniteLatency;
      break;
    }
    const double dt = std::min(step, until_start);
    t += dt;
    std::vector<std::size_t> still;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const std::size_t i = active[a];
      bits[i] -= rate[a] * dt;
      // the finishing CAV is the one that set the step
      if (bits[i] <= 1e-9 * requests[i].bytes * 8.0 || (dt == step && rate[a] > 0.0 &&
                                                        bits[i] / rate[a] <= 1e-12)) {
        out[i] = t - requests[i].start_ms;
      } else {
        still.push_back(i);
      }
    }
    active.swap(still);
  }
  return out;
}

void ServerConfig::Validate() const {
  if (servers < 1 || !(decode_mean_ms > 0.0) || !(decode_sd_ms > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "server configuration out of range");
  }
}

std::vector<double> SampleDecodeTimes(const ServerConfig& server, std::size_t count, Rng& rng) {
  server.Validate();
  const auto tn = TruncatedNormal::Matching(server.decode_mean_ms, server.decode_sd_ms);
  std::vector<double> out(count);
  for (auto& v : out) v = tn(rng);
  return out;
}

std::vector<LatencyBreakdown> SimulateFrameLatency(const std::vector<UplinkJob>& jobs,
                                                   const ServerConfig& server) {
  server.Validate();
  std::vector<LatencyBreakdown> out(jobs.size());
  std::vector<std::size_t> queued;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& j = jobs[i];
    auto& b = out[i];
    b.cav_id = j.cav_id;
    b.vehicle_ms = j.vehicle_ms;
    b.aggregated_ms = j.aggregated_ms;
    if (j.payload_bytes > 0.0 && !std::isnan(j.uplink_ms)) {
      b.uplink_ms = j.uplink_ms;
      b.rate_failure = std::isinf(j.uplink_ms);
    } else if (j.payload_bytes > 0.0) {
      if (!(j.rate_bps > 0.0) || !std::isfinite(j.rate_bps)) {
        b.rate_failure = true;
        b.uplink_ms = kInfiniteLatency;
      } else {
        b.uplink_ms = j.payload_bytes * 8.0 / j.rate_bps * 1000.0;
      }
    }
    b.server_ms = std::accumulate(j.decode_ms.begin(), j.decode_ms.end(), 0.0);
    b.arrival_ms = j.localization_ms + j.vehicle_ms + b.uplink_ms;
    if (!j.decode_ms.empty() && !b.rate_failure) queued.push_back(i);
  }
  std::stable_sort(queued.begin(), queued.end(), [&](std::size_t a, std::size_t c) {
    if (out[a].arrival_ms != out[c].arrival_ms) return out[a].arrival_ms < out[c].arrival_ms;
    return jobs[a].cav_id < jobs[c].cav_id;
  });
  // (free time, server index); lowest index wins ties
  using Slot = std::pair<double, int>;
  std::priority_queue<Slot, std::vector<Slot>, std::greater<Slot>> free;
  for (int s = 0; s < server.servers; ++s) free.push({0.0, s});
  for (std::size_t i : queued) {
    auto [t_free, s] = free.top();
    free.pop();
    auto& b = out[i];
    const double start = std::max(t_free, b.arrival_ms);
    b.queue_ms = start - b.arrival_ms;
    b.server_index = s;
    free.push({start + b.server_ms, s});
  }
  for (auto& b : out) {
    b.total_ms = b.rate_failure ? kInfiniteLatency
                                : b.vehicle_ms + b.uplink_ms + b.queue_ms + b.server_ms +
                                      b.aggregated_ms;
  }
  return out;
}

}  // namespace coperc
