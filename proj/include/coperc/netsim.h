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
#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "coperc/geometry.h"
#include "coperc/random.h"

namespace coperc {

enum class ShareMode { kEqualFdma, kRoundRobinTdma };

ShareMode ParseShareMode(const std::string& s);
std::string ShareModeName(ShareMode m);

struct RadioConfig {
  double bandwidth_hz = 200e3;
  double carrier_ghz = 3.5;
  double tx_power_dbm = 23.0;
  double noise_psd_dbm_hz = -174.0;
  double noise_figure_db = 9.0;
  Point3 base_station = Point3(0.0, 0.0, 10.0);
  ShareMode share_mode = ShareMode::kEqualFdma;
  // Log-normal rate multiplier: sd of its natural log, 0 disables it.
  double fading_sigma = 0.2;
  // Shadowing decorrelation distance for successive draws of one CAV.
  double fading_decorrelation_m = 10.0;
  double min_distance_m = 1.0;
  // Re-split the band whenever a CAV finishes, instead of holding each
  // share for the whole slot.
  bool reallocate = true;

  void Validate() const;
};

// Urban-micro line-of-sight path loss; distances below 1 m count as 1 m.
double PathLossDb(double distance_m, double carrier_ghz);

// Shannon rate of one CAV's share of the band in bits per second, times
// the fading multiplier.
double UplinkRate(const Point3& cav_position, int active_cavs, const RadioConfig& radio,
                  double fading = 1.0);

// Log of the fading multiplier after moving `moved_m` since the previous
// draw `prev_log` (Gudmundson correlation). Pass a NaN `prev_log` for a
// fresh draw.
double NextFadingLog(double prev_log, double moved_m, const RadioConfig& radio, Rng& rng);

struct UplinkRequest {
  int cav_id = -1;
  Point3 position = Point3::Zero();
  double start_ms = 0.0;  // when the payload is ready
  double bytes = 0.0;
  double fading = 1.0;
};

// Uplink durations in ms (0 for empty payloads, +inf when the rate is
// zero). With `reallocate`, the band is shared among the CAVs transmitting
// at each instant; otherwise each CAV keeps its share for every CAV with a
// payload.
std::vector<double> ScheduleUplink(const std::vector<UplinkRequest>& requests,
                                   const RadioConfig& radio);

struct ServerConfig {
  double decode_mean_ms = 1.72;
  double decode_sd_ms = 0.53;
  int servers = 1;

  void Validate() const;
};

std::vector<double> SampleDecodeTimes(const ServerConfig& server, std::size_t count, Rng& rng);

// One CAV's upload in a slot.
struct UplinkJob {
  int cav_id = -1;
  double payload_bytes = 0.0;  // bytes that occupy the uplink
  double rate_bps = 0.0;
  // Precomputed uplink time; when NaN it is bytes * 8 / rate.
  double uplink_ms = std::numeric_limits<double>::quiet_NaN();
  double localization_ms = 0.0;
  double vehicle_ms = 0.0;   // on-vehicle encoding
  double aggregated_ms = 0.0;  // B_i, already includes localization
  std::vector<double> decode_ms;  // per object, processed as one server job
};

struct LatencyBreakdown {
  int cav_id = -1;
  double vehicle_ms = 0.0;
  double uplink_ms = 0.0;
  double queue_ms = 0.0;
  double server_ms = 0.0;
  double aggregated_ms = 0.0;
  double total_ms = 0.0;
  double arrival_ms = 0.0;
  int server_index = -1;
  bool rate_failure = false;  // payload but no usable rate
};

inline constexpr double kInfiniteLatency = std::numeric_limits<double>::infinity();

// FCFS over the shared edge servers: jobs ordered by arrival
// (localization + encoding + uplink), ties by CAV id; each job runs on the
// earliest free server. Output is ordered like the input.
std::vector<LatencyBreakdown> SimulateFrameLatency(const std::vector<UplinkJob>& jobs,
                                                   const ServerConfig& server);

}  // namespace coperc
