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

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "coperc/pipeline.h"
#include "coperc/run_config.h"

namespace coperc {

// Nearest rank: the ceil(q * n)-th smallest value, q in (0, 1].
double NearestRankPercentile(std::vector<double> values, double q);

struct RunSummary {
  std::string policy;
  std::uint64_t seed = 0;
  std::string version;
  int frames = 0;
  std::size_t cav_frames = 0;
  double latency_p50_ms = 0.0;
  double latency_p90_ms = 0.0;
  double latency_p95_ms = 0.0;
  double latency_p99_ms = 0.0;
  double latency_mean_ms = 0.0;
  double fraction_within_h = 0.0;
  double h_ms = 0.0;
  double mean_loss = 0.0;          // over transmitted objects, reuse included
  std::size_t transmitted_objects = 0;
  std::size_t detected_objects = 0;
  std::size_t selected_objects = 0;
  double selected_fraction = 0.0;  // pooled selected / detected
  std::map<int, std::size_t> rf_histogram;
  double mean_rf = 0.0;  // latent objects only
  double total_bytes = 0.0;
  double mean_bytes_per_frame = 0.0;
  std::size_t infeasible_cav_frames = 0;
  double detection_slot_fraction = 0.0;
  double mean_localization_ms = 0.0;
  double localization_error_mean_m = 0.0;
  double localization_error_p95_m = 0.0;
  std::vector<double> bytes_per_frame;
};

RunSummary Summarize(const std::vector<FrameResult>& results, const RunConfig& config,
                     const std::string& version);
// Summary restricted to frames with index >= first_frame.
RunSummary SummarizeFrom(const std::vector<FrameResult>& results, const RunConfig& config,
                         const std::string& version, int first_frame);

std::string SummaryJson(const RunSummary& s);
std::string FramesCsv(const std::vector<FrameResult>& results);
std::string ObjectsCsv(const std::vector<FrameResult>& results);
// Sorted values with empirical CDF.
std::string CdfCsv(std::vector<double> values, const std::string& column);

// frames.csv, objects.csv, latency_cdf.csv, localization_cdf.csv,
// bytes_per_frame.csv and summary.json under `dir`.
void WriteRunOutputs(const std::filesystem::path& dir, const std::vector<FrameResult>& results,
                     const RunSummary& summary);

}  // namespace coperc
