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
#include <filesystem>
#include <string>
#include <vector>

#include "coperc/netsim.h"

namespace coperc {

enum class Policy { kAdamap, kAdamapLite, kAdamapReuse, kSelectAllLossless, kBlindspotAll };
enum class DatasetMode { kCodec, kSurrogate };

Policy ParsePolicy(const std::string& s);
std::string PolicyName(Policy p);
DatasetMode ParseDatasetMode(const std::string& s);
std::string DatasetModeName(DatasetMode m);

// How a CAV predicts its uplink rate: its equal share of the band for the
// CAVs active last frame, or the rate it experienced last frame.
enum class RatePredictor { kShare, kExperienced };
RatePredictor ParseRatePredictor(const std::string& s);
std::string RatePredictorName(RatePredictor p);

struct RunConfig {
  double bandwidth_hz = 200e3;
  double H_ms = 100.0;
  double p = 0.99;
  double beta = 1e-4;
  double rle_threshold_m = 0.5;
  double density_threshold = 1024.0;
  int partitions = 4;
  std::vector<int> rf_set{4, 8, 16, 32, 64};
  ShareMode share_mode = ShareMode::kEqualFdma;
  Policy policy = Policy::kAdamap;
  std::uint64_t seed = 1;
  DatasetMode dataset_mode = DatasetMode::kSurrogate;

  // Beyond the core keys.
  std::string dataset_path;  // empty: build the dataset in memory
  std::size_t dataset_samples = 1500;  // per key when built in memory
  int edge_servers = 32;
  bool uplink_counts_descriptor_overhead = false;
  double lossless_ratio = 1.91;
  double fading_sigma = 0.2;
  bool uplink_reallocation = true;
  RatePredictor rate_predictor = RatePredictor::kShare;
  double rate_smoothing = 1.0;
  double reuse_error_m = 0.5;
  double match_gate_m = 3.0;
  double detector_error_m = 0.07;
  double tracker_error_m = 0.12;
  double miss_probability = 0.02;
  int optimizer_outer = 10;
  int optimizer_inner = 20;
  int optimizer_deviations = 16;
  int latency_samples = 64;
  bool optimizer_trace = false;

  // Throws kInvalidArgument naming the first bad field.
  void Validate() const;
};

// Strict: unknown keys and wrong types are kParseError.
RunConfig RunConfigFromJson(const std::string& text);
RunConfig LoadRunConfig(const std::filesystem::path& path);
std::string RunConfigToJson(const RunConfig& config);

}  // namespace coperc
