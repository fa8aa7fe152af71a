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
#include "coperc/run_config.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "coperc/codec.h"
#include "coperc/errors.h"

namespace coperc {
namespace {

using nlohmann::json;

void Fail(const std::string& what) { throw Error(ErrorCode::kInvalidArgument, what); }

}  // namespace

Policy ParsePolicy(const std::string& s) {
  if (s == "adamap") return Policy::kAdamap;
  if (s == "adamap-lite") return Policy::kAdamapLite;
  if (s == "adamap-reuse") return Policy::kAdamapReuse;
  if (s == "select-all-lossless") return Policy::kSelectAllLossless;
  if (s == "blindspot-all") return Policy::kBlindspotAll;
  throw Error(ErrorCode::kParseError, "unknown policy '" + s + "'");
}

std::string PolicyName(Policy p) {
  switch (p) {
    case Policy::kAdamap: return "adamap";
    case Policy::kAdamapLite: return "adamap-lite";
    case Policy::kAdamapReuse: return "adamap-reuse";
    case Policy::kSelectAllLossless: return "select-all-lossless";
    case Policy::kBlindspotAll: return "blindspot-all";
  }
  return "?";
}

RatePredictor ParseRatePredictor(const std::string& s) {
  if (s == "share") return RatePredictor::kShare;
  if (s == "experienced") return RatePredictor::kExperienced;
  throw Error(ErrorCode::kParseError, "unknown rate_predictor '" + s + "'");
}

std::string RatePredictorName(RatePredictor p) {
  return p == RatePredictor::kShare ? "share" : "experienced";
}

DatasetMode ParseDatasetMode(const std::string& s) {
  if (s == "codec") return DatasetMode::kCodec;
  if (s == "surrogate") return DatasetMode::kSurrogate;
  throw Error(ErrorCode::kParseError, "unknown dataset mode '" + s + "'");
}

std::string DatasetModeName(DatasetMode m) {
  return m == DatasetMode::kCodec ? "codec" : "surrogate";
}

void RunConfig::Validate() const {
  if (!(bandwidth_hz > 0.0)) Fail("bandwidth_hz must be positive");
  if (!(H_ms > 0.0)) Fail("H_ms must be positive");
  if (!(p > 0.0 && p < 1.0)) Fail("p must lie in (0, 1)");
  if (!(beta >= 0.0)) Fail("beta must be nonnegative");
  if (!(rle_threshold_m > 0.0)) Fail("rle_threshold_m must be positive");
  if (!(density_threshold > 0.0)) Fail("density_threshold must be positive");
  if (partitions != 4) Fail("only 4 partitions are supported");
  if (rf_set.empty() || !std::is_sorted(rf_set.begin(), rf_set.end()) ||
      std::adjacent_find(rf_set.begin(), rf_set.end()) != rf_set.end()) {
    Fail("rf_set must be strictly increasing");
  }
  for (int r : rf_set) RepresentationFactor{r};
  if (dataset_samples < 30) Fail("dataset_samples must be at least 30");
  if (edge_servers < 1) Fail("edge_servers must be >= 1");
  if (!(lossless_ratio >= 1.0)) Fail("lossless_ratio must be >= 1");
  if (!(fading_sigma >= 0.0)) Fail("fading_sigma must be nonnegative");
  if (!(rate_smoothing > 0.0 && rate_smoothing <= 1.0)) Fail("rate_smoothing must be in (0, 1]");
  if (!(reuse_error_m > 0.0) || !(match_gate_m > 0.0)) Fail("reuse/match radii must be positive");
  if (detector_error_m < 0.0 || tracker_error_m < 0.0) Fail("localizer errors must be >= 0");
  if (miss_probability < 0.0 || miss_probability > 1.0) Fail("miss_probability outside [0, 1]");
  if (optimizer_outer < 1 || optimizer_inner < 1 || optimizer_deviations < 2 ||
      latency_samples < 1) {
    Fail("optimizer iteration counts out of range");
  }
}

RunConfig RunConfigFromJson(const std::string& text) {
  RunConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("run config: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kParseError, "run config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    try {
      if (k == "bandwidth_hz") c.bandwidth_hz = v.get<double>();
      else if (k == "H_ms") c.H_ms = v.get<double>();
      else if (k == "p") c.p = v.get<double>();
      else if (k == "beta") c.beta = v.get<double>();
      else if (k == "rle_threshold_m") c.rle_threshold_m = v.get<double>();
      else if (k == "density_threshold") c.density_threshold = v.get<double>();
      else if (k == "partitions") c.partitions = v.get<int>();
      else if (k == "rf_set") c.rf_set = v.get<std::vector<int>>();
      else if (k == "share_mode") c.share_mode = ParseShareMode(v.get<std::string>());
      else if (k == "policy") c.policy = ParsePolicy(v.get<std::string>());
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "dataset_mode") c.dataset_mode = ParseDatasetMode(v.get<std::string>());
      else if (k == "dataset_path") c.dataset_path = v.get<std::string>();
      else if (k == "dataset_samples") c.dataset_samples = v.get<std::size_t>();
      else if (k == "edge_servers") c.edge_servers = v.get<int>();
      else if (k == "uplink_counts_descriptor_overhead") {
        c.uplink_counts_descriptor_overhead = v.get<bool>();
      } else if (k == "lossless_ratio") c.lossless_ratio = v.get<double>();
      else if (k == "fading_sigma") c.fading_sigma = v.get<double>();
      else if (k == "uplink_reallocation") c.uplink_reallocation = v.get<bool>();
      else if (k == "rate_predictor") c.rate_predictor = ParseRatePredictor(v.get<std::string>());
      else if (k == "rate_smoothing") c.rate_smoothing = v.get<double>();
      else if (k == "reuse_error_m") c.reuse_error_m = v.get<double>();
      else if (k == "match_gate_m") c.match_gate_m = v.get<double>();
      else if (k == "detector_error_m") c.detector_error_m = v.get<double>();
      else if (k == "tracker_error_m") c.tracker_error_m = v.get<double>();
      else if (k == "miss_probability") c.miss_probability = v.get<double>();
      else if (k == "optimizer_outer") c.optimizer_outer = v.get<int>();
      else if (k == "optimizer_inner") c.optimizer_inner = v.get<int>();
      else if (k == "optimizer_deviations") c.optimizer_deviations = v.get<int>();
      else if (k == "latency_samples") c.latency_samples = v.get<int>();
      else if (k == "optimizer_trace") c.optimizer_trace = v.get<bool>();
      else throw Error(ErrorCode::kParseError, "unknown run config key '" + k + "'");
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParseError, "run config key '" + k + "': " + e.what());
    }
  }
  try {
    c.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kParseError, std::string("run config: ") + e.what());
  }
  return c;
}

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return RunConfigFromJson(ss.str());
}

std::string RunConfigToJson(const RunConfig& c) {
  const json j = {{"bandwidth_hz", c.bandwidth_hz},
                  {"H_ms", c.H_ms},
                  {"p", c.p},
                  {"beta", c.beta},
                  {"rle_threshold_m", c.rle_threshold_m},
                  {"density_threshold", c.density_threshold},
                  {"partitions", c.partitions},
                  {"rf_set", c.rf_set},
                  {"share_mode", ShareModeName(c.share_mode)},
                  {"policy", PolicyName(c.policy)},
                  {"seed", c.seed},
                  {"dataset_mode", DatasetModeName(c.dataset_mode)},
                  {"dataset_path", c.dataset_path},
                  {"dataset_samples", c.dataset_samples},
                  {"edge_servers", c.edge_servers},
                  {"uplink_counts_descriptor_overhead", c.uplink_counts_descriptor_overhead},
                  {"lossless_ratio", c.lossless_ratio},
                  {"fading_sigma", c.fading_sigma},
                  {"uplink_reallocation", c.uplink_reallocation},
                  {"rate_predictor", RatePredictorName(c.rate_predictor)},
                  {"rate_smoothing", c.rate_smoothing},
                  {"reuse_error_m", c.reuse_error_m},
                  {"match_gate_m", c.match_gate_m},
                  {"detector_error_m", c.detector_error_m},
                  {"tracker_error_m", c.tracker_error_m},
                  {"miss_probability", c.miss_probability},
                  {"optimizer_outer", c.optimizer_outer},
                  {"optimizer_inner", c.optimizer_inner},
                  {"optimizer_deviations", c.optimizer_deviations},
                  {"latency_samples", c.latency_samples},
                  {"optimizer_trace", c.optimizer_trace}};
  return j.dump(2) + "\n";
}

}  // namespace coperc
