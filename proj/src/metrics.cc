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
#include "coperc/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"

#include "coperc/errors.h"

namespace coperc {
namespace {

std::string Num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// JSON has no infinity; keep it readable as a string.
nlohmann::json JsonNum(double v) {
  if (std::isfinite(v)) return v;
  return Num(v);
}

void WriteFile(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + p.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + p.string());
}

}  // namespace

double NearestRankPercentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "percentile of an empty set");
  if (!(q > 0.0 && q <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "percentile outside (0, 1]");
  const auto n = values.size();
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   values.end());
  return values[rank - 1];
}

RunSummary SummarizeFrom(const std::vector<FrameResult>& results, const RunConfig& config,
                         const std::string& version, int first_frame) {
  RunSummary s;
  s.policy = PolicyName(config.policy);
  s.seed = config.seed;
  s.version = version;
  s.h_ms = config.H_ms;
  std::vector<double> lat, loc_err;
  double loss_sum = 0.0, rf_sum = 0.0, loc_ms = 0.0;
  std::size_t rf_count = 0, detection_slots = 0;
  for (const auto& f : results) {
    if (f.frame < first_frame) continue;
    ++s.frames;
    double frame_bytes = 0.0;
    for (const auto& c : f.cavs) {
      lat.push_back(c.latency.total_ms);
      s.detected_objects += static_cast<std::size_t>(c.detected);
      s.selected_objects += static_cast<std::size_t>(c.selected);
      s.infeasible_cav_frames += c.infeasible ? 1 : 0;
      detection_slots += c.detection_mode ? 1 : 0;
      loc_ms += c.localization_ms;
      frame_bytes += c.bytes;
    }
    for (const auto& o : f.objects) {
      loss_sum += o.loss;
      ++s.transmitted_objects;
      if (o.rf > 0) {
        ++s.rf_histogram[o.rf];
        rf_sum += o.rf;
        ++rf_count;
      }
    }
    loc_err.insert(loc_err.end(), f.localization_errors_m.begin(), f.localization_errors_m.end());
    s.bytes_per_frame.push_back(frame_bytes);
    s.total_bytes += frame_bytes;
  }
  s.cav_frames = lat.size();
  if (!lat.empty()) {
    s.latency_p50_ms = NearestRankPercentile(lat, 0.50);
    s.latency_p90_ms = NearestRankPercentile(lat, 0.90);
    s.latency_p95_ms = NearestRankPercentile(lat, 0.95);
    s.latency_p99_ms = NearestRankPercentile(lat, 0.99);
    double sum = 0.0;
    std::size_t within = 0;
    for (double v : lat) {
      sum += v;
      within += v <= config.H_ms ? 1 : 0;
    }
    s.latency_mean_ms = sum / static_cast<double>(lat.size());
    s.fraction_within_h = static_cast<double>(within) / static_cast<double>(lat.size());
    s.detection_slot_fraction = static_cast<double>(detection_slots) / static_cast<double>(lat.size());
    s.mean_localization_ms = loc_ms / static_cast<double>(lat.size());
  }
  if (s.transmitted_objects > 0) s.mean_loss = loss_sum / static_cast<double>(s.transmitted_objects);
  if (s.detected_objects > 0) {
    s.selected_fraction =
        static_cast<double>(s.selected_objects) / static_cast<double>(s.detected_objects);
  }
  if (rf_count > 0) s.mean_rf = rf_sum / static_cast<double>(rf_count);
  if (s.frames > 0) s.mean_bytes_per_frame = s.total_bytes / s.frames;
  if (!loc_err.empty()) {
    double sum = 0.0;
    for (double e : loc_err) sum += e;
    s.localization_error_mean_m = sum / static_cast<double>(loc_err.size());
    s.localization_error_p95_m = NearestRankPercentile(loc_err, 0.95);
  }
  return s;
}

RunSummary Summarize(const std::vector<FrameResult>& results, const RunConfig& config,
                     const std::string& version) {
  return SummarizeFrom(results, config, version, 0);
}

std::string SummaryJson(const RunSummary& s) {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [rf, n] : s.rf_histogram) hist[std::to_string(rf)] = n;
  const nlohmann::json j = {
      {"policy", s.policy},
      {"seed", s.seed},
      {"version", s.version},
      {"frames", s.frames},
      {"cav_frames", s.cav_frames},
      {"H_ms", s.h_ms},
      {"latency_ms",
       {{"p50", JsonNum(s.latency_p50_ms)},
        {"p90", JsonNum(s.latency_p90_ms)},
        {"p95", JsonNum(s.latency_p95_ms)},
        {"p99", JsonNum(s.latency_p99_ms)},
        {"mean", JsonNum(s.latency_mean_ms)}}},
      {"fraction_within_H", s.fraction_within_h},
      {"mean_loss", s.mean_loss},
      {"transmitted_objects", s.transmitted_objects},
      {"detected_objects", s.detected_objects},
      {"selected_objects", s.selected_objects},
      {"selected_fraction", s.selected_fraction},
      {"rf_histogram", hist},
      {"mean_rf", s.mean_rf},
      {"total_bytes", s.total_bytes},
      {"mean_bytes_per_frame", s.mean_bytes_per_frame},
      {"infeasible_cav_frames", s.infeasible_cav_frames},
      {"detection_slot_fraction", s.detection_slot_fraction},
      {"mean_localization_ms", s.mean_localization_ms},
      {"localization_error_m",
       {{"mean", s.localization_error_mean_m}, {"p95", s.localization_error_p95_m}}}};
  return j.dump(2) + "\n";
}

std::string FramesCsv(const std::vector<FrameResult>& results) {
  std::string out =
      "cav_id,frame,mode,vehicle_ms,uplink_ms,queue_ms,server_ms,aggregated_ms,total_ms,bytes,"
      "uplink_bytes,rate_bps,detected,selected,transmitted,reused,loss,infeasible,rf_values\n";
  for (const auto& f : results) {
    for (const auto& c : f.cavs) {
      const auto& l = c.latency;
      std::string rfs;
      for (int r : c.rfs) {
        if (!rfs.empty()) rfs += ';';
        rfs += std::to_string(r);
      }
      const double loss = c.transmitted > 0 ? c.loss_sum / c.transmitted : 0.0;
      out += std::to_string(c.cav_id) + ',' + std::to_string(c.frame) + ',' +
             (c.detection_mode ? "detection" : "tracking") + ',' + Num(l.vehicle_ms) + ',' +
             Num(l.uplink_ms) + ',' + Num(l.queue_ms) + ',' + Num(l.server_ms) + ',' +
             Num(l.aggregated_ms) + ',' + Num(l.total_ms) + ',' + Num(c.bytes) + ',' +
             Num(c.uplink_bytes) + ',' + Num(c.rate_bps) + ',' + std::to_string(c.detected) + ',' +
             std::to_string(c.selected) + ',' + std::to_string(c.transmitted) + ',' +
             std::to_string(c.reused) + ',' + Num(loss) + ',' + (c.infeasible ? "1" : "0") + ',' +
             rfs + '\n';
    }
  }
  return out;
}

std::string ObjectsCsv(const std::vector<FrameResult>& results) {
  std::string out = "frame,cav_id,object_id,global_id,rf,raw_points,bytes,loss\n";
  for (const auto& f : results) {
    for (const auto& o : f.objects) {
      out += std::to_string(o.frame) + ',' + std::to_string(o.cav_id) + ',' +
             std::to_string(o.object_id) + ',' + std::to_string(o.global_id) + ',' +
             std::to_string(o.rf) + ',' + Num(o.raw_points) + ',' + Num(o.bytes) + ',' +
             Num(o.loss) + '\n';
    }
  }
  return out;
}

std::string CdfCsv(std::vector<double> values, const std::string& column) {
  std::sort(values.begin(), values.end());
  std::string out = column + ",cdf\n";
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out += Num(values[i]) + ',' + Num(static_cast<double>(i + 1) / n) + '\n';
  }
  return out;
}

void WriteRunOutputs(const std::filesystem::path& dir, const std::vector<FrameResult>& results,
                     const RunSummary& summary) {
  std::vector<double> lat, err, loss;
  for (const auto& f : results) {
    for (const auto& c : f.cavs) lat.push_back(c.latency.total_ms);
    for (const auto& o : f.objects) loss.push_back(o.loss);
    err.insert(err.end(), f.localization_errors_m.begin(), f.localization_errors_m.end());
  }
  WriteFile(dir / "frames.csv", FramesCsv(results));
  WriteFile(dir / "objects.csv", ObjectsCsv(results));
  WriteFile(dir / "latency_cdf.csv", CdfCsv(lat, "total_ms"));
  WriteFile(dir / "localization_cdf.csv", CdfCsv(err, "error_m"));
  WriteFile(dir / "loss_cdf.csv", CdfCsv(loss, "loss"));
  std::string bytes = "frame,bytes\n";
  for (const auto& f : results) {
    double b = 0.0;
    for (const auto& c : f.cavs) b += c.bytes;
    bytes += std::to_string(f.frame) + ',' + Num(b) + '\n';
  }
  WriteFile(dir / "bytes_per_frame.csv", bytes);
  WriteFile(dir / "summary.json", SummaryJson(summary));
}

}  // namespace coperc
