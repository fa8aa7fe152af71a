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
#include <map>
#include <string>
#include <vector>

#include "coperc/control.h"
#include "coperc/geometry.h"

namespace coperc {

inline constexpr double kFramePeriodS = 0.1;

struct TraceObject {
  int id = -1;
  Bbox3 box;  // global frame
  double point_count = 0.0;
  std::string cloud_ref;  // optional sidecar file
};

struct TraceCav {
  int id = -1;
  Pose pose;  // LiDAR origin in the global frame
  Bbox3 box;  // the vehicle's own body
  std::vector<TraceObject> objects;
};

struct TraceFrame {
  int index = 0;
  double time = 0.0;
  std::vector<TraceCav> cavs;

  // Throws kFrameError on duplicate ids or invalid geometry.
  void Validate() const;
};

struct TraceGeneratorConfig {
  int cavs = 150;
  int frames = 100;
  double extent_m = 400.0;
  double road_spacing_m = 100.0;
  double lane_offset_m = 1.75;
  double min_speed_mps = 5.0;
  double max_speed_mps = 15.0;
  double turn_probability = 0.4;
  double speed_change_probability = 0.3;
  double lidar_height_m = 1.9;
  double point_noise_sigma = 0.3;
  VisibilityModel visibility;
  std::uint64_t seed = 1;

  void Validate() const;
};

std::vector<TraceFrame> GenerateTrace(const TraceGeneratorConfig& config);

// One JSON object per line.
std::string FrameToJsonLine(const TraceFrame& frame);
TraceFrame FrameFromJsonLine(const std::string& line);

void WriteTrace(const std::vector<TraceFrame>& frames, const std::filesystem::path& path);
// Validates each frame and the fixed 0.1 s spacing; kFrameError names the
// offending frame, kParseError the offending line.
std::vector<TraceFrame> ReadTrace(const std::filesystem::path& path);

struct TraceStats {
  int frames = 0;
  int max_cavs = 0;
  double mean_visible_per_cav = 0.0;
  // distinct visible objects per frame -> number of frames
  std::map<int, int> objects_per_frame;
};

TraceStats ComputeTraceStats(const std::vector<TraceFrame>& frames);
std::string TraceStatsJson(const TraceStats& stats, const TraceGeneratorConfig& config);

}  // namespace coperc
