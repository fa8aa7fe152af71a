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

#include <functional>
#include <limits>
#include <map>
#include <vector>

#include "coperc/control.h"
#include "coperc/dataset.h"
#include "coperc/global_map.h"
#include "coperc/netsim.h"
#include "coperc/run_config.h"
#include "coperc/trace.h"
#include "coperc/tracking.h"

namespace coperc {

struct PipelineContext {
  RunConfig config;
  const MeasurementDataset* dataset = nullptr;
  RadioConfig radio;
  ServerConfig server;
  OptimizerConfig optimizer;
  HybridLocalizerConfig localizer;
  VisibilityModel visibility;
  unsigned workers = 1;
};

// Derives every sub-config from the run configuration.
PipelineContext MakeContext(const RunConfig& config, const MeasurementDataset& dataset,
                            unsigned workers = 1);

// Builds the dataset a run config asks for: loaded from dataset_path, or
// made in memory (surrogate draws, or a small codec profile).
MeasurementDataset BuildDataset(const RunConfig& config);

struct CavRuntime {
  LocalizerMode mode;
  TrackerStates trackers;
  double last_rate_bps = std::numeric_limits<double>::quiet_NaN();
  double server_capacity = 1.0;
  double fading_log = std::numeric_limits<double>::quiet_NaN();
  Point3 last_position = Point3::Zero();
};

struct SimulationState {
  GlobalMap map;
  std::map<int, CavRuntime> cavs;
  int last_active_cavs = 0;
};

SimulationState InitialState(const PipelineContext& ctx);

// rf: RF value for latents, 0 for lossless geometry, -1 for a reuse delta.
struct ObjectRecord {
  int frame = 0;
  int cav_id = -1;
  int object_id = -1;
  int global_id = -1;
  int rf = 0;
  double raw_points = 0.0;
  double bytes = 0.0;
  double loss = 0.0;
};

struct CavFrameRecord {
  int frame = 0;
  int cav_id = -1;
  LatencyBreakdown latency;
  bool detection_mode = false;
  double localization_ms = 0.0;
  double bytes = 0.0;
  double uplink_bytes = 0.0;
  double rate_bps = 0.0;
  double predicted_rate_bps = 0.0;
  int detected = 0;
  int selected = 0;
  int transmitted = 0;
  int reused = 0;
  double loss_sum = 0.0;
  bool infeasible = false;
  std::vector<int> rfs;
  double lambda = 0.0;
  double probability = 1.0;
};

struct FrameResult {
  int frame = 0;
  double time = 0.0;
  std::vector<CavFrameRecord> cavs;
  std::vector<ObjectRecord> objects;
  std::vector<double> localization_errors_m;
  std::size_t map_objects = 0;
};

// One slot of the data and control planes followed by the server commit.
// Throws kFrameError (with the frame index) on inconsistent input.
FrameResult RunFrame(const TraceFrame& frame, SimulationState& state, const PipelineContext& ctx);

using FrameCallback = std::function<void(const FrameResult&)>;
std::vector<FrameResult> RunTrace(const std::vector<TraceFrame>& frames,
                                  const PipelineContext& ctx, const FrameCallback& on_frame = {});

// Loss of one object through the geometric codec: the visible surface is
// captured in the LiDAR frame, encoded, decoded, mapped to the global
// frame, and compared with a fresh ground-truth surface sample.
double MeasureCodecLoss(const Bbox3& box, const TransformMatrix& lidar_to_global,
                        std::size_t raw_points, RepresentationFactor rf, std::uint64_t seed,
                        double beta, PointCloud* decoded_out = nullptr);

// CAV ids selected for each object id under star-graph pruning, using the
// trace's shared view counts.
std::map<int, std::vector<int>> SelectForFrame(const TraceFrame& frame,
                                               const VisibilityModel& visibility,
                                               double threshold);

// Worker count from COPERC_WORKERS, default 1.
unsigned WorkersFromEnv();

// Splits [0, n) across workers; fn(i) must be safe to run concurrently.
void ParallelFor(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

}  // namespace coperc
