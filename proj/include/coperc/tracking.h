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

#include <map>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "coperc/geometry.h"
#include "coperc/random.h"

namespace coperc {

// Constant-velocity planar state [X, Y, dX, dY].
struct KalmanState {
  Eigen::Vector4d x = Eigen::Vector4d::Zero();
  Eigen::Matrix4d P = Eigen::Matrix4d::Identity();
  double last_update_time = 0.0;
  int corrections = 0;

  Eigen::Vector2d Position() const { return x.head<2>(); }
  Eigen::Vector2d Velocity() const { return x.tail<2>(); }
};

struct KalmanConfig {
  double process_noise = 1.0;       // q, m^2/s^3
  double measurement_noise = 0.05;  // m^2 per axis
  double initial_position_var = 0.05;
  double initial_velocity_var = 25.0;
};

// New track at `position` with zero velocity.
KalmanState InitKalmanState(const Eigen::Vector2d& position, double time,
                            const KalmanConfig& config = {});

Eigen::Matrix4d ProcessNoise(double dt, double q);

// Throws kInvalidArgument for dt < 0.
KalmanState KalmanPredict(const KalmanState& s, double dt, double q = 1.0);
KalmanState KalmanCorrect(const KalmanState& s, const Eigen::Vector2d& observation,
                          double r_obs);

// Detector and tracker stand-ins. Noise magnitudes are mean Euclidean
// errors in the ground plane; times are truncated-normal mean/sd in ms.
struct DetectionOracleConfig {
  double detector_error_m = 0.07;
  double miss_probability = 0.02;
  double detector_time_mean_ms = 26.41;
  double detector_time_sd_ms = 4.73;
  // The tracker predicts from the detection history, so it inherits the
  // detector's error; its own jitter makes up the difference to this value.
  double tracker_error_m = 0.12;
  double tracker_time_mean_ms = 0.73;
  double tracker_time_sd_ms = 0.71;

  void Validate() const;
};

struct LocalizerMode {
  enum class Kind { kDetection, kTracking };
  Kind kind = Kind::kDetection;
  double rle_threshold_m = 0.5;
};

struct TruthObject {
  int id = -1;
  Bbox3 box;  // global frame
};

struct Observation {
  int object_id = -1;
  Point3 local_position = Point3::Zero();
  Point3 global_position = Point3::Zero();
  Bbox3 box;  // global frame, center replaced by the estimate
  bool from_detector = false;
};

// Per-CAV tracker bank, keyed by the CAV's local object id.
using TrackerStates = std::map<int, KalmanState>;

struct LocalizationResult {
  std::vector<Observation> observations;
  LocalizerMode next_mode;
  double charged_latency_ms = 0.0;
  double max_rle_m = 0.0;
  bool used_detection = false;  // the active mode this slot
};

struct HybridLocalizerConfig {
  DetectionOracleConfig oracle;
  KalmanConfig kalman;
  double retire_after_s = 2.0;
};

// One localization slot. Detection and tracking both run; the observations
// and the charged latency come from the active `mode`, and the relative
// localization error (max over objects seen by both) picks the next mode.
// `states` is updated with this slot's detections.
LocalizationResult HybridLocalize(const std::vector<TruthObject>& truth,
                                  const LocalizerMode& mode, TrackerStates& states,
                                  double time, const TransformMatrix& local_to_global,
                                  const HybridLocalizerConfig& config, Rng& rng);

struct MatchCandidate {
  int id = -1;
  Eigen::Vector2d predicted = Eigen::Vector2d::Zero();
};

inline constexpr double kDefaultMatchGate = 3.0;

// Argmin of squared distance to predicted positions within the gate; ties
// go to the smallest id.
std::optional<int> PredictiveMatch(const Eigen::Vector2d& observed,
                                   const std::vector<MatchCandidate>& candidates,
                                   double gate_m = kDefaultMatchGate);

}  // namespace coperc
