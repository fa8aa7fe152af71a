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
#include "coperc/tracking.h"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "coperc/errors.h"

namespace coperc {
namespace {

// Per-axis sd of an isotropic planar Gaussian with the given mean radius.
double AxisSigma(double mean_radial_error) {
  return mean_radial_error / std::sqrt(std::numbers::pi / 2.0);
}

Eigen::Matrix4d Transition(double dt) {
  Eigen::Matrix4d f = Eigen::Matrix4d::Identity();
  f(0, 2) = dt;
  f(1, 3) = dt;
  return f;
}

}  // namespace

KalmanState InitKalmanState(const Eigen::Vector2d& position, double time,
                            const KalmanConfig& config) {
  KalmanState s;
  s.x << position.x(), position.y(), 0.0, 0.0;
  s.P = Eigen::Vector4d(config.initial_position_var, config.initial_position_var,
                        config.initial_velocity_var, config.initial_velocity_var)
            .asDiagonal();
  s.last_update_time = time;
  return s;
}

Eigen::Matrix4d ProcessNoise(double dt, double q) {
  const double dt2 = dt * dt, dt3 = dt2 * dt;
  Eigen::Matrix4d m;
  m << dt3 / 3.0, 0.0, dt2 / 2.0, 0.0,
       0.0, dt3 / 3.0, 0.0, dt2 / 2.0,
       dt2 / 2.0, 0.0, dt, 0.0,
       0.0, dt2 / 2.0, 0.0, dt;
  return q * m;
}

KalmanState KalmanPredict(const KalmanState& s, double dt, double q) {
  if (!(dt >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "kalman predict needs dt >= 0");
  const Eigen::Matrix4d f = Transition(dt);
  KalmanState out;
  out.x = f * s.x;
  out.P = f * s.P * f.transpose() + ProcessNoise(dt, q);
  out.P = 0.5 * (out.P + out.P.transpose());
  out.last_update_time = s.last_update_time + dt;
  out.corrections = s.corrections;
  return out;
}

KalmanState KalmanCorrect(const KalmanState& s, const Eigen::Vector2d& observation,
                          double r_obs) {
  if (!observation.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "kalman observation must be finite");
  }
  Eigen::Matrix<double, 2, 4> h = Eigen::Matrix<double, 2, 4>::Zero();
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  const Eigen::Matrix2d r = r_obs * Eigen::Matrix2d::Identity();
  const Eigen::Matrix2d innovation_cov = h * s.P * h.transpose() + r;
  Eigen::FullPivLU<Eigen::Matrix2d> lu(innovation_cov);
  if (!lu.isInvertible()) return s;
  const Eigen::Matrix<double, 4, 2> gain = s.P * h.transpose() * lu.inverse();
  KalmanState out = s;
  out.x = s.x + gain * (observation - h * s.x);
  // Joseph form keeps P symmetric positive semi-definite.
  const Eigen::Matrix4d a = Eigen::Matrix4d::Identity() - gain * h;
  out.P = a * s.P * a.transpose() + gain * r * gain.transpose();
  out.P = 0.5 * (out.P + out.P.transpose());
  ++out.corrections;
  return out;
}

void DetectionOracleConfig::Validate() const {
  const bool ok = detector_error_m >= 0.0 && tracker_error_m >= 0.0 &&
                  miss_probability >= 0.0 && miss_probability <= 1.0 &&
                  detector_time_mean_ms > 0.0 && detector_time_sd_ms > 0.0 &&
                  tracker_time_mean_ms > 0.0 && tracker_time_sd_ms > 0.0;
  if (!ok) throw Error(ErrorCode::kInvalidArgument, "invalid detection oracle config");
}

LocalizationResult HybridLocalize(const std::vector<TruthObject>& truth,
                                  const LocalizerMode& mode, TrackerStates& states,
                                  double time, const TransformMatrix& local_to_global,
                                  const HybridLocalizerConfig& config, Rng& rng) {
  const DetectionOracleConfig& oracle = config.oracle;
  oracle.Validate();
  if (!(mode.rle_threshold_m > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "rle threshold must be positive");
  }
  const bool detection_active = mode.kind == LocalizerMode::Kind::kDetection;
  const double det_sigma = AxisSigma(oracle.detector_error_m);
  const double jitter_sigma =
      AxisSigma(std::max(0.0, oracle.tracker_error_m - oracle.detector_error_m));
  std::normal_distribution<double> det_noise(0.0, 1.0);
  std::bernoulli_distribution missed(oracle.miss_probability);

  LocalizationResult result;
  for (const TruthObject& obj : truth) {
    const Point3 truth_local = ToLocal(obj.box.center, local_to_global);
    const bool detected = !missed(rng);
    Point3 det_local = truth_local;
    det_local.x() += det_sigma * det_noise(rng);
    det_local.y() += det_sigma * det_noise(rng);
    const Point3 det_global = ToGlobal(det_local, local_to_global);

    auto it = states.find(obj.id);
    const bool exists = it != states.end();
    // one fix gives no velocity, so the tracker has nothing to offer yet
    const bool known = exists && it->second.corrections >= 1;
    std::optional<Point3> trk_global;
    KalmanState predicted;
    if (exists) {
      const double dt = std::max(0.0, time - it->second.last_update_time);
      predicted = KalmanPredict(it->second, dt, config.kalman.process_noise);
    }
    if (known) {
      const double jx = jitter_sigma * det_noise(rng);
      const double jy = jitter_sigma * det_noise(rng);
      trk_global = Point3(predicted.x(0) + jx, predicted.x(1) + jy, obj.box.center.z());
      if (detected) {
        const double rle = (trk_global->head<2>() - det_global.head<2>()).norm();
        result.max_rle_m = std::max(result.max_rle_m, rle);
      }
    }

    std::optional<Point3> output;
    bool output_from_detector = false;
    if (detection_active || !known) {
      if (detected) {
        output = det_global;
        output_from_detector = true;
      }
    } else {
      output = trk_global;
    }
    if (output) {
      Observation o;
      o.object_id = obj.id;
      o.global_position = *output;
      o.local_position = ToLocal(*output, local_to_global);
      o.box = obj.box;
      o.box.center = *output;
      o.from_detector = output_from_detector;
      result.observations.push_back(o);
    }

    if (detected) {
      const Eigen::Vector2d z = det_global.head<2>();
      states[obj.id] = exists ? KalmanCorrect(predicted, z, config.kalman.measurement_noise)
                            : InitKalmanState(z, time, config.kalman);
    }
  }

  for (auto it = states.begin(); it != states.end();) {
    if (time - it->second.last_update_time > config.retire_after_s) {
      it = states.erase(it);
    } else {
      ++it;
    }
  }

  result.used_detection = detection_active;
  result.next_mode = mode;
  result.next_mode.kind = result.max_rle_m < mode.rle_threshold_m
                              ? LocalizerMode::Kind::kTracking
                              : LocalizerMode::Kind::kDetection;
  const TruncatedNormal latency =
      detection_active
          ? TruncatedNormal::Matching(oracle.detector_time_mean_ms, oracle.detector_time_sd_ms)
          : TruncatedNormal::Matching(oracle.tracker_time_mean_ms, oracle.tracker_time_sd_ms);
  result.charged_latency_ms = latency(rng);
  return result;
}

std::optional<int> PredictiveMatch(const Eigen::Vector2d& observed,
                                   const std::vector<MatchCandidate>& candidates,
                                   double gate_m) {
  std::optional<int> best;
  double best_d2 = std::numeric_limits<double>::infinity();
  const double gate2 = gate_m * gate_m;
  for (const auto& c : candidates) {
    const double d2 = (observed - c.predicted).squaredNorm();
    if (d2 > gate2) continue;
    if (d2 < best_d2 || (d2 == best_d2 && best && c.id < *best)) {
      best_d2 = d2;
      best = c.id;
    }
  }
  return best;
}

}  // namespace coperc
