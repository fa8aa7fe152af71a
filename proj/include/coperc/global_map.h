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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coperc/codec.h"
#include "coperc/geometry.h"
#include "coperc/tracking.h"

namespace coperc {

// Pose and speed refresh for an object whose geometry is reused.
inline constexpr std::size_t kReuseDeltaBytes = 32;

struct ObjectDescriptor {
  int cav_id = -1;
  int local_id = -1;
  int global_id = -1;  // -1 until matched
  Point3 location = Point3::Zero();
  double yaw = 0.0;
  Bbox3 box;
  std::string label = "car";
  double confidence = 1.0;
  double speed = 0.0;
  Eigen::Vector4d trajectory = Eigen::Vector4d::Zero();
  std::optional<Latent> latent;
  // Lossless payload for baselines that send compressed raw points.
  double lossless_bytes = 0.0;
  int raw_point_count = 0;
  double timestamp = 0.0;
  bool delta_only = false;

  bool HasGeometry() const { return latent.has_value() || lossless_bytes > 0.0; }
};

// Accounted size: 32 B for a delta, otherwise header plus geometry.
double DescriptorBytes(const ObjectDescriptor& d);
// Geometry bytes only (latent payload or lossless blob).
double GeometryBytes(const ObjectDescriptor& d);

std::vector<std::uint8_t> SerializeDescriptor(const ObjectDescriptor& d);
// Throws kParseError on truncated or malformed input.
ObjectDescriptor ParseDescriptor(std::span<const std::uint8_t> bytes);
bool SameDescriptor(const ObjectDescriptor& a, const ObjectDescriptor& b);

struct MapObject {
  int id = -1;
  KalmanState state;
  ObjectDescriptor last;
  bool has_reconstruction = false;
  double reconstruction_loss = 0.0;
  double reconstruction_time = -1.0;
  PointCloud reconstruction;  // filled in codec mode only
  double last_seen = 0.0;
};

struct GlobalMapConfig {
  double gate_m = kDefaultMatchGate;
  double retire_after_s = 2.0;
  double dedup_m = 0.1;
  KalmanConfig kalman;
};

class GlobalMap {
 public:
  explicit GlobalMap(GlobalMapConfig config = {}) : config_(config) {}

  const std::map<int, MapObject>& objects() const { return objects_; }
  std::size_t size() const { return objects_.size(); }
  const GlobalMapConfig& config() const { return config_; }

  // Live objects with positions predicted to `time` (no mutation).
  std::vector<MatchCandidate> Predicted(double time) const;
  std::optional<int> Match(const Eigen::Vector2d& g, double time) const;

  // Matches or creates, then corrects the object's track. Sets d.global_id
  // and returns it. Geometry replaces the stored reconstruction, keeping the
  // lowest loss among same-time updates.
  int Commit(ObjectDescriptor& d, double time, std::optional<double> loss = std::nullopt,
             PointCloud reconstruction = {});

  // Drops objects unseen for longer than retire_after_s.
  void Retire(double time);
  // Merges objects closer than dedup_m (higher id folds into lower).
  void Dedup(double time);

 private:
  Eigen::Vector2d PositionAt(const MapObject& o, double time) const;

  GlobalMapConfig config_;
  std::map<int, MapObject> objects_;
  int next_id_ = 0;
};

// Global id whose stored geometry can stand in for this observation.
std::optional<int> ReusableObject(const Point3& location, const GlobalMap& map, double time,
                                  double max_error_m = 0.5);

// Strips latents the map can already reconstruct; those become 32-byte
// deltas carrying the matched global id.
std::vector<ObjectDescriptor> ApplyReuse(std::vector<ObjectDescriptor> descriptors,
                                         const GlobalMap& map, double time,
                                         double max_error_m = 0.5);

}  // namespace coperc
