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
#include "coperc/global_map.h"

#include <bit>
#include <cmath>
#include <cstring>

#include "coperc/errors.h"

namespace coperc {
namespace {

static_assert(std::endian::native == std::endian::little, "wire format assumes little endian");

constexpr std::uint16_t kWireMagic = 0xAD0D;
constexpr std::uint8_t kWireVersion = 1;

class Writer {
 public:
  template <typename T>
  void Put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void PutVec(const Eigen::Vector3d& v) {
    for (int i = 0; i < 3; ++i) Put(v[i]);
  }
  std::vector<std::uint8_t> Take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  template <typename T>
  T Get() {
    if (pos_ + sizeof(T) > b_.size()) throw Error(ErrorCode::kParseError, "descriptor truncated");
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  Eigen::Vector3d GetVec() {
    Eigen::Vector3d v;
    for (int i = 0; i < 3; ++i) v[i] = Get<double>();
    return v;
  }
  std::string GetString(std::size_t n) {
    if (pos_ + n > b_.size()) throw Error(ErrorCode::kParseError, "descriptor truncated");
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool Done() const { return pos_ == b_.size(); }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

double GeometryBytes(const ObjectDescriptor& d) {
  if (d.delta_only) return 0.0;
  if (d.latent) return static_cast<double>(PayloadBytes(d.latent->rf));
  return d.lossless_bytes;
}

double DescriptorBytes(const ObjectDescriptor& d) {
  if (d.delta_only) return static_cast<double>(kReuseDeltaBytes);
  return static_cast<double>(kDescriptorOverheadBytes) + GeometryBytes(d);
}

std::vector<std::uint8_t> SerializeDescriptor(const ObjectDescriptor& d) {
  Writer w;
  w.Put(kWireMagic);
  w.Put(kWireVersion);
  const std::uint8_t flags = (d.latent ? 1 : 0) | (d.delta_only ? 2 : 0);
  w.Put(flags);
  w.Put<std::int32_t>(d.cav_id);
  w.Put<std::int32_t>(d.local_id);
  w.Put<std::int32_t>(d.global_id);
  w.PutVec(d.location);
  w.Put(d.yaw);
  w.PutVec(d.box.center);
  w.PutVec(d.box.extent);
  w.Put(d.box.yaw);
  if (d.label.size() > 0xFFFF) throw Error(ErrorCode::kInvalidArgument, "label too long");
  w.Put<std::uint16_t>(static_cast<std::uint16_t>(d.label.size()));
  for (char c : d.label) w.Put(c);
  w.Put(d.confidence);
  w.Put(d.speed);
  for (int i = 0; i < 4; ++i) w.Put(d.trajectory[i]);
  w.Put(d.lossless_bytes);
  w.Put<std::int32_t>(d.raw_point_count);
  w.Put(d.timestamp);
  if (d.latent) {
    w.Put<std::int32_t>(d.latent->rf.value());
    w.Put<std::int32_t>(d.latent->source_point_count);
    w.Put<std::uint32_t>(static_cast<std::uint32_t>(d.latent->payload.size()));
    for (float f : d.latent->payload) w.Put(f);
  }
  return w.Take();
}

ObjectDescriptor ParseDescriptor(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.Get<std::uint16_t>() != kWireMagic) throw Error(ErrorCode::kParseError, "bad descriptor magic");
  if (r.Get<std::uint8_t>() != kWireVersion) {
    throw Error(ErrorCode::kParseError, "unsupported descriptor version");
  }
  const auto flags = r.Get<std::uint8_t>();
  if (flags & ~3u) throw Error(ErrorCode::kParseError, "unknown descriptor flags");
  ObjectDescriptor d;
  d.delta_only = (flags & 2) != 0;
  d.cav_id = r.Get<std::int32_t>();
  d.local_id = r.Get<std::int32_t>();
  d.global_id = r.Get<std::int32_t>();
  d.location = r.GetVec();
  d.yaw = r.Get<double>();
  d.box.center = r.GetVec();
  d.box.extent = r.GetVec();
  d.box.yaw = r.Get<double>();
  d.label = r.GetString(r.Get<std::uint16_t>());
  d.confidence = r.Get<double>();
  d.speed = r.Get<double>();
  for (int i = 0; i < 4; ++i) d.trajectory[i] = r.Get<double>();
  d.lossless_bytes = r.Get<double>();
  d.raw_point_count = r.Get<std::int32_t>();
  d.timestamp = r.Get<double>();
  if (flags & 1) {
    Latent l;
    try {
      l.rf = RepresentationFactor(r.Get<std::int32_t>());
    } catch (const Error&) {
      throw Error(ErrorCode::kParseError, "descriptor carries an unknown RF");
    }
    l.source_point_count = r.Get<std::int32_t>();
    const auto n = r.Get<std::uint32_t>();
    if (n != l.rf.LatentLength()) throw Error(ErrorCode::kParseError, "latent length mismatch");
    l.payload.resize(n);
    for (auto& f : l.payload) f = r.Get<float>();
    d.latent = std::move(l);
  }
  if (!r.Done()) throw Error(ErrorCode::kParseError, "trailing bytes after descriptor");
  return d;
}

bool SameDescriptor(const ObjectDescriptor& a, const ObjectDescriptor& b) {
  auto same_latent = [](const std::optional<Latent>& x, const std::optional<Latent>& y) {
    if (x.has_value() != y.has_value()) return false;
    if (!x) return true;
    return x->rf == y->rf && x->source_point_count == y->source_point_count &&
           x->payload == y->payload;
  };
  return a.cav_id == b.cav_id && a.local_id == b.local_id && a.global_id == b.global_id &&
         a.location == b.location && a.yaw == b.yaw && a.box.center == b.box.center &&
         a.box.extent == b.box.extent && a.box.yaw == b.box.yaw && a.label == b.label &&
         a.confidence == b.confidence && a.speed == b.speed && a.trajectory == b.trajectory &&
         same_latent(a.latent, b.latent) && a.lossless_bytes == b.lossless_bytes &&
         a.raw_point_count == b.raw_point_count && a.timestamp == b.timestamp &&
         a.delta_only == b.delta_only;
}

Eigen::Vector2d GlobalMap::PositionAt(const MapObject& o, double time) const {
  const double dt = time - o.state.last_update_time;
  if (dt <= 0.0) return o.state.Position();
  return o.state.Position() + dt * o.state.Velocity();
}

std::vector<MatchCandidate> GlobalMap::Predicted(double time) const {
  std::vector<MatchCandidate> out;
  out.reserve(objects_.size());
  for (const auto& [id, o] : objects_) out.push_back({id, PositionAt(o, time)});
  return out;
}

std::optional<int> GlobalMap::Match(const Eigen::Vector2d& g, double time) const {
  return PredictiveMatch(g, Predicted(time), config_.gate_m);
}

int GlobalMap::Commit(ObjectDescriptor& d, double time, std::optional<double> loss,
                      PointCloud reconstruction) {
  const Eigen::Vector2d g = d.location.head<2>();
  std::optional<int> id;
  // a delta names its object; fall back to matching if it has retired
  if (d.delta_only && d.global_id >= 0 && objects_.count(d.global_id)) id = d.global_id;
  if (!id) id = Match(g, time);
  MapObject* o = nullptr;
  if (id) {
    o = &objects_.at(*id);
    const double dt = time - o->state.last_update_time;
    if (dt > 0.0) o->state = KalmanPredict(o->state, dt, config_.kalman.process_noise);
    o->state = KalmanCorrect(o->state, g, config_.kalman.measurement_noise);
  } else {
    id = next_id_++;
    o = &objects_[*id];
    o->id = *id;
    o->state = InitKalmanState(g, time, config_.kalman);
  }
  d.global_id = *id;
  o->last = d;
  o->last.latent.reset();  // only the reconstruction is kept
  o->last_seen = time;
  if (loss) {
    const bool same_slot = o->has_reconstruction && o->reconstruction_time == time;
    if (!same_slot || *loss < o->reconstruction_loss) {
      o->has_reconstruction = true;
      o->reconstruction_loss = *loss;
      o->reconstruction_time = time;
      o->reconstruction = std::move(reconstruction);
    }
  }
  return *id;
}

void GlobalMap::Retire(double time) {
  for (auto it = objects_.begin(); it != objects_.end();) {
    if (time - it->second.last_seen > config_.retire_after_s + 1e-9) {
      it = objects_.erase(it);
    } else {
      ++it;
    }
  }
}

void GlobalMap::Dedup(double time) {
  const double lim2 = config_.dedup_m * config_.dedup_m;
  for (auto a = objects_.begin(); a != objects_.end(); ++a) {
    const Eigen::Vector2d pa = PositionAt(a->second, time);
    for (auto b = std::next(a); b != objects_.end();) {
      if ((PositionAt(b->second, time) - pa).squaredNorm() < lim2) {
        if (!a->second.has_reconstruction && b->second.has_reconstruction) {
          a->second.has_reconstruction = true;
          a->second.reconstruction_loss = b->second.reconstruction_loss;
          a->second.reconstruction_time = b->second.reconstruction_time;
          a->second.reconstruction = std::move(b->second.reconstruction);
        }
        a->second.last_seen = std::max(a->second.last_seen, b->second.last_seen);
        b = objects_.erase(b);
      } else {
        ++b;
      }
    }
  }
}

std::optional<int> ReusableObject(const Point3& location, const GlobalMap& map, double time,
                                  double max_error_m) {
  const Eigen::Vector2d g = location.head<2>();
  const auto id = map.Match(g, time);
  if (!id) return std::nullopt;
  const auto& o = map.objects().at(*id);
  if (!o.has_reconstruction) return std::nullopt;
  const Eigen::Vector2d pred =
      o.state.Position() + std::max(0.0, time - o.state.last_update_time) * o.state.Velocity();
  if ((pred - g).norm() >= max_error_m) return std::nullopt;
  return id;
}

std::vector<ObjectDescriptor> ApplyReuse(std::vector<ObjectDescriptor> descriptors,
                                         const GlobalMap& map, double time, double max_error_m) {
  for (auto& d : descriptors) {
    if (!d.HasGeometry()) continue;
    if (const auto id = ReusableObject(d.location, map, time, max_error_m)) {
      d.latent.reset();
      d.lossless_bytes = 0.0;
      d.delta_only = true;
      d.global_id = *id;
    }
  }
  return descriptors;
}

}  // namespace coperc
