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
#include "coperc/trace.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "json.hpp"

#include "coperc/errors.h"
#include "coperc/random.h"

namespace coperc {
namespace {

using nlohmann::json;

// One vehicle on the road grid.
struct Mover {
  int axis = 0;      // 0 drives along x, 1 along y
  double road = 0.0;  // fixed coordinate of the road
  int dir = 1;
  double s = 0.0;  // coordinate along the road
  double speed = 10.0;
  Eigen::Vector3d dims{4.5, 1.8, 1.5};
};

Point3 GroundPosition(const Mover& m, double lane) {
  // drive on the right
  if (m.axis == 0) return {m.s, m.road - m.dir * lane, 0.0};
  return {m.road + m.dir * lane, m.s, 0.0};
}

double Heading(const Mover& m) {
  if (m.axis == 0) return m.dir > 0 ? 0.0 : -std::numbers::pi;
  return m.dir > 0 ? std::numbers::pi / 2 : -std::numbers::pi / 2;
}

class Grid {
 public:
  explicit Grid(const TraceGeneratorConfig& c)
      : half_(c.extent_m / 2.0), spacing_(c.road_spacing_m) {
    for (double v = -half_; v <= half_ + 1e-9; v += spacing_) lines_.push_back(v);
  }
  const std::vector<double>& lines() const { return lines_; }
  double half() const { return half_; }

  // First road crossing strictly after s0 and up to s1 along dir.
  bool NextCrossing(double s0, double s1, int dir, double* at) const {
    if (dir > 0) {
      for (double v : lines_) {
        if (v > s0 && v <= s1) {
          *at = v;
          return true;
        }
      }
    } else {
      for (auto it = lines_.rbegin(); it != lines_.rend(); ++it) {
        if (*it < s0 && *it >= s1) {
          *at = *it;
          return true;
        }
      }
    }
    return false;
  }

 private:
  double half_;
  double spacing_;
  std::vector<double> lines_;
};

void Advance(Mover& m, double dt, const Grid& grid, const TraceGeneratorConfig& c, Rng& rng) {
  double remaining = m.speed * dt;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  while (remaining > 0.0) {
    const double target = m.s + m.dir * remaining;
    double at = 0.0;
    if (!grid.NextCrossing(m.s, target, m.dir, &at)) {
      m.s = target;
      return;
    }
    remaining -= std::abs(at - m.s);
    m.s = at;
    // options at the intersection: straight, or either turn
    struct Option {
      int axis, dir;
      double road, s, weight;
    };
    std::vector<Option> opts;
    const double edge = grid.half() - 1e-9;
    if (std::abs(at) < edge) opts.push_back({m.axis, m.dir, m.road, at, 1.0 - c.turn_probability});
    for (int d : {-1, 1}) {
      if (std::abs(m.road) < edge || m.road * d < 0) {
        opts.push_back({1 - m.axis, d, at, m.road, c.turn_probability / 2.0});
      }
    }
    if (opts.empty()) {  // dead end, turn around
      m.dir = -m.dir;
      continue;
    }
    double total = 0.0;
    for (const auto& o : opts) total += o.weight;
    double pick = u(rng) * total;
    const Option* chosen = &opts.back();
    for (const auto& o : opts) {
      if (pick < o.weight) {
        chosen = &o;
        break;
      }
      pick -= o.weight;
    }
    m.axis = chosen->axis;
    m.dir = chosen->dir;
    m.road = chosen->road;
    m.s = chosen->s;
    if (u(rng) < c.speed_change_probability) {
      m.speed = c.min_speed_mps + u(rng) * (c.max_speed_mps - c.min_speed_mps);
    }
  }
}

json BoxJson(const Bbox3& b) {
  return json::array({b.center.x(), b.center.y(), b.center.z(), b.extent.x(), b.extent.y(),
                      b.extent.z(), b.yaw});
}

Bbox3 BoxFromJson(const json& j) {
  if (!j.is_array() || j.size() != 7) throw Error(ErrorCode::kParseError, "box needs 7 numbers");
  Bbox3 b;
  b.center = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  b.extent = {j[3].get<double>(), j[4].get<double>(), j[5].get<double>()};
  b.yaw = j[6].get<double>();
  return b;
}

}  // namespace

void TraceFrame::Validate() const {
  std::set<int> ids;
  for (const auto& c : cavs) {
    if (!ids.insert(c.id).second) {
      throw Error(ErrorCode::kFrameError,
                  "frame " + std::to_string(index) + ": duplicate CAV id " + std::to_string(c.id));
    }
    std::set<int> objs;
    try {
      c.box.Validate();
      if (!c.pose.position.allFinite() || !std::isfinite(c.pose.yaw) ||
          !std::isfinite(c.pose.pitch) || !std::isfinite(c.pose.roll)) {
        throw Error(ErrorCode::kInvalidArgument, "pose not finite");
      }
      for (const auto& o : c.objects) {
        if (!objs.insert(o.id).second) throw Error(ErrorCode::kInvalidArgument, "duplicate object");
        o.box.Validate();
        if (!(o.point_count >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "bad point count");
      }
    } catch (const Error& e) {
      throw Error(ErrorCode::kFrameError, "frame " + std::to_string(index) + ", CAV " +
                                              std::to_string(c.id) + ": " + e.what());
    }
  }
}

void TraceGeneratorConfig::Validate() const {
  if (cavs < 1 || frames < 1 || !(extent_m > 0.0) || !(road_spacing_m > 0.0) ||
      road_spacing_m > extent_m || !(min_speed_mps > 0.0) || max_speed_mps < min_speed_mps ||
      turn_probability < 0.0 || turn_probability > 1.0 || point_noise_sigma < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "trace generator configuration out of range");
  }
}

std::vector<TraceFrame> GenerateTrace(const TraceGeneratorConfig& config) {
  config.Validate();
  const Grid grid(config);
  const auto& lines = grid.lines();
  std::vector<Mover> movers(config.cavs);
  std::vector<Rng> motion;
  for (int i = 0; i < config.cavs; ++i) {
    Rng rng(DeriveSeed(config.seed, {1, static_cast<std::uint64_t>(i)}));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto& m = movers[i];
    m.axis = u(rng) < 0.5 ? 0 : 1;
    m.road = lines[std::min(lines.size() - 1, static_cast<std::size_t>(u(rng) * lines.size()))];
    m.dir = u(rng) < 0.5 ? -1 : 1;
    m.s = -grid.half() + u(rng) * config.extent_m;
    m.speed = config.min_speed_mps + u(rng) * (config.max_speed_mps - config.min_speed_mps);
    m.dims = {4.2 + 0.6 * u(rng), 1.7 + 0.2 * u(rng), 1.4 + 0.2 * u(rng)};
    motion.push_back(rng);
  }

  std::vector<TraceFrame> frames;
  frames.reserve(config.frames);
  for (int f = 0; f < config.frames; ++f) {
    if (f > 0) {
      for (int i = 0; i < config.cavs; ++i) {
        Advance(movers[i], kFramePeriodS, grid, config, motion[i]);
      }
    }
    TraceFrame frame;
    frame.index = f;
    frame.time = f * kFramePeriodS;
    frame.cavs.resize(config.cavs);
    for (int i = 0; i < config.cavs; ++i) {
      const auto& m = movers[i];
      auto& c = frame.cavs[i];
      c.id = i;
      const Point3 ground = GroundPosition(m, config.lane_offset_m);
      c.pose.position = ground + Point3(0.0, 0.0, config.lidar_height_m);
      c.pose.yaw = WrapAngle(Heading(m));
      c.box.center = ground + Point3(0.0, 0.0, m.dims.z() / 2.0);
      c.box.extent = m.dims;
      c.box.yaw = c.pose.yaw;
    }
    for (int i = 0; i < config.cavs; ++i) {
      auto& c = frame.cavs[i];
      Rng noise(DeriveSeed(config.seed,
                           {2, static_cast<std::uint64_t>(f), static_cast<std::uint64_t>(i)}));
      std::normal_distribution<double> z(0.0, config.point_noise_sigma);
      for (int j = 0; j < config.cavs; ++j) {
        if (j == i) continue;
        const Bbox3& box = frame.cavs[j].box;
        const double d = (box.center - c.pose.position).norm();
        if (d > config.visibility.range_m) continue;
        // vehicles drawn on top of each other carry no usable view
        if (box.Contains(c.pose.position) || c.box.Contains(box.center)) continue;
        const double n = PredictVisiblePoints(box, c.pose.position, config.visibility);
        const double noisy = std::round(n * std::exp(z(noise)));
        if (noisy < 1.0) continue;
        c.objects.push_back({j, box, noisy, ""});
      }
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

std::string FrameToJsonLine(const TraceFrame& frame) {
  json cavs = json::array();
  for (const auto& c : frame.cavs) {
    json objs = json::array();
    for (const auto& o : c.objects) {
      json jo = {{"id", o.id}, {"box", BoxJson(o.box)}, {"points", o.point_count}};
      if (!o.cloud_ref.empty()) jo["cloud"] = o.cloud_ref;
      objs.push_back(std::move(jo));
    }
    const auto& p = c.pose;
    cavs.push_back({{"id", c.id},
                    {"pose", json::array({p.position.x(), p.position.y(), p.position.z(), p.pitch,
                                          p.roll, p.yaw})},
                    {"box", BoxJson(c.box)},
                    {"objects", std::move(objs)}});
  }
  const json j = {{"frame", frame.index}, {"time", frame.time}, {"cavs", std::move(cavs)}};
  return j.dump();
}

TraceFrame FrameFromJsonLine(const std::string& line) {
  TraceFrame f;
  try {
    const json j = json::parse(line);
    f.index = j.at("frame").get<int>();
    f.time = j.at("time").get<double>();
    for (const auto& jc : j.at("cavs")) {
      TraceCav c;
      c.id = jc.at("id").get<int>();
      const auto& p = jc.at("pose");
      if (!p.is_array() || p.size() != 6) throw Error(ErrorCode::kParseError, "pose needs 6 numbers");
      c.pose.position = {p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
      c.pose.pitch = p[3].get<double>();
      c.pose.roll = p[4].get<double>();
      c.pose.yaw = p[5].get<double>();
      c.box = BoxFromJson(jc.at("box"));
      for (const auto& jo : jc.at("objects")) {
        TraceObject o;
        o.id = jo.at("id").get<int>();
        o.box = BoxFromJson(jo.at("box"));
        o.point_count = jo.at("points").get<double>();
        if (jo.contains("cloud")) o.cloud_ref = jo["cloud"].get<std::string>();
        c.objects.push_back(std::move(o));
      }
      f.cavs.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("trace record: ") + e.what());
  }
  return f;
}

void WriteTrace(const std::vector<TraceFrame>& frames, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  for (const auto& f : frames) out << FrameToJsonLine(f) << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

std::vector<TraceFrame> ReadTrace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::vector<TraceFrame> frames;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    TraceFrame f;
    try {
      f = FrameFromJsonLine(line);
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!frames.empty()) {
      const double dt = f.time - frames.back().time;
      if (f.index != frames.back().index + 1 || std::abs(dt - kFramePeriodS) > 1e-6) {
        throw Error(ErrorCode::kFrameError,
                    "frame " + std::to_string(f.index) + ": expected a 0.1 s step after frame " +
                        std::to_string(frames.back().index));
      }
    }
    f.Validate();
    frames.push_back(std::move(f));
  }
  if (frames.empty()) throw Error(ErrorCode::kParseError, path.string() + " holds no frames");
  return frames;
}

TraceStats ComputeTraceStats(const std::vector<TraceFrame>& frames) {
  TraceStats s;
  s.frames = static_cast<int>(frames.size());
  double visible = 0.0;
  double cav_frames = 0.0;
  for (const auto& f : frames) {
    s.max_cavs = std::max<int>(s.max_cavs, static_cast<int>(f.cavs.size()));
    std::set<int> distinct;
    for (const auto& c : f.cavs) {
      visible += static_cast<double>(c.objects.size());
      cav_frames += 1.0;
      for (const auto& o : c.objects) distinct.insert(o.id);
    }
    ++s.objects_per_frame[static_cast<int>(distinct.size())];
  }
  s.mean_visible_per_cav = cav_frames > 0 ? visible / cav_frames : 0.0;
  return s;
}

std::string TraceStatsJson(const TraceStats& stats, const TraceGeneratorConfig& config) {
  json hist = json::object();
  for (const auto& [n, count] : stats.objects_per_frame) hist[std::to_string(n)] = count;
  const json j = {{"frames", stats.frames},
                  {"cavs", stats.max_cavs},
                  {"seed", config.seed},
                  {"extent_m", config.extent_m},
                  {"mean_visible_per_cav", stats.mean_visible_per_cav},
                  {"objects_per_frame_histogram", hist}};
  return j.dump(2) + "\n";
}

}  // namespace coperc
