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
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"

#include "coperc/errors.h"
#include "coperc/global_map.h"
#include "coperc/metrics.h"
#include "coperc/pipeline.h"
#include "coperc/run_config.h"
#include "coperc/trace.h"

namespace coperc {
namespace {

namespace fs = std::filesystem;

fs::path Scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("coperc_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

std::vector<TraceFrame> SmallTrace(int cavs, int frames, std::uint64_t seed = 3) {
  TraceGeneratorConfig g;
  g.cavs = cavs;
  g.frames = frames;
  g.seed = seed;
  g.extent_m = 200.0;
  return GenerateTrace(g);
}

std::vector<TraceFrame> FramesOf(const std::vector<TraceFrame>& all, std::size_t n) {
  return {all.begin(), all.begin() + static_cast<long>(std::min(n, all.size()))};
}

const MeasurementDataset& Dataset() {
  static const MeasurementDataset ds = [] {
    RunConfig c;
    c.dataset_samples = 400;
    return BuildDataset(c);
  }();
  return ds;
}

std::vector<FrameResult> Run(const std::vector<TraceFrame>& frames, RunConfig cfg) {
  return RunTrace(frames, MakeContext(cfg, Dataset()));
}

ObjectDescriptor RandomDescriptor(Rng& rng) {
  std::uniform_real_distribution<double> u(-500, 500);
  std::uniform_int_distribution<int> i(-1, 100000), pick(0, 4), len(0, 12);
  ObjectDescriptor d;
  d.cav_id = i(rng);
  d.local_id = i(rng);
  d.global_id = i(rng);
  d.location = Point3(u(rng), u(rng), u(rng));
  d.yaw = u(rng);
  d.box.center = Point3(u(rng), u(rng), u(rng));
  d.box.extent = Eigen::Vector3d(u(rng), u(rng), u(rng)).cwiseAbs();
  d.box.yaw = u(rng);
  d.label = std::string(static_cast<std::size_t>(len(rng)), 'a' + static_cast<char>(pick(rng)));
  d.confidence = std::abs(u(rng)) / 500.0;
  d.speed = std::abs(u(rng));
  d.trajectory = Eigen::Vector4d(u(rng), u(rng), u(rng), u(rng));
  d.raw_point_count = i(rng);
  d.timestamp = std::abs(u(rng));
  switch (pick(rng)) {
    case 0:
      d.delta_only = true;
      break;
    case 1:
      d.lossless_bytes = 6434;
      break;
    default: {
      Latent l;
      l.rf = RepresentationFactor(RepresentationFactor::kDefaultSet[pick(rng)]);
      l.source_point_count = i(rng);
      for (std::size_t k = 0; k < l.rf.LatentLength(); ++k) {
        l.payload.push_back(static_cast<float>(u(rng)));
      }
      d.latent = std::move(l);
    }
  }
  return d;
}

TEST_SUITE("simpipe") {

TEST_CASE("trace generation is deterministic") {
  const auto a = SmallTrace(10, 20);
  const auto b = SmallTrace(10, 20);
  REQUIRE(a.size() == 20);
  for (std::size_t f = 0; f < a.size(); ++f) CHECK(FrameToJsonLine(a[f]) == FrameToJsonLine(b[f]));
  const auto c = SmallTrace(10, 20, 4);
  CHECK(FrameToJsonLine(a[5]) != FrameToJsonLine(c[5]));

  const auto p1 = Scratch("t1.jsonl"), p2 = Scratch("t2.jsonl");
  WriteTrace(a, p1);
  WriteTrace(b, p2);
  std::ifstream f1(p1), f2(p2);
  const std::string s1((std::istreambuf_iterator<char>(f1)), {});
  const std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);
  const auto back = ReadTrace(p1);
  REQUIRE(back.size() == a.size());
  for (std::size_t f = 0; f < a.size(); ++f) CHECK(FrameToJsonLine(back[f]) == FrameToJsonLine(a[f]));
}

TEST_CASE("trace at full scale") {
  TraceGeneratorConfig g;
  const auto trace = GenerateTrace(g);
  REQUIRE(trace.size() == 100);
  for (std::size_t f = 0; f < trace.size(); ++f) {
    CHECK(trace[f].cavs.size() == 150);
    CHECK(trace[f].index == static_cast<int>(f));
    CHECK(trace[f].time == doctest::Approx(0.1 * f));
    for (const auto& c : trace[f].cavs) {
      for (const auto& o : c.objects) {
        if ((o.box.center - c.pose.position).head<2>().norm() > 50.0 + 1e-9) {
          FAIL("object beyond the visibility range");
        }
      }
    }
  }
  const auto stats = ComputeTraceStats(trace);
  CHECK(stats.mean_visible_per_cav >= 3.0);
  CHECK(stats.mean_visible_per_cav <= 30.0);
  CHECK(stats.max_cavs == 150);

  g.cavs = 1;
  g.frames = 5;
  const auto lone = GenerateTrace(g);
  CHECK(lone.size() == 5);
  CHECK(lone[0].cavs.size() == 1);
  CHECK(lone[0].cavs[0].objects.empty());
}

TEST_CASE("trace reader rejects bad input") {
  const auto good = SmallTrace(3, 3);
  const auto path = Scratch("bad.jsonl");
  {
    std::ofstream out(path);
    out << FrameToJsonLine(good[0]) << "\n{not json\n";
  }
  try {
    ReadTrace(path);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParseError);
  }
  {
    std::ofstream out(path);
    out << FrameToJsonLine(good[0]) << "\n" << FrameToJsonLine(good[2]) << "\n";
  }
  try {
    ReadTrace(path);
    FAIL("expected a frame error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kFrameError);
  }
  TraceFrame dup = good[0];
  dup.cavs.push_back(dup.cavs[0]);
  CHECK_THROWS_AS(dup.Validate(), Error);
  CHECK_THROWS_AS(ReadTrace(Scratch("missing.jsonl")), Error);
}

TEST_CASE("descriptor round trip") {
  Rng rng(17);
  for (int i = 0; i < 10000; ++i) {
    const auto d = RandomDescriptor(rng);
    const auto bytes = SerializeDescriptor(d);
    const auto back = ParseDescriptor(bytes);
    if (!SameDescriptor(d, back)) {
      FAIL("round trip changed descriptor " << i);
      break;
    }
  }
  const auto bytes = SerializeDescriptor(RandomDescriptor(rng));
  CHECK_THROWS_AS(ParseDescriptor(std::span(bytes).first(bytes.size() - 1)), Error);
  auto extra = bytes;
  extra.push_back(0);
  CHECK_THROWS_AS(ParseDescriptor(extra), Error);
  auto bad = bytes;
  bad[0] ^= 0xFF;
  CHECK_THROWS_AS(ParseDescriptor(bad), Error);
}

TEST_CASE("descriptor sizes") {
  ObjectDescriptor d;
  CHECK(DescriptorBytes(d) == 128.0);
  d.lossless_bytes = 6434;
  CHECK(DescriptorBytes(d) == 6562.0);
  d.lossless_bytes = 0;
  Latent l;
  l.rf = RepresentationFactor(16);
  l.payload.assign(64, 0.0f);
  d.latent = l;
  CHECK(DescriptorBytes(d) == 128.0 + 256.0);
  d.delta_only = true;
  CHECK(DescriptorBytes(d) == 32.0);
}

ObjectDescriptor At(double x, double y, bool geometry = true) {
  ObjectDescriptor d;
  d.location = Point3(x, y, 0);
  if (geometry) d.lossless_bytes = 100;
  return d;
}

TEST_CASE("global map matching, dedup and retirement") {
  GlobalMap map;
  auto a = At(0, 0), b = At(10, 0), a2 = At(0.4, 0);
  CHECK(map.Commit(a, 0.0, 0.3) == 0);
  CHECK(map.Commit(b, 0.0, 0.2) == 1);
  CHECK(map.Commit(a2, 0.1, 0.5) == 0);
  CHECK(map.size() == 2);
  CHECK(map.objects().at(0).reconstruction_loss == 0.5);
  // same slot keeps the better reconstruction
  auto a3 = At(0.41, 0);
  map.Commit(a3, 0.1, 0.9);
  CHECK(map.objects().at(0).reconstruction_loss == 0.5);
  auto far = At(100, 100);
  CHECK(map.Commit(far, 0.1) == 2);
  CHECK_FALSE(map.objects().at(2).has_reconstruction);

  // a delta is routed by its global id
  auto delta = At(10.2, 0, false);
  delta.delta_only = true;
  delta.global_id = 1;
  CHECK(map.Commit(delta, 0.2) == 1);

  map.Retire(2.05);
  CHECK(map.size() == 3);
  map.Retire(2.15);
  CHECK(map.size() == 1);
  CHECK(map.objects().count(1) == 1);

  GlobalMap twins;
  auto t1 = At(5, 5, false), t2 = At(5.05, 5);
  twins.Commit(t1, 0.0);
  // outside the match step: force a second object with a fresh map entry
  GlobalMapConfig tight;
  tight.gate_m = 0.01;
  GlobalMap m2(tight);
  m2.Commit(t1, 0.0);
  m2.Commit(t2, 0.0, 0.4);
  REQUIRE(m2.size() == 2);
  m2.Dedup(0.0);
  REQUIRE(m2.size() == 1);
  CHECK(m2.objects().begin()->first == 0);
  CHECK(m2.objects().begin()->second.has_reconstruction);
}

TEST_CASE("map never holds two objects within the dedup radius") {
  Rng rng(4);
  std::uniform_real_distribution<double> u(0, 30);
  GlobalMap map;
  for (int f = 0; f < 30; ++f) {
    const double t = 0.1 * f;
    for (int k = 0; k < 40; ++k) {
      auto d = At(u(rng), u(rng));
      map.Commit(d, t, 0.3);
    }
    map.Dedup(t);
    map.Retire(t);
    const auto pred = map.Predicted(t);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      for (std::size_t j = i + 1; j < pred.size(); ++j) {
        CHECK((pred[i].predicted - pred[j].predicted).norm() >= 0.1);
      }
    }
  }
}

TEST_CASE("reuse rule") {
  GlobalMap map;
  std::vector<ObjectDescriptor> first = {At(0, 0)};
  const auto out1 = ApplyReuse(first, map, 0.0);
  CHECK(out1[0].HasGeometry());
  CHECK_FALSE(out1[0].delta_only);
  map.Commit(first[0], 0.0, 0.3);

  const auto out2 = ApplyReuse({At(0.1, 0)}, map, 0.1);
  CHECK(out2[0].delta_only);
  CHECK(out2[0].global_id == 0);
  CHECK(DescriptorBytes(out2[0]) == 32.0);

  // predicted pose too far off
  const auto out3 = ApplyReuse({At(0.7, 0)}, map, 0.1);
  CHECK_FALSE(out3[0].delta_only);

  // no reconstruction held yet
  GlobalMap bare;
  auto g = At(0, 0, false);
  bare.Commit(g, 0.0);
  CHECK_FALSE(ApplyReuse({At(0, 0)}, bare, 0.1)[0].delta_only);
}

TEST_CASE("empty frame costs only the aggregated time") {
  TraceFrame f;
  f.index = 0;
  f.time = 0.0;
  TraceCav c;
  c.id = 7;
  c.pose.position = Point3(50, 0, 1.9);
  c.box.center = Point3(50, 0, 0.75);
  c.box.extent = Eigen::Vector3d(4.5, 1.8, 1.5);
  f.cavs.push_back(c);
  const auto r = Run({f}, RunConfig{});
  REQUIRE(r.size() == 1);
  REQUIRE(r[0].cavs.size() == 1);
  const auto& rec = r[0].cavs[0];
  CHECK(rec.bytes == 0.0);
  CHECK(rec.latency.uplink_ms == 0.0);
  CHECK(rec.latency.queue_ms == 0.0);
  CHECK(rec.latency.server_ms == 0.0);
  CHECK(rec.latency.total_ms == doctest::Approx(rec.latency.aggregated_ms));
}

TEST_CASE("lossless baseline sizes and losses") {
  const auto trace = FramesOf(SmallTrace(30, 5), 5);
  RunConfig cfg;
  cfg.policy = Policy::kSelectAllLossless;
  std::size_t n = 0;
  for (const auto& fr : Run(trace, cfg)) {
    for (const auto& o : fr.objects) {
      CHECK(o.bytes == 6434.0 + 128.0);
      CHECK(o.loss == 0.0);
      ++n;
    }
  }
  CHECK(n > 0);
  CHECK(Summarize(Run(trace, cfg), cfg, "test").mean_loss == 0.0);
}

TEST_CASE("lite policy sends every detection at RF 64") {
  const auto trace = FramesOf(SmallTrace(30, 5), 5);
  RunConfig cfg;
  cfg.policy = Policy::kAdamapLite;
  for (const auto& fr : Run(trace, cfg)) {
    for (const auto& c : fr.cavs) {
      CHECK(c.selected == c.detected);
      CHECK(c.transmitted == c.detected);
      for (int rf : c.rfs) CHECK(rf == 64);
    }
  }
}

TEST_CASE("adaptive policy keeps RFs in the set") {
  const auto trace = FramesOf(SmallTrace(40, 5), 5);
  RunConfig cfg;
  const auto res = Run(trace, cfg);
  std::size_t detected = 0, selected = 0;
  for (const auto& fr : res) {
    for (const auto& c : fr.cavs) {
      CHECK(c.selected <= c.detected);
      detected += c.detected;
      selected += c.selected;
      for (int rf : c.rfs) {
        CHECK(std::find(cfg.rf_set.begin(), cfg.rf_set.end(), rf) != cfg.rf_set.end());
      }
    }
  }
  const auto s = Summarize(res, cfg, "test");
  CHECK(s.selected_fraction == doctest::Approx(static_cast<double>(selected) / detected));
}

TEST_CASE("runs are reproducible") {
  const auto trace = FramesOf(SmallTrace(40, 8), 8);
  for (Policy p : {Policy::kAdamap, Policy::kAdamapReuse, Policy::kBlindspotAll}) {
    RunConfig cfg;
    cfg.policy = p;
    const auto a = Run(trace, cfg);
    const auto b = Run(trace, cfg);
    CHECK(FramesCsv(a) == FramesCsv(b));
    CHECK(ObjectsCsv(a) == ObjectsCsv(b));
    CHECK(SummaryJson(Summarize(a, cfg, "v")) == SummaryJson(Summarize(b, cfg, "v")));
  }
  // worker count does not change results
  RunConfig cfg;
  const auto one = RunTrace(trace, MakeContext(cfg, Dataset(), 1));
  const auto four = RunTrace(trace, MakeContext(cfg, Dataset(), 4));
  CHECK(FramesCsv(one) == FramesCsv(four));
}

TEST_CASE("malformed frame names its index") {
  auto trace = FramesOf(SmallTrace(5, 3), 3);
  trace[2].cavs.push_back(trace[2].cavs[0]);
  try {
    Run(trace, RunConfig{});
    FAIL("expected a frame error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kFrameError);
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("codec loss does not depend on the sensor pose") {
  Bbox3 car;
  car.center = Point3(20, 5, 0.75);
  car.extent = Eigen::Vector3d(4.5, 1.8, 1.5);
  car.yaw = 0.3;
  Pose straight, turned;
  straight.position = turned.position = Point3(0, 0, 1.9);
  turned.yaw = 2.0;
  turned.pitch = 0.05;
  double a = 0, b = 0;
  const int n = 12;
  for (int s = 0; s < n; ++s) {
    a += MeasureCodecLoss(car, BuildTransform(straight), 900, RepresentationFactor(4), s, 1e-4);
    b += MeasureCodecLoss(car, BuildTransform(turned), 900, RepresentationFactor(4), s, 1e-4);
  }
  CHECK(a / n == doctest::Approx(b / n).epsilon(0.1));
}

}  // TEST_SUITE

TEST_SUITE("metrics") {

TEST_CASE("nearest rank percentiles") {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  CHECK(NearestRankPercentile(v, 0.99) == 99.0);
  CHECK(NearestRankPercentile(v, 0.5) == 50.0);
  CHECK(NearestRankPercentile(v, 1.0) == 100.0);
  CHECK(NearestRankPercentile(std::vector<double>(7, 3.5), 0.9) == 3.5);
  CHECK_THROWS_AS(NearestRankPercentile({}, 0.5), Error);
  CHECK_THROWS_AS(NearestRankPercentile(v, 0.0), Error);
}

TEST_CASE("summary pools selection over frames") {
  std::vector<FrameResult> res(2);
  res[0].frame = 0;
  res[1].frame = 1;
  CavFrameRecord a, b;
  a.detected = 4;
  a.selected = 1;
  a.latency.total_ms = 40;
  b.detected = 6;
  b.selected = 3;
  b.latency.total_ms = 140;
  res[0].cavs = {a};
  res[1].cavs = {b};
  const auto s = Summarize(res, RunConfig{}, "v");
  CHECK(s.selected_fraction == doctest::Approx(0.4));
  CHECK(s.fraction_within_h == doctest::Approx(0.5));
  CHECK(s.latency_p99_ms == 140.0);
}

}  // TEST_SUITE

TEST_SUITE("run_config") {

TEST_CASE("config parsing is strict") {
  const auto c = RunConfigFromJson(R"({"bandwidth_hz": 300000, "H_ms": 60, "policy": "adamap-lite"})");
  CHECK(c.bandwidth_hz == 300000);
  CHECK(c.H_ms == 60);
  CHECK(c.policy == Policy::kAdamapLite);
  for (const char* bad : {R"({"bandwidth": 1})", R"({"H_ms": "fast"})", R"({"rf_set": [4, 5]})",
                          R"({"policy": "greedy"})", "[1, 2]", "{"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(RunConfigFromJson(bad), Error);
  }
  try {
    RunConfigFromJson(R"({"bogus_key": 1})");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParseError);
    CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
  }
  CHECK_THROWS_AS(RunConfigFromJson(R"({"p": 1.5})"), Error);
}

TEST_CASE("config JSON round trip") {
  RunConfig c;
  c.bandwidth_hz = 250e3;
  c.rf_set = {8, 32};
  c.share_mode = ShareMode::kRoundRobinTdma;
  c.policy = Policy::kBlindspotAll;
  c.seed = 99;
  c.rate_predictor = RatePredictor::kExperienced;
  const auto text = RunConfigToJson(c);
  CHECK(RunConfigToJson(RunConfigFromJson(text)) == text);
  for (Policy p : {Policy::kAdamap, Policy::kAdamapLite, Policy::kAdamapReuse,
                   Policy::kSelectAllLossless, Policy::kBlindspotAll}) {
    CHECK(ParsePolicy(PolicyName(p)) == p);
  }
}

}  // TEST_SUITE

}  // namespace
}  // namespace coperc
