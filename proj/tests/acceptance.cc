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
// Acceptance report: one PASS/FAIL line per criterion. Exits non-zero when
// any criterion fails. argv[1] is the coperc executable (criterion 10).

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.h"

#include "coperc/codec.h"
#include "coperc/control.h"
#include "coperc/dataset.h"
#include "coperc/errors.h"
#include "coperc/geometry.h"
#include "coperc/metrics.h"
#include "coperc/pipeline.h"
#include "coperc/run_config.h"
#include "coperc/trace.h"
#include "coperc/tracking.h"

namespace coperc {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

int failures = 0;
std::map<int, std::string> lines;

void Report(int id, const std::string& name, bool pass, const std::string& detail) {
  char head[96];
  std::snprintf(head, sizeof(head), "criterion %2d: %s  ", id, pass ? "PASS" : "FAIL");
  lines[id] = head + name + " | " + detail;
  std::printf("%s\n", lines[id].c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string Fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string Fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

double Seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double Rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

PointCloud RandomCloud(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.emplace_back(u(rng), u(rng), u(rng));
  return c;
}

// 1. CD and EMD against brute-force oracles.
void MetricCorrectness() {
  const auto t0 = Clock::now();
  Rng rng(101);
  std::uniform_int_distribution<int> small(1, 8), large(9, 64);
  double worst_cd = 0.0, worst_enum = 0.0, worst_flow = 0.0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = static_cast<std::size_t>(i < 100 ? small(rng) : large(rng));
    const auto a = RandomCloud(n, rng);
    const auto b = RandomCloud(n, rng);
    worst_cd = std::max(worst_cd, Rel(ChamferDistance(a, b), oracle::BruteChamfer(a, b)));
    const double exact = EarthMoversDistanceExact(a, b);
    if (n <= 8) {
      worst_enum = std::max(worst_enum, Rel(exact, oracle::EnumeratedEmd(a, b)));
    } else {
      worst_flow = std::max(worst_flow, Rel(exact, oracle::FlowEmd(a, b)));
    }
  }
  double worst_auction = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto a = RandomCloud(64, rng);
    const auto b = RandomCloud(64, rng);
    worst_auction = std::max(worst_auction,
                             Rel(EarthMoversDistanceAuction(a, b), EarthMoversDistanceExact(a, b)));
  }
  const double secs = Seconds(t0);
  const bool pass = worst_cd <= 1e-9 && worst_enum <= 1e-9 && worst_flow <= 1e-9 &&
                    worst_auction <= 0.05 && secs < 30.0;
  Report(1, "metric correctness", pass,
         Fmt("max rel err CD %.1e, EMD(enum n<=8) %.1e, EMD(flow n<=64) %.1e [tol 1e-9]; "
             "auction %.2f%% [tol 5%%]; %.1f s [< 30 s]",
             worst_cd, worst_enum, worst_flow, 100 * worst_auction, secs));
}

// 2. Kalman gain and constant-velocity convergence.
void KalmanOracle() {
  KalmanState s;
  s.P = Eigen::Matrix4d::Identity();
  const auto post = KalmanCorrect(s, Eigen::Vector2d(2.0, -4.0), 1.0);
  const auto rx = oracle::ScalarKalmanUpdate({0.0, 1.0}, 2.0, 1.0);
  const auto ry = oracle::ScalarKalmanUpdate({0.0, 1.0}, -4.0, 1.0);
  const double gain_err = std::max({std::abs(post.x(0) - rx.mean), std::abs(post.x(1) - ry.mean),
                                    std::abs(post.P(0, 0) - rx.var)});

  // exact measurements of a constant-velocity target
  KalmanConfig cfg;
  const Eigen::Vector2d v(3.0, -1.5);
  auto truth = [&](double t) -> Eigen::Vector2d { return Eigen::Vector2d(1.0, 2.0) + v * t; };
  auto st = InitKalmanState(truth(0.0), 0.0, cfg);
  double err = 0.0;
  for (int k = 1; k <= 10; ++k) {
    st = KalmanCorrect(KalmanPredict(st, 0.1, cfg.process_noise), truth(0.1 * k), 0.0);
    err = (st.Position() - truth(0.1 * k)).norm();
  }
  Report(2, "kalman oracle", gain_err <= 1e-12 && err < 1e-6,
         Fmt("gain abs err %.1e [tol 1e-12]; CV position error after 10 steps %.1e [< 1e-6]",
             gain_err, err));
}

// 3. Hybrid localizer, Monte Carlo over 10^4 slots.
void HybridLocalization() {
  HybridLocalizerConfig cfg;
  Rng rng(303);
  std::uniform_real_distribution<double> pos(-40, 40), speed(5, 15), heading(-M_PI, M_PI);
  double err_sum = 0.0, charged = 0.0;
  std::size_t obs = 0, detect_slots = 0, slots = 0;
  // 100 episodes of 100 slots: 6 cars at constant velocity around one CAV
  for (int ep = 0; ep < 100; ++ep) {
    struct Car {
      Eigen::Vector2d p, v;
    };
    std::vector<Car> cars;
    for (int i = 0; i < 6; ++i) {
      const double h = heading(rng), s = speed(rng);
      cars.push_back({Eigen::Vector2d(pos(rng), pos(rng)), s * Eigen::Vector2d(std::cos(h), std::sin(h))});
    }
    TrackerStates states;
    LocalizerMode mode;
    Pose pose;
    pose.position = Point3(0, 0, 1.9);
    const TransformMatrix T = BuildTransform(pose);
    for (int k = 0; k < 100; ++k) {
      const double t = 0.1 * k;
      std::vector<TruthObject> truth;
      for (int i = 0; i < 6; ++i) {
        TruthObject o;
        o.id = i;
        const Eigen::Vector2d p = cars[i].p + cars[i].v * t;
        o.box.center = Point3(p.x(), p.y(), 0.75);
        o.box.extent = Eigen::Vector3d(4.5, 1.8, 1.5);
        o.box.yaw = std::atan2(cars[i].v.y(), cars[i].v.x());
        truth.push_back(o);
      }
      const auto r = HybridLocalize(truth, mode, states, t, T, cfg, rng);
      mode = r.next_mode;
      ++slots;
      if (r.used_detection) ++detect_slots;
      charged += r.charged_latency_ms;
      for (const auto& ob : r.observations) {
        err_sum += (ob.global_position.head<2>() - truth[ob.object_id].box.center.head<2>()).norm();
        ++obs;
      }
    }
  }
  const double mean_err = err_sum / obs;
  const double mean_ms = charged / slots;
  const double det = static_cast<double>(detect_slots) / slots;
  Report(3, "hybrid localization", mean_err >= 0.07 && mean_err <= 0.12 && mean_ms <= 3.0 && det < 0.25,
         Fmt("mean error %.4f m [0.07, 0.12]; charged %.2f ms [<= 3]; detection slots %.1f%% [< 25%%]; "
             "%zu slots",
             mean_err, mean_ms, 100 * det, slots));
}

// 4. Edge removal.
void SelectionTraces() {
  auto kept = [](std::vector<double> values) {
    std::vector<StarEdge> edges;
    for (std::size_t i = 0; i < values.size(); ++i) edges.push_back({static_cast<int>(i), values[i]});
    std::vector<double> out;
    for (const auto& e : PruneStarEdges(edges, 1024)) out.push_back(e.points);
    std::sort(out.begin(), out.end());
    return out;
  };
  const bool ex1 = kept({500, 400, 300}) == std::vector<double>{300, 400, 500};
  const bool ex2 = kept({800, 600, 400}) == std::vector<double>{600, 800};
  Rng rng(404);
  std::uniform_int_distribution<int> size(1, 6), value(0, 2048);
  int bad = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<StarEdge> edges;
    std::vector<int> raw;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) {
      raw.push_back(value(rng));
      edges.push_back({i, static_cast<double>(raw.back())});
    }
    double sum = 0.0;
    for (const auto& e : PruneStarEdges(edges, 1024)) sum += e.points;
    if (static_cast<long long>(sum) != oracle::BestSuffixSum(raw, 1024)) ++bad;
  }
  Report(4, "selection hand traces", ex1 && ex2 && bad == 0,
         Fmt("example {500,400,300} %s, {800,600,400} %s; suffix mismatches %d / 10000 [0]",
             ex1 ? "ok" : "wrong", ex2 ? "ok" : "wrong", bad));
}

struct Runs {
  std::vector<TraceFrame> trace;
  MeasurementDataset dataset;
  std::map<std::string, RunSummary> all;
  std::map<std::string, RunSummary> after10;
};

RunSummary Simulate(Runs& r, const std::string& key, RunConfig cfg) {
  const auto t0 = Clock::now();
  const auto res = RunTrace(r.trace, MakeContext(cfg, r.dataset, WorkersFromEnv()));
  r.all[key] = Summarize(res, cfg, COPERC_VERSION);
  r.after10[key] = SummarizeFrom(res, cfg, COPERC_VERSION, 10);
  const auto& s = r.all[key];
  std::printf("  run %-18s within H %.3f  mean loss %.4f  mean RF %.1f  bytes %.3g  (%.0f s)\n",
              key.c_str(), s.fraction_within_h, s.mean_loss, s.mean_rf, s.total_bytes, Seconds(t0));
  std::fflush(stdout);
  return s;
}

RunConfig Base(double bw, double h, std::uint64_t seed, Policy p = Policy::kAdamap) {
  RunConfig c;
  c.bandwidth_hz = bw;
  c.H_ms = h;
  c.seed = seed;
  c.policy = p;
  return c;
}

// 5, 6, 8, 11 on the 150-CAV, 100-frame trace.
void TraceCriteria() {
  Runs r;
  TraceGeneratorConfig g;  // 150 CAVs, 100 frames
  r.trace = GenerateTrace(g);
  r.dataset = BuildDataset(RunConfig{});
  const auto stats = ComputeTraceStats(r.trace);
  std::printf("  trace: %zu frames, %d CAVs, %.2f visible objects per CAV\n", r.trace.size(),
              stats.max_cavs, stats.mean_visible_per_cav);

  const auto t5 = Clock::now();
  const auto a200 = Simulate(r, "adamap-200k-s1", Base(200e3, 100, 1));
  const double t5s = Seconds(t5);
  Report(5, "optimizer feasibility", a200.fraction_within_h >= 0.85 && t5s < 180,
         Fmt("fraction within 100 ms %.3f [>= 0.85]; p99 %.1f ms; %.0f s [< 180 s]",
             a200.fraction_within_h, a200.latency_p99_ms, t5s));

  const auto a300 = Simulate(r, "adamap-300k-s1", Base(300e3, 100, 1));
  const auto b200 = Simulate(r, "adamap-200k-s2", Base(200e3, 100, 2));
  const auto b300 = Simulate(r, "adamap-300k-s2", Base(300e3, 100, 2));
  const bool rf_down = a200.mean_rf > a300.mean_rf && b200.mean_rf > b300.mean_rf;
  const double l200 = (a200.mean_loss + b200.mean_loss) / 2;
  const double l300 = (a300.mean_loss + b300.mean_loss) / 2;
  const double drop = (l200 - l300) / l200;
  Report(6, "bandwidth adaptivity", rf_down && drop >= 0.10,
         Fmt("mean RF 200k->300k: seed1 %.1f->%.1f, seed2 %.1f->%.1f [decrease]; "
             "mean loss %.4f->%.4f, drop %.1f%% [>= 10%%]",
             a200.mean_rf, a300.mean_rf, b200.mean_rf, b300.mean_rf, l200, l300, 100 * drop));

  const auto lossless = Simulate(r, "lossless-200k", Base(200e3, 100, 1, Policy::kSelectAllLossless));
  Simulate(r, "reuse-200k", Base(200e3, 100, 1, Policy::kAdamapReuse));
  const double ratio_a = a200.total_bytes / lossless.total_bytes;
  const double ratio_r = r.after10["reuse-200k"].total_bytes / r.after10["adamap-200k-s1"].total_bytes;
  Report(8, "transmission reduction", ratio_a <= 0.2 && ratio_r <= 0.2,
         Fmt("adamap/lossless bytes %.3f [<= 0.2]; reuse/adamap after frame 10 %.3f [<= 0.2]",
             ratio_a, ratio_r));

  std::vector<double> losses;
  std::string seq;
  for (double h : {60.0, 100.0, 200.0, 300.0}) {
    const double l = h == 100.0 ? a200.mean_loss
                                : Simulate(r, Fmt("adamap-H%.0f", h), Base(200e3, h, 1)).mean_loss;
    losses.push_back(l);
    seq += Fmt("%s%.4f", seq.empty() ? "" : ", ", l);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < losses.size(); ++i) monotone = monotone && losses[i] <= losses[i - 1];
  const double spread = losses.front() - losses.back();
  Report(11, "pareto direction", monotone && spread >= 0.05,
         Fmt("mean loss for H 60/100/200/300 ms: %s [non-increasing]; spread %.4f [>= 0.05]",
             seq.c_str(), spread));
}

// 7. Selection rate on the denser trace.
void SelectionRate() {
  TraceGeneratorConfig g;
  g.extent_m = 250.0;
  g.frames = 30;
  Runs r;
  r.trace = GenerateTrace(g);
  r.dataset = BuildDataset(RunConfig{});
  const auto stats = ComputeTraceStats(r.trace);
  const auto s = Simulate(r, "adamap-dense", Base(200e3, 100, 1));
  Report(7, "selection rate", s.selected_fraction >= 0.10 && s.selected_fraction <= 0.50,
         Fmt("selected fraction %.3f [0.10, 0.50]; %.2f visible objects per CAV; extent 250 m",
             s.selected_fraction, stats.mean_visible_per_cav));
}

// 9. Surrogate calibration.
void SurrogateCalibration() {
  const auto ds = SurrogateDataset(DefaultCalibration(), 10000, 909);
  const std::array<double, 5> want = {0.26, 0.32, 0.38, 0.46, 0.48};
  double worst = 0.0;
  std::string got;
  for (std::size_t r = 0; r < want.size(); ++r) {
    const int rf = RepresentationFactor::kDefaultSet[r];
    double sum = 0.0;
    std::size_t n = 0;
    for (int b = 0; b < ds.BucketCount(); ++b) {
      for (const auto& x : ds.Samples({rf, b})) {
        sum += x.loss;
        ++n;
      }
      worst = std::max(worst, std::abs(ds.MeanLoss({rf, b}) - want[r]));
    }
    got += Fmt("%s%d:%.4f", got.empty() ? "" : " ", rf, sum / n);
  }
  Report(9, "surrogate calibration", worst <= 0.02,
         Fmt("per-RF means %s; worst per-key deviation %.4f [<= 0.02]", got.c_str(), worst));
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int Shell(const std::string& cmd) {
  const int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// 10. Repeated CLI runs.
void Determinism(const std::string& bin) {
  const fs::path dir = fs::temp_directory_path() / Fmt("coperc_accept_%d", ::getpid());
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string q = "'" + bin + "'";
  const fs::path trace = dir / "trace.jsonl", ds = dir / "ds.json", cfg = dir / "cfg.json";
  bool ok = Shell(q + " gen-trace --cavs 60 --frames 15 --seed 10 --extent 200 --out " +
                  trace.string()) == 0 &&
            Shell(q + " profile --mode surrogate --samples 300 --out " + ds.string()) == 0;
  std::ofstream(cfg) << "{\"dataset_path\": \"" << ds.string() << "\"}\n";
  int compared = 0, differing = 0;
  for (const std::string policy :
       {"adamap", "adamap-lite", "adamap-reuse", "select-all-lossless", "blindspot-all"}) {
    const fs::path a = dir / (policy + "-a"), b = dir / (policy + "-b");
    const std::string cmd = q + " run --trace " + trace.string() + " --config " + cfg.string() +
                            " --policy " + policy + " --out ";
    ok = ok && Shell(cmd + a.string()) == 0 && Shell(cmd + b.string()) == 0;
    if (!ok) break;
    for (const auto& e : fs::directory_iterator(a)) {
      if (e.path().extension() != ".csv") continue;
      ++compared;
      if (Slurp(e.path()) != Slurp(b / e.path().filename())) ++differing;
    }
    if (Slurp(a / "summary.json") != Slurp(b / "summary.json")) ++differing;
  }
  fs::remove_all(dir);
  Report(10, "determinism", ok && compared > 0 && differing == 0,
         Fmt("%d CSV files over 5 policies, %d differing [0]%s", compared, differing,
             ok ? "" : "; a CLI command failed"));
}

}  // namespace
}  // namespace coperc

int main(int argc, char** argv) {
  using namespace coperc;
  if (argc < 2) {
    std::cerr << "usage: coperc_acceptance <path to coperc>\n";
    return 2;
  }
  const auto t0 = Clock::now();
  try {
    MetricCorrectness();
    KalmanOracle();
    HybridLocalization();
    SelectionTraces();
    SurrogateCalibration();
    Determinism(argv[1]);
    SelectionRate();
    TraceCriteria();
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("\nsummary\n");
  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  std::printf("%d criteria failed; %.0f s total\n", failures, Seconds(t0));
  return failures == 0 ? 0 : 1;
}
