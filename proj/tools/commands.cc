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
#include "commands.h"

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "json.hpp"

#include "coperc/dataset.h"
#include "coperc/errors.h"
#include "coperc/metrics.h"
#include "coperc/pipeline.h"
#include "coperc/run_config.h"
#include "coperc/trace.h"

namespace coperc::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

// Output written under a sibling staging path and renamed into place once
// complete, so readers never see a half-written result.
class StagedOutput {
 public:
  StagedOutput(fs::path target, bool force, bool directory) : target_(std::move(target)) {
    if (target_.empty()) throw Error(ErrorCode::kIoError, "missing --out");
    std::error_code ec;
    if (fs::exists(target_, ec) && !force) {
      throw Error(ErrorCode::kIoError, target_.string() + " exists (pass --force to replace)");
    }
    const fs::path parent = target_.parent_path().empty() ? fs::path(".") : target_.parent_path();
    fs::create_directories(parent, ec);
    if (ec) throw Error(ErrorCode::kIoError, "cannot create " + parent.string());
    staging_ = parent / ("." + target_.filename().string() + ".tmp-" + std::to_string(getpid()));
    fs::remove_all(staging_, ec);
    if (directory) {
      fs::create_directories(staging_, ec);
      if (ec) throw Error(ErrorCode::kIoError, "cannot create " + staging_.string());
    } else {
      std::ofstream probe(staging_);
      if (!probe) throw Error(ErrorCode::kIoError, "cannot write " + staging_.string());
    }
  }
  StagedOutput(const StagedOutput&) = delete;
  StagedOutput& operator=(const StagedOutput&) = delete;
  ~StagedOutput() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(staging_, ec);
    }
  }

  const fs::path& path() const { return staging_; }

  void Commit() {
    std::error_code ec;
    fs::remove_all(target_, ec);
    fs::rename(staging_, target_, ec);
    if (ec) throw Error(ErrorCode::kIoError, "cannot move output to " + target_.string());
    committed_ = true;
  }

 private:
  fs::path target_;
  fs::path staging_;
  bool committed_ = false;
};

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

std::string Version() { return COPERC_VERSION; }

ordered_json Manifest(const std::string& command, std::uint64_t seed) {
  ordered_json m;
  m["command"] = command;
  m["seed"] = seed;
  m["version"] = Version();
  return m;
}

RunConfig BaseConfig(const fs::path& path) {
  if (path.empty()) return RunConfig{};
  if (!fs::exists(path)) throw Error(ErrorCode::kIoError, "no such config " + path.string());
  return LoadRunConfig(path);
}

std::vector<TraceFrame> LoadTrace(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::kIoError, "no such trace " + path.string());
  return ReadTrace(path);
}

std::vector<FrameResult> Execute(const std::vector<TraceFrame>& trace, const RunConfig& config,
                                 unsigned workers) {
  const MeasurementDataset dataset = BuildDataset(config);
  PipelineContext ctx = MakeContext(config, dataset, workers);
  std::size_t infeasible = 0;
  auto results = RunTrace(trace, ctx, [&](const FrameResult& f) {
    for (const auto& c : f.cavs) infeasible += c.infeasible ? 1 : 0;
  });
  if (infeasible > 0) {
    std::cerr << "note: " << infeasible << " CAV-frames infeasible at the latency target\n";
  }
  return results;
}

// Accepts plain numbers with an optional k or M suffix.
double ParseValue(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParseError, "bad sweep value '" + text + "'");
  }
  const std::string rest = text.substr(used);
  if (rest == "k" || rest == "K") {
    v *= 1e3;
  } else if (rest == "M") {
    v *= 1e6;
  } else if (!rest.empty()) {
    throw Error(ErrorCode::kParseError, "bad sweep value '" + text + "'");
  }
  return v;
}

std::vector<std::pair<std::string, double>> SummaryMetrics(const RunSummary& s) {
  const double cav_frames = static_cast<double>(std::max<std::size_t>(s.cav_frames, 1));
  return {
      {"fraction_within_H", s.fraction_within_h},
      {"latency_p50_ms", s.latency_p50_ms},
      {"latency_p90_ms", s.latency_p90_ms},
      {"latency_p95_ms", s.latency_p95_ms},
      {"latency_p99_ms", s.latency_p99_ms},
      {"latency_mean_ms", s.latency_mean_ms},
      {"mean_loss", s.mean_loss},
      {"mean_rf", s.mean_rf},
      {"selected_fraction", s.selected_fraction},
      {"total_bytes", s.total_bytes},
      {"infeasible_fraction", static_cast<double>(s.infeasible_cav_frames) / cav_frames},
  };
}

std::string Num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

int ExitCodeFor(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kProfileIncomplete:
    case ErrorCode::kDatasetMiss:
      return kExitProfileIncomplete;
    case ErrorCode::kParseError:
    case ErrorCode::kFrameError:
    case ErrorCode::kIoError:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kCalibrationError:
      return kExitInput;
    default:
      return kExitInternal;
  }
}

int GenTrace(const GenTraceArgs& args) {
  TraceGeneratorConfig config;
  config.cavs = args.cavs;
  config.frames = args.frames;
  config.seed = args.seed;
  if (args.extent_m > 0.0) config.extent_m = args.extent_m;
  if (args.spacing_m > 0.0) config.road_spacing_m = args.spacing_m;
  const auto frames = GenerateTrace(config);

  fs::path stats_path = args.out;
  stats_path += ".stats.json";
  StagedOutput trace_out(args.out, args.force, false);
  StagedOutput stats_out(stats_path, args.force, false);
  WriteTrace(frames, trace_out.path());
  auto stats = ordered_json::parse(TraceStatsJson(ComputeTraceStats(frames), config));
  stats["version"] = Version();
  WriteText(stats_out.path(), stats.dump(2) + "\n");
  trace_out.Commit();
  stats_out.Commit();
  std::cout << "wrote " << frames.size() << " frames to " << args.out.string() << "\n";
  return kExitOk;
}

int Profile(const ProfileArgs& args) {
  if (args.samples < 1) throw Error(ErrorCode::kInvalidArgument, "--samples must be >= 1");
  MeasurementDataset dataset;
  if (args.mode == "surrogate") {
    dataset = SurrogateDataset(DefaultCalibration(), static_cast<std::size_t>(args.samples),
                               args.seed);
  } else if (args.mode == "codec") {
    ProfileOptions opt;
    opt.clouds_per_bucket = static_cast<std::size_t>(args.samples);
    opt.seed = args.seed;
    opt.workers = WorkersFromEnv();
    dataset = ProfileCodec(DefaultCloudGenerator(), opt);
  } else {
    throw Error(ErrorCode::kParseError, "unknown --mode '" + args.mode + "'");
  }
  fs::path manifest_path = args.out;
  manifest_path += ".manifest.json";
  StagedOutput data_out(args.out, args.force, false);
  StagedOutput manifest_out(manifest_path, args.force, false);
  auto manifest = Manifest("profile", args.seed);
  manifest["mode"] = args.mode;
  manifest["samples"] = args.samples;
  manifest["total_samples"] = dataset.TotalSamples();
  WriteText(manifest_out.path(), manifest.dump(2) + "\n");
  dataset.Save(data_out.path());
  data_out.Commit();
  manifest_out.Commit();
  std::cout << "wrote " << dataset.TotalSamples() << " samples to " << args.out.string() << "\n";
  return kExitOk;
}

int Run(const RunArgs& args) {
  RunConfig config = BaseConfig(args.config);
  if (!args.policy.empty()) config.policy = ParsePolicy(args.policy);
  config.Validate();
  const auto trace = LoadTrace(args.trace);

  StagedOutput out(args.out, args.force, true);
  auto manifest = Manifest("run", config.seed);
  manifest["config"] = args.config.string();
  manifest["trace"] = args.trace.string();
  manifest["policy"] = PolicyName(config.policy);
  manifest["out"] = args.out.string();
  WriteText(out.path() / "manifest.json", manifest.dump(2) + "\n");
  WriteText(out.path() / "config.json", RunConfigToJson(config) + "\n");

  const auto results = Execute(trace, config, WorkersFromEnv());
  const RunSummary summary = Summarize(results, config, Version());
  WriteRunOutputs(out.path(), results, summary);
  out.Commit();
  std::cout << "fraction within H " << summary.fraction_within_h << ", mean loss "
            << summary.mean_loss << " -> " << args.out.string() << "\n";
  return kExitOk;
}

int Sweep(const SweepArgs& args) {
  if (args.param != "bandwidth" && args.param != "H" && args.param != "cavs") {
    throw Error(ErrorCode::kParseError, "--param must be bandwidth, H or cavs");
  }
  if (args.values.size() < 2) throw Error(ErrorCode::kInvalidArgument, "need >= 2 --values");
  const RunConfig base = BaseConfig(args.config);
  std::vector<Policy> policies;
  for (const auto& p : args.policies) policies.push_back(ParsePolicy(p));
  if (policies.empty()) policies.push_back(base.policy);
  std::vector<double> values;
  for (const auto& v : args.values) values.push_back(ParseValue(v));

  std::optional<std::vector<TraceFrame>> shared;
  if (args.param != "cavs") {
    if (!args.trace.empty()) {
      shared = LoadTrace(args.trace);
    } else {
      TraceGeneratorConfig tc;
      tc.cavs = args.cavs;
      tc.frames = args.frames;
      tc.seed = args.trace_seed;
      shared = GenerateTrace(tc);
    }
  }

  struct Job {
    Policy policy;
    std::string label;
    double value;
  };
  std::vector<Job> jobs;
  for (Policy p : policies) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      jobs.push_back({p, args.values[i], values[i]});
    }
  }

  StagedOutput out(args.out, args.force, true);
  auto manifest = Manifest("sweep", base.seed);
  manifest["config"] = args.config.string();
  manifest["trace"] = args.trace.string();
  manifest["param"] = args.param;
  manifest["values"] = args.values;
  ordered_json names = ordered_json::array();
  for (Policy p : policies) names.push_back(PolicyName(p));
  manifest["policies"] = names;
  WriteText(out.path() / "manifest.json", manifest.dump(2) + "\n");

  std::vector<RunSummary> summaries(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        RunConfig config = base;
        config.policy = jobs[j].policy;
        std::vector<TraceFrame> generated;
        if (args.param == "bandwidth") {
          config.bandwidth_hz = jobs[j].value;
        } else if (args.param == "H") {
          config.H_ms = jobs[j].value;
        } else {
          TraceGeneratorConfig tc;
          tc.cavs = static_cast<int>(jobs[j].value);
          tc.frames = args.frames;
          tc.seed = args.trace_seed;
          generated = GenerateTrace(tc);
        }
        config.Validate();
        const auto& trace = shared ? *shared : generated;
        const auto results = Execute(trace, config, 1);
        summaries[j] = Summarize(results, config, Version());
        const fs::path dir = out.path() / "runs" /
                             (PolicyName(jobs[j].policy) + "_" + args.param + "-" + jobs[j].label);
        fs::create_directories(dir);
        WriteRunOutputs(dir, results, summaries[j]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(WorkersFromEnv(), jobs.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  std::string csv = "param,value,policy,metric,metric_value\n";
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    for (const auto& [name, v] : SummaryMetrics(summaries[j])) {
      csv += args.param + ',' + Num(jobs[j].value) + ',' + PolicyName(jobs[j].policy) + ',' +
             name + ',' + Num(v) + '\n';
    }
  }
  WriteText(out.path() / "sweep.csv", csv);
  out.Commit();
  std::cout << "wrote " << jobs.size() << " runs to " << args.out.string() << "\n";
  return kExitOk;
}

}  // namespace coperc::cli
