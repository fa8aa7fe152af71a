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
#include "coperc/pipeline.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <thread>

#include "coperc/errors.h"

namespace coperc {
namespace {

// Stream tags for DeriveSeed.
enum : std::uint64_t {
  kTagLocalize = 1,
  kTagOptimize = 2,
  kTagFading = 3,
  kTagCodec = 4,
  kTagSamples = 5,
};

std::uint64_t U(int v) { return static_cast<std::uint64_t>(static_cast<std::int64_t>(v)); }

const MeasurementSample& Pick(const MeasurementDataset& ds, DatasetKey key, Rng& rng) {
  const auto& v = ds.Samples(key);
  const auto n = v.size();
  return v[std::min(n - 1, static_cast<std::size_t>(OpenUniform(rng) * n))];
}

// Everything one CAV produces before the shared network step.
struct CavWork {
  const TraceCav* cav = nullptr;
  CavRuntime* rt = nullptr;
  LocalizationResult loc;
  std::vector<double> loc_errors;
  std::vector<ObjectDescriptor> descriptors;
  std::vector<std::optional<double>> losses;
  std::vector<PointCloud> clouds;
  std::vector<ObjectRecord> objects;
  UplinkJob job;
  CavFrameRecord record;
};

}  // namespace

unsigned WorkersFromEnv() {
  if (const char* v = std::getenv("COPERC_WORKERS")) {
    const long n = std::strtol(v, nullptr, 10);
    if (n >= 1 && n <= 256) return static_cast<unsigned>(n);
  }
  return 1;
}

void ParallelFor(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const unsigned w = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(w);
  for (unsigned t = 0; t < w; ++t) {
    threads.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += w) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

PipelineContext MakeContext(const RunConfig& config, const MeasurementDataset& dataset,
                            unsigned workers) {
  config.Validate();
  PipelineContext ctx;
  ctx.config = config;
  ctx.dataset = &dataset;
  ctx.workers = std::max(1u, workers);
  ctx.radio.bandwidth_hz = config.bandwidth_hz;
  ctx.radio.share_mode = config.share_mode;
  ctx.radio.fading_sigma = config.fading_sigma;
  ctx.radio.reallocate = config.uplink_reallocation;
  ctx.server.servers = config.edge_servers;
  auto& o = ctx.optimizer;
  o.latency_bound_ms = config.H_ms;
  o.percentile = config.p;
  o.outer_iterations = config.optimizer_outer;
  o.inner_iterations = config.optimizer_inner;
  o.deviation_count = config.optimizer_deviations;
  o.latency_samples = static_cast<std::size_t>(config.latency_samples);
  o.rf_set = config.rf_set;
  auto& l = ctx.localizer;
  l.oracle.detector_error_m = config.detector_error_m;
  l.oracle.tracker_error_m = config.tracker_error_m;
  l.oracle.miss_probability = config.miss_probability;
  l.oracle.Validate();
  dataset.RequireComplete(config.rf_set, kMinSamplesPerKey);
  return ctx;
}

MeasurementDataset BuildDataset(const RunConfig& config) {
  if (!config.dataset_path.empty()) return MeasurementDataset::Load(config.dataset_path);
  if (config.dataset_mode == DatasetMode::kSurrogate) {
    std::vector<RfCalibration> cal;
    for (const auto& c : DefaultCalibration()) {
      if (std::find(config.rf_set.begin(), config.rf_set.end(), c.rf) != config.rf_set.end()) {
        cal.push_back(c);
      }
    }
    if (cal.size() != config.rf_set.size()) {
      throw Error(ErrorCode::kCalibrationError, "no calibration for part of the RF set");
    }
    return SurrogateDataset(cal, config.dataset_samples, DeriveSeed(config.seed, {0x5A}));
  }
  ProfileOptions opt;
  opt.rf_set = config.rf_set;
  opt.clouds_per_bucket = kMinSamplesPerKey;
  opt.beta = config.beta;
  opt.seed = DeriveSeed(config.seed, {0x9F});
  opt.workers = WorkersFromEnv();
  return ProfileCodec(DefaultCloudGenerator(), opt);
}

SimulationState InitialState(const PipelineContext& ctx) {
  GlobalMapConfig mc;
  mc.gate_m = ctx.config.match_gate_m;
  mc.kalman = ctx.localizer.kalman;
  SimulationState s;
  s.map = GlobalMap(mc);
  return s;
}

double MeasureCodecLoss(const Bbox3& box, const TransformMatrix& lidar_to_global,
                        std::size_t raw_points, RepresentationFactor rf, std::uint64_t seed,
                        double beta, PointCloud* decoded_out) {
  const Point3 viewer = lidar_to_global.Translation();
  const PointCloud surface =
      SampleVisibleSurface(box, viewer, std::max<std::size_t>(raw_points, 1), DeriveSeed(seed, {1}));
  PointCloud scan;
  scan.frame = FrameLabel::Local(0);
  const TransformMatrix to_local = lidar_to_global.Inverse();
  scan.points.reserve(surface.size());
  for (const auto& p : surface.points) scan.points.push_back(to_local.Apply(p));
  const Latent latent = Encode(Resample(scan, kResamplePoints), rf, static_cast<int>(raw_points));
  const PointCloud decoded = ToGlobal(Decode(latent, DeriveSeed(seed, {2})), lidar_to_global);
  const PointCloud truth = SampleVisibleSurface(box, viewer, kResamplePoints, DeriveSeed(seed, {3}));
  const double loss = ReconstructionLoss(truth, decoded, beta);
  if (decoded_out != nullptr) *decoded_out = decoded;
  return loss;
}

std::map<int, std::vector<int>> SelectForFrame(const TraceFrame& frame,
                                               const VisibilityModel& visibility,
                                               double threshold) {
  std::map<int, std::vector<ViewerCounts>> viewers;
  for (const auto& c : frame.cavs) {
    for (const auto& o : c.objects) {
      viewers[o.id].push_back({c.id, PredictSubspaceCounts(o.box, c.pose.position, visibility)});
    }
  }
  std::map<int, std::vector<int>> out;
  for (const auto& [id, v] : viewers) out[id] = SelectObjects(v, threshold);
  return out;
}

FrameResult RunFrame(const TraceFrame& frame, SimulationState& state, const PipelineContext& ctx) {
  const RunConfig& cfg = ctx.config;
  const MeasurementDataset& ds = *ctx.dataset;
  const double time = frame.time;
  const std::uint64_t fidx = U(frame.index);
  try {
    frame.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kFrameError, e.what());
  }

  std::vector<CavWork> work(frame.cavs.size());
  for (std::size_t i = 0; i < frame.cavs.size(); ++i) {
    work[i].cav = &frame.cavs[i];
    auto [it, fresh] = state.cavs.try_emplace(frame.cavs[i].id);
    if (fresh) {
      it->second.mode.rle_threshold_m = cfg.rle_threshold_m;
      it->second.last_position = frame.cavs[i].pose.position;
    }
    work[i].rt = &it->second;
  }

  // Localization, per CAV.
  ParallelFor(work.size(), ctx.workers, [&](std::size_t i) {
    auto& w = work[i];
    const TraceCav& c = *w.cav;
    std::vector<TruthObject> truth;
    truth.reserve(c.objects.size());
    for (const auto& o : c.objects) truth.push_back({o.id, o.box});
    Rng rng(DeriveSeed(cfg.seed, {kTagLocalize, fidx, U(c.id)}));
    w.loc = HybridLocalize(truth, w.rt->mode, w.rt->trackers, time, BuildTransform(c.pose),
                           ctx.localizer, rng);
    w.rt->mode = w.loc.next_mode;
    for (const auto& ob : w.loc.observations) {
      const auto t = std::find_if(c.objects.begin(), c.objects.end(),
                                  [&](const TraceObject& o) { return o.id == ob.object_id; });
      w.loc_errors.push_back((ob.global_position.head<2>() - t->box.center.head<2>()).norm());
    }
  });

  // Shared inputs every CAV can compute identically.
  std::map<int, std::vector<int>> selection;
  if (cfg.policy == Policy::kAdamap || cfg.policy == Policy::kAdamapReuse) {
    selection = SelectForFrame(frame, ctx.visibility, cfg.density_threshold);
  }
  std::map<int, std::set<int>> visible;
  if (cfg.policy == Policy::kBlindspotAll) {
    for (const auto& c : frame.cavs) {
      for (const auto& o : c.objects) visible[c.id].insert(o.id);
    }
  }
  const int fallback_active =
      state.last_active_cavs > 0 ? state.last_active_cavs : static_cast<int>(frame.cavs.size());
  const FidelityModel fidelity{&ds, cfg.beta};
  const double lossless_bytes =
      std::ceil(static_cast<double>(kRawObjectBytes) / cfg.lossless_ratio);

  // Control plane and encoding, per CAV.
  ParallelFor(work.size(), ctx.workers, [&](std::size_t i) {
    auto& w = work[i];
    const TraceCav& c = *w.cav;
    const TransformMatrix T = BuildTransform(c.pose);
    auto& rec = w.record;
    rec.frame = frame.index;
    rec.cav_id = c.id;
    rec.detection_mode = w.loc.used_detection;
    rec.localization_ms = w.loc.charged_latency_ms;
    rec.detected = static_cast<int>(w.loc.observations.size());
    const double share_rate = UplinkRate(
        c.pose.position, fallback_active, ctx.radio,
        std::isfinite(w.rt->fading_log) ? std::exp(w.rt->fading_log) : 1.0);
    rec.predicted_rate_bps =
        cfg.rate_predictor == RatePredictor::kExperienced && std::isfinite(w.rt->last_rate_bps)
            ? w.rt->last_rate_bps
            : share_rate;
    Rng srng(DeriveSeed(cfg.seed, {kTagSamples, fidx, U(c.id)}));

    auto raw_points = [&](int id) {
      for (const auto& o : c.objects) {
        if (o.id == id) return o.point_count;
      }
      return 0.0;
    };
    auto truth_box = [&](int id) -> const Bbox3& {
      for (const auto& o : c.objects) {
        if (o.id == id) return o.box;
      }
      throw Error(ErrorCode::kFrameError, "observation without ground truth");
    };
    auto make_descriptor = [&](const Observation& ob) {
      ObjectDescriptor d;
      d.cav_id = c.id;
      d.local_id = ob.object_id;
      d.location = ob.global_position;
      d.yaw = ob.box.yaw;
      d.box = ob.box;
      d.confidence = ob.from_detector ? 0.95 : 0.9;
      if (const auto s = w.rt->trackers.find(ob.object_id); s != w.rt->trackers.end()) {
        d.speed = s->second.Velocity().norm();
        d.trajectory = s->second.x;
      }
      d.raw_point_count = static_cast<int>(raw_points(ob.object_id));
      d.timestamp = time;
      return d;
    };

    // Which observations go out, and how.
    std::vector<const Observation*> latent_objs, lossless_objs, reuse_objs;
    std::vector<int> reuse_ids;
    for (const auto& ob : w.loc.observations) {
      switch (cfg.policy) {
        case Policy::kAdamap:
        case Policy::kAdamapReuse: {
          const auto s = selection.find(ob.object_id);
          if (s == selection.end() ||
              !std::binary_search(s->second.begin(), s->second.end(), c.id)) {
            continue;
          }
          ++rec.selected;
          if (cfg.policy == Policy::kAdamapReuse) {
            if (const auto g = ReusableObject(ob.global_position, state.map, time,
                                              cfg.reuse_error_m)) {
              reuse_objs.push_back(&ob);
              reuse_ids.push_back(*g);
              continue;
            }
          }
          latent_objs.push_back(&ob);
          break;
        }
        case Policy::kAdamapLite:
          ++rec.selected;
          latent_objs.push_back(&ob);
          break;
        case Policy::kSelectAllLossless:
          ++rec.selected;
          lossless_objs.push_back(&ob);
          break;
        case Policy::kBlindspotAll: {
          bool blind = false;
          for (const auto& other : frame.cavs) {
            if (other.id == c.id || other.id == ob.object_id) continue;
            if ((other.pose.position - c.pose.position).norm() > 2.0 * ctx.visibility.range_m) {
              continue;
            }
            if (!visible[other.id].count(ob.object_id)) {
              blind = true;
              break;
            }
          }
          if (blind) {
            ++rec.selected;
            lossless_objs.push_back(&ob);
          }
          break;
        }
      }
    }

    // RFs for the objects that carry latents.
    std::vector<RepresentationFactor> rfs(latent_objs.size(), RepresentationFactor(cfg.rf_set.back()));
    if (cfg.policy != Policy::kAdamapLite && !latent_objs.empty()) {
      std::vector<ObjectCandidate> cands;
      for (const auto* ob : latent_objs) cands.push_back({ob->object_id, raw_points(ob->object_id)});
      LatencyInputs in;
      in.wireless_rate_bps = rec.predicted_rate_bps;
      in.server_capacity = w.rt->server_capacity;
      in.fixed_ms = w.loc.charged_latency_ms;
      in.aggregated_terms = DefaultAggregatedTerms();
      in.timing = &ds;
      in.count_descriptor_overhead = cfg.uplink_counts_descriptor_overhead;
      OptimizerConfig oc = ctx.optimizer;
      oc.seed = DeriveSeed(cfg.seed, {kTagOptimize, fidx, U(c.id)});
      const auto res = OptimizeRf(cands, fidelity, in, oc);
      for (std::size_t k = 0; k < rfs.size(); ++k) rfs[k] = res.decision.choices[k].rf;
      rec.infeasible = res.infeasible;
      rec.lambda = res.lambda;
      rec.probability = res.probability;
    }

    auto& job = w.job;
    job.cav_id = c.id;
    job.localization_ms = w.loc.charged_latency_ms;
    for (std::size_t k = 0; k < latent_objs.size(); ++k) {
      const Observation& ob = *latent_objs[k];
      ObjectDescriptor d = make_descriptor(ob);
      const double n = raw_points(ob.object_id);
      const DatasetKey key{rfs[k].value(), ds.BucketOf(n)};
      job.vehicle_ms += Pick(ds, key, srng).encode_ms;
      job.decode_ms.push_back(Pick(ds, key, srng).decode_ms);
      double loss = 0.0;
      PointCloud recon;
      Latent latent;
      if (cfg.dataset_mode == DatasetMode::kCodec) {
        const std::uint64_t cs = DeriveSeed(cfg.seed, {kTagCodec, fidx, U(c.id), U(ob.object_id)});
        loss = MeasureCodecLoss(truth_box(ob.object_id), T, static_cast<std::size_t>(n), rfs[k],
                                cs, cfg.beta, &recon);
      } else {
        loss = Pick(ds, key, srng).loss;
      }
      latent.rf = rfs[k];
      latent.payload.assign(rfs[k].LatentLength(), 0.0f);
      latent.source_point_count = static_cast<int>(n);
      d.latent = std::move(latent);
      w.objects.push_back({frame.index, c.id, ob.object_id, -1, rfs[k].value(), n,
                           DescriptorBytes(d), loss});
      rec.rfs.push_back(rfs[k].value());
      rec.loss_sum += loss;
      w.losses.push_back(loss);
      w.clouds.push_back(std::move(recon));
      w.descriptors.push_back(std::move(d));
    }
    for (const auto* ob : lossless_objs) {
      ObjectDescriptor d = make_descriptor(*ob);
      d.lossless_bytes = lossless_bytes;
      w.objects.push_back({frame.index, c.id, ob->object_id, -1, 0, raw_points(ob->object_id),
                           DescriptorBytes(d), 0.0});
      w.losses.push_back(0.0);
      w.clouds.emplace_back();
      w.descriptors.push_back(std::move(d));
    }
    for (std::size_t k = 0; k < reuse_objs.size(); ++k) {
      ObjectDescriptor d = make_descriptor(*reuse_objs[k]);
      d.delta_only = true;
      d.global_id = reuse_ids[k];
      const double loss = state.map.objects().at(reuse_ids[k]).reconstruction_loss;
      w.objects.push_back({frame.index, c.id, d.local_id, d.global_id, -1,
                           raw_points(d.local_id), DescriptorBytes(d), loss});
      rec.loss_sum += loss;
      ++rec.reused;
      w.losses.push_back(std::nullopt);
      w.clouds.emplace_back();
      w.descriptors.push_back(std::move(d));
    }
    rec.transmitted = static_cast<int>(w.descriptors.size());
    for (const auto& d : w.descriptors) {
      rec.bytes += DescriptorBytes(d);
      rec.uplink_bytes += cfg.uplink_counts_descriptor_overhead ? DescriptorBytes(d) : GeometryBytes(d);
    }
    job.payload_bytes = rec.uplink_bytes;
    job.aggregated_ms = w.loc.charged_latency_ms;
    for (const auto& term : DefaultAggregatedTerms()) job.aggregated_ms += term(srng);
  });

  // Shared uplink and edge queue.
  int active = 0;
  for (const auto& w : work) active += w.job.payload_bytes > 0.0 ? 1 : 0;
  std::vector<UplinkRequest> requests;
  requests.reserve(work.size());
  for (auto& w : work) {
    const TraceCav& c = *w.cav;
    Rng frng(DeriveSeed(cfg.seed, {kTagFading, fidx, U(c.id)}));
    const double moved = (c.pose.position - w.rt->last_position).norm();
    w.rt->fading_log = NextFadingLog(w.rt->fading_log, moved, ctx.radio, frng);
    w.rt->last_position = c.pose.position;
    UplinkRequest r;
    r.cav_id = c.id;
    r.position = c.pose.position;
    r.start_ms = w.job.localization_ms + w.job.vehicle_ms;
    r.bytes = w.job.payload_bytes;
    r.fading = std::exp(w.rt->fading_log);
    requests.push_back(r);
  }
  const auto uplink = ScheduleUplink(requests, ctx.radio);
  std::vector<UplinkJob> jobs;
  jobs.reserve(work.size());
  for (std::size_t i = 0; i < work.size(); ++i) {
    auto& w = work[i];
    const auto& r = requests[i];
    // Realised rate for transmitters; the static share otherwise.
    if (r.bytes > 0.0 && uplink[i] > 0.0 && std::isfinite(uplink[i])) {
      w.job.rate_bps = r.bytes * 8.0 / (uplink[i] / 1000.0);
    } else {
      w.job.rate_bps = UplinkRate(r.position, std::max(active, 1), ctx.radio, r.fading);
    }
    w.job.uplink_ms = r.bytes > 0.0 ? uplink[i] : 0.0;
    w.record.rate_bps = w.job.rate_bps;
    jobs.push_back(w.job);
  }
  const auto latency = SimulateFrameLatency(jobs, ctx.server);

  FrameResult out;
  out.frame = frame.index;
  out.time = time;
  for (std::size_t i = 0; i < work.size(); ++i) {
    auto& w = work[i];
    w.record.latency = latency[i];
    // Geometric moving average of the experienced rate.
    const double a = ctx.config.rate_smoothing;
    w.rt->last_rate_bps =
        std::isfinite(w.rt->last_rate_bps) && w.job.rate_bps > 0.0
            ? std::exp((1.0 - a) * std::log(w.rt->last_rate_bps) + a * std::log(w.job.rate_bps))
            : w.job.rate_bps;
    if (!w.job.decode_ms.empty() && latency[i].server_ms > 0.0) {
      const double cap = latency[i].server_ms / (latency[i].server_ms + latency[i].queue_ms);
      w.rt->server_capacity = std::clamp(cap, 0.05, 1.0);
    } else {
      w.rt->server_capacity = 1.0;
    }
  }
  state.last_active_cavs = active;

  // Server commit in CAV id order.
  std::vector<std::size_t> order(work.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return work[a].cav->id < work[b].cav->id; });
  for (std::size_t i : order) {
    auto& w = work[i];
    std::size_t rec_idx = 0;
    for (std::size_t k = 0; k < w.descriptors.size(); ++k) {
      const int gid = state.map.Commit(w.descriptors[k], time, w.losses[k], std::move(w.clouds[k]));
      w.objects[rec_idx++].global_id = gid;
    }
    out.localization_errors_m.insert(out.localization_errors_m.end(), w.loc_errors.begin(),
                                     w.loc_errors.end());
    out.objects.insert(out.objects.end(), w.objects.begin(), w.objects.end());
    out.cavs.push_back(std::move(w.record));
  }
  state.map.Dedup(time);
  state.map.Retire(time);
  out.map_objects = state.map.size();
  return out;
}

std::vector<FrameResult> RunTrace(const std::vector<TraceFrame>& frames,
                                  const PipelineContext& ctx, const FrameCallback& on_frame) {
  SimulationState state = InitialState(ctx);
  std::vector<FrameResult> out;
  out.reserve(frames.size());
  for (const auto& f : frames) {
    out.push_back(RunFrame(f, state, ctx));
    if (on_frame) on_frame(out.back());
  }
  return out;
}

}  // namespace coperc
