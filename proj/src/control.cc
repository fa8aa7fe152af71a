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
#include "coperc/control.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "coperc/errors.h"

namespace coperc {

double ProjectedArea(const Bbox3& box, const Point3& viewer) {
  const auto faces = ProjectedFaceAreas(box, viewer);
  return std::accumulate(faces.begin(), faces.end(), 0.0);
}

double PredictedPointCount(double projected_area, double distance_m,
                           const VisibilityModel& model) {
  if (!(distance_m > 0.0) || distance_m > model.range_m || projected_area <= 0.0) return 0.0;
  const double n = model.density_k * projected_area / (distance_m * distance_m);
  return std::floor(std::min(n, model.cap));
}

double PredictVisiblePoints(const Bbox3& box, const Point3& viewer, const VisibilityModel& model) {
  const double d = (viewer - box.center).norm();
  if (d > model.range_m) return 0.0;
  return PredictedPointCount(ProjectedArea(box, viewer), d, model);
}

std::array<double, kQuadrantCount> PredictSubspaceCounts(const Bbox3& box, const Point3& viewer,
                                                         const VisibilityModel& model) {
  std::array<double, kQuadrantCount> out{};
  const double d = (viewer - box.center).norm();
  if (d > model.range_m) return out;
  const auto faces = ProjectedFaceAreas(box, viewer);
  const double total =
      PredictedPointCount(std::accumulate(faces.begin(), faces.end(), 0.0), d, model);
  if (total <= 0.0) return out;
  // quadrants adjacent to each side face: +x, -x, +y, -y
  static constexpr int kAdjacent[4][2] = {{0, 1}, {2, 3}, {0, 2}, {1, 3}};
  int best = -1;
  for (int f = 0; f < 4; ++f) {
    if (faces[f] > 0.0 && (best < 0 || faces[f] > faces[best])) best = f;
  }
  if (best < 0) {
    // looking straight down, no side face visible
    out.fill(total / kQuadrantCount);
    return out;
  }
  out[kAdjacent[best][0]] = total / 2.0;
  out[kAdjacent[best][1]] = total / 2.0;
  return out;
}

std::vector<StarEdge> PruneStarEdges(std::vector<StarEdge> edges, double threshold) {
  std::sort(edges.begin(), edges.end(), [](const StarEdge& a, const StarEdge& b) {
    if (a.points != b.points) return a.points < b.points;
    return a.cav_id > b.cav_id;
  });
  double sum = 0.0;
  for (const auto& e : edges) sum += e.points;
  std::size_t first = 0;
  while (first < edges.size() && sum - edges[first].points >= threshold) {
    sum -= edges[first].points;
    ++first;
  }
  return {edges.begin() + static_cast<std::ptrdiff_t>(first), edges.end()};
}

std::vector<int> SelectObjects(const std::vector<ViewerCounts>& viewers, double threshold) {
  std::vector<int> selected;
  for (int q = 0; q < kQuadrantCount; ++q) {
    std::vector<StarEdge> edges;
    for (const auto& v : viewers) {
      if (v.counts[q] > 0.0) edges.push_back({v.cav_id, v.counts[q]});
    }
    for (const auto& e : PruneStarEdges(std::move(edges), threshold)) {
      selected.push_back(e.cav_id);
    }
  }
  std::sort(selected.begin(), selected.end());
  selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
  return selected;
}

std::size_t ControlDecision::SelectedCount() const {
  return static_cast<std::size_t>(std::count_if(
      choices.begin(), choices.end(), [](const ObjectChoice& c) { return c.selected; }));
}

double ExpectedFidelity(const ControlDecision& decision,
                        const std::vector<ObjectCandidate>& objects, const FidelityModel& model) {
  if (model.dataset == nullptr) throw Error(ErrorCode::kInvalidArgument, "fidelity needs a dataset");
  if (decision.choices.size() != objects.size()) {
    throw Error(ErrorCode::kSizeMismatch, "decision and object list differ in length");
  }
  double f = 0.0;
  for (std::size_t k = 0; k < objects.size(); ++k) {
    if (!decision.choices[k].selected) continue;
    const int b = model.dataset->BucketOf(objects[k].raw_point_count);
    f -= model.dataset->MeanLoss({decision.choices[k].rf.value(), b});
  }
  return f;
}

void LatencyInputs::Validate() const {
  if (!(wireless_rate_bps >= 0.0) || !(server_capacity > 0.0) || !(vehicle_capacity > 0.0) ||
      !(fixed_ms >= 0.0) || fixed_encode_ms < 0.0 || fixed_decode_ms < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "latency inputs out of range");
  }
}

std::vector<TruncatedNormal> DefaultAggregatedTerms() {
  return {TruncatedNormal::Matching(0.061, 0.023), TruncatedNormal::Matching(0.006, 0.012),
          TruncatedNormal::Matching(0.014, 0.023)};
}

LatencyScenarios::LatencyScenarios(const std::vector<ObjectCandidate>& objects,
                                   const LatencyInputs& inputs, std::span<const int> rf_set,
                                   std::size_t samples, std::uint64_t seed)
    : num_objects_(objects.size()),
      rate_bps_(inputs.wireless_rate_bps),
      overhead_bytes_(inputs.count_descriptor_overhead ? kDescriptorOverheadBytes : 0.0) {
  inputs.Validate();
  if (samples == 0) throw Error(ErrorCode::kInvalidArgument, "need at least one latency sample");
  for (int r : rf_set) log2_set_.push_back(RepresentationFactor(r).Log2());
  if (log2_set_.empty()) throw Error(ErrorCode::kInvalidArgument, "empty RF set");

  const std::size_t K = num_objects_;
  const std::size_t R = log2_set_.size();
  base_ms_.assign(samples, inputs.fixed_ms);
  Rng brng(DeriveSeed(seed, {0xB0}));
  for (std::size_t s = 0; s < samples; ++s) {
    for (const auto& term : inputs.aggregated_terms) base_ms_[s] += term(brng);
  }

  codec_ms_.assign(samples * K * R, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    // one stream per object so adding objects leaves the others untouched
    Rng rng(DeriveSeed(seed, {0xC0, k}));
    std::vector<const std::vector<MeasurementSample>*> per_rf(R, nullptr);
    if (inputs.timing != nullptr) {
      const int b = inputs.timing->BucketOf(objects[k].raw_point_count);
      for (std::size_t j = 0; j < R; ++j) per_rf[j] = &inputs.timing->Samples({rf_set[j], b});
    }
    for (std::size_t s = 0; s < samples; ++s) {
      const double ue = OpenUniform(rng);
      const double ud = OpenUniform(rng);
      for (std::size_t j = 0; j < R; ++j) {
        double enc = inputs.fixed_encode_ms;
        double dec = inputs.fixed_decode_ms;
        if (per_rf[j] != nullptr) {
          const auto& v = *per_rf[j];
          const auto n = v.size();
          enc = v[std::min(n - 1, static_cast<std::size_t>(ue * n))].encode_ms;
          dec = v[std::min(n - 1, static_cast<std::size_t>(ud * n))].decode_ms;
        }
        codec_ms_[(s * K + k) * R + j] =
            enc / inputs.vehicle_capacity + dec / inputs.server_capacity;
      }
    }
  }
}

double LatencyScenarios::UplinkMs(double log2_rf) const {
  const double bytes = PayloadBytesContinuous(log2_rf) + overhead_bytes_;
  if (!(rate_bps_ > 0.0)) return std::numeric_limits<double>::infinity();
  return bytes * 8.0 / rate_bps_ * 1000.0;
}

void LatencyScenarios::Latencies(std::span<const double> log2_rf, std::span<const char> selected,
                                 std::vector<double>* out) const {
  const std::size_t K = num_objects_;
  const std::size_t R = log2_set_.size();
  if (log2_rf.size() != K || selected.size() != K) {
    throw Error(ErrorCode::kSizeMismatch, "RF vector length differs from object count");
  }
  // interpolation brackets are the same for every draw
  std::vector<std::size_t> lo(K, 0);
  std::vector<double> w(K, 0.0);
  double uplink = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    if (!selected[k]) continue;
    const double x = std::clamp(log2_rf[k], log2_set_.front(), log2_set_.back());
    std::size_t j = 0;
    while (j + 2 < R && x > log2_set_[j + 1]) ++j;
    lo[k] = j;
    w[k] = R == 1 ? 0.0 : (x - log2_set_[j]) / (log2_set_[j + 1] - log2_set_[j]);
    uplink += UplinkMs(x);
  }
  out->assign(base_ms_.size(), 0.0);
  for (std::size_t s = 0; s < base_ms_.size(); ++s) {
    double t = base_ms_[s] + uplink;
    const double* row = &codec_ms_[s * K * R];
    for (std::size_t k = 0; k < K; ++k) {
      if (!selected[k]) continue;
      const double* c = row + k * R;
      t += R == 1 ? c[0] : c[lo[k]] + w[k] * (c[lo[k] + 1] - c[lo[k]]);
    }
    (*out)[s] = t;
  }
}

double LatencyScenarios::Probability(std::span<const double> log2_rf,
                                     std::span<const char> selected, double bound_ms) const {
  std::vector<double> lat;
  Latencies(log2_rf, selected, &lat);
  const auto ok = std::count_if(lat.begin(), lat.end(), [&](double t) { return t <= bound_ms; });
  return static_cast<double>(ok) / static_cast<double>(lat.size());
}

double EstimateLatencyProb(const ControlDecision& decision,
                           const std::vector<ObjectCandidate>& objects,
                           const LatencyInputs& inputs, double bound_ms, std::size_t samples,
                           std::uint64_t seed) {
  if (decision.choices.size() != objects.size()) {
    throw Error(ErrorCode::kSizeMismatch, "decision and object list differ in length");
  }
  if (decision.SelectedCount() == 0) return 1.0;
  std::vector<int> rf_set;
  std::vector<double> x(objects.size(), 0.0);
  std::vector<char> sel(objects.size(), 0);
  for (std::size_t k = 0; k < objects.size(); ++k) {
    const int r = decision.choices[k].rf.value();
    if (std::find(rf_set.begin(), rf_set.end(), r) == rf_set.end()) rf_set.push_back(r);
    x[k] = decision.choices[k].rf.Log2();
    sel[k] = decision.choices[k].selected ? 1 : 0;
  }
  std::sort(rf_set.begin(), rf_set.end());
  const LatencyScenarios scen(objects, inputs, rf_set, samples, seed);
  return scen.Probability(x, sel, bound_ms);
}

std::vector<CavSubproblem> Decompose(const std::vector<CavObjects>& detections,
                                     const std::map<int, LatencyInputs>& predicted) {
  std::vector<CavSubproblem> out;
  out.reserve(detections.size());
  for (const auto& d : detections) {
    const auto it = predicted.find(d.cav_id);
    if (it == predicted.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "no predicted rates for CAV " + std::to_string(d.cav_id));
    }
    out.push_back({d.cav_id, d.objects, it->second});
  }
  std::sort(out.begin(), out.end(),
            [](const CavSubproblem& a, const CavSubproblem& b) { return a.cav_id < b.cav_id; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].cav_id == out[i - 1].cav_id) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate CAV in detections");
    }
  }
  return out;
}

std::map<int, RfOptimizationResult> SolveSubproblems(const std::vector<CavSubproblem>& problems,
                                                     const FidelityModel& fidelity,
                                                     const OptimizerConfig& config) {
  std::map<int, RfOptimizationResult> out;
  for (const auto& p : problems) {
    OptimizerConfig c = config;
    c.seed = DeriveSeed(config.seed, {static_cast<std::uint64_t>(p.cav_id)});
    out.emplace(p.cav_id, OptimizeRf(p.objects, fidelity, p.latency, c));
  }
  return out;
}

}  // namespace coperc
