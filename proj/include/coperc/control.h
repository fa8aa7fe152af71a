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

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "coperc/codec.h"
#include "coperc/dataset.h"
#include "coperc/geometry.h"
#include "coperc/random.h"

namespace coperc {

// Point-count prediction from LiDAR geometry: N = k * A_proj / d^2.
struct VisibilityModel {
  double density_k = 60000.0;  // points * m^2 per m^2 of projected area
  double cap = 240000.0;
  double range_m = 50.0;
};

double ProjectedArea(const Bbox3& box, const Point3& viewer);
// floor(clamp(k * area / d^2, 0, cap)), 0 beyond range.
double PredictedPointCount(double projected_area, double distance_m,
                           const VisibilityModel& model = {});
double PredictVisiblePoints(const Bbox3& box, const Point3& viewer,
                            const VisibilityModel& model = {});

// Splits the predicted count equally between the two quadrants behind the
// dominant viewer-facing side face (length or width side).
std::array<double, kQuadrantCount> PredictSubspaceCounts(const Bbox3& box, const Point3& viewer,
                                                         const VisibilityModel& model = {});

struct StarEdge {
  int cav_id = -1;
  double points = 0.0;
};

// Removes the smallest edge (ties: larger CAV id first) while the remaining
// sum stays at or above the threshold. Returns the retained edges.
std::vector<StarEdge> PruneStarEdges(std::vector<StarEdge> edges, double threshold);

struct ViewerCounts {
  int cav_id = -1;
  std::array<double, kQuadrantCount> counts{};
};

// CAVs that keep an edge in at least one sub-space, ascending by id.
std::vector<int> SelectObjects(const std::vector<ViewerCounts>& viewers, double threshold);

struct ObjectCandidate {
  int object_id = -1;
  double raw_point_count = 0.0;
};

struct ObjectChoice {
  int object_id = -1;
  bool selected = false;
  RepresentationFactor rf;
};

struct ControlDecision {
  std::vector<ObjectChoice> choices;

  std::size_t SelectedCount() const;
};

// f(r | s) is averaged from the dataset at (r, bucket(s)).
struct FidelityModel {
  const MeasurementDataset* dataset = nullptr;
  double beta = kDefaultLossBeta;
};

// Sum over selected objects of the dataset mean of -loss. Throws
// kDatasetMiss for uncovered keys.
double ExpectedFidelity(const ControlDecision& decision,
                        const std::vector<ObjectCandidate>& objects, const FidelityModel& model);

// Inputs to L = sum_k [c_v/R_v + 8 d/R_w + c_e/R_e] + B. All times in ms.
struct LatencyInputs {
  double wireless_rate_bps = 1e6;
  double server_capacity = 1.0;   // R_e
  double vehicle_capacity = 1.0;  // R_v
  // Latency already committed on the vehicle this slot (localization).
  double fixed_ms = 0.0;
  // Independent terms summed into one B draw.
  std::vector<TruncatedNormal> aggregated_terms;
  // Codec time samples; when null the fixed values below are used.
  const MeasurementDataset* timing = nullptr;
  double fixed_encode_ms = 0.0;
  double fixed_decode_ms = 0.0;
  // Adds kDescriptorOverheadBytes to every selected object's uplink size.
  bool count_descriptor_overhead = false;

  void Validate() const;
};

// Module-time table terms (localization, transform, matching).
std::vector<TruncatedNormal> DefaultAggregatedTerms();

// Common-random-number latency scenarios for a fixed object list. Latency
// is evaluated for continuous log2 RFs by interpolating between adjacent
// members of the RF set.
class LatencyScenarios {
 public:
  LatencyScenarios(const std::vector<ObjectCandidate>& objects, const LatencyInputs& inputs,
                   std::span<const int> rf_set, std::size_t samples, std::uint64_t seed);

  std::size_t samples() const { return base_ms_.size(); }
  // Per-draw totals for the given relaxed RFs; `selected` masks objects.
  void Latencies(std::span<const double> log2_rf, std::span<const char> selected,
                 std::vector<double>* out) const;
  double Probability(std::span<const double> log2_rf, std::span<const char> selected,
                     double bound_ms) const;

 private:
  double UplinkMs(double log2_rf) const;

  std::vector<double> log2_set_;
  std::size_t num_objects_ = 0;
  double rate_bps_ = 0.0;
  double overhead_bytes_ = 0.0;
  std::vector<double> base_ms_;  // B draw + fixed
  // codec_ms_[(s * K + k) * R + j]: c_v/R_v + c_e/R_e at RF index j.
  std::vector<double> codec_ms_;
};

// Monte Carlo estimate of Prob(L <= H); 1 for an empty selection.
double EstimateLatencyProb(const ControlDecision& decision,
                           const std::vector<ObjectCandidate>& objects,
                           const LatencyInputs& inputs, double bound_ms, std::size_t samples,
                           std::uint64_t seed);

struct OptimizerConfig {
  double latency_bound_ms = 100.0;
  double percentile = 0.99;
  int outer_iterations = 10;
  int inner_iterations = 20;
  int deviation_count = 16;
  double deviation_sd = 0.25;  // log2 RF units
  double primal_step = 0.5;
  double dual_step = 5.0;
  double initial_lambda = 1.0;
  double initial_log2_rf = 4.0;
  std::size_t latency_samples = 64;
  std::vector<int> rf_set{RepresentationFactor::kDefaultSet.begin(),
                          RepresentationFactor::kDefaultSet.end()};
  std::uint64_t seed = 1;
  // After rounding, coarsen objects until the fresh estimate meets p.
  bool repair_discrete = true;

  void Validate() const;
};

struct RfOptimizationResult {
  ControlDecision decision;
  std::vector<double> relaxed_log2_rf;
  double lambda = 0.0;
  double probability = 1.0;  // fresh estimate for the discrete decision
  double expected_fidelity = 0.0;
  bool infeasible = false;
  int repaired_steps = 0;
  std::vector<double> lambda_trace;       // after each dual update
  std::vector<double> probability_trace;  // relaxed point, each outer iteration
  // Lagrangian at the iterate after each inner step, per outer iteration.
  std::vector<std::vector<double>> lagrangian_trace;
};

// Primal-dual approximated gradient ascent over relaxed log2 RFs, then
// rounding up to the RF set. Never throws on infeasibility: returns r_max
// for every object with `infeasible` set.
RfOptimizationResult OptimizeRf(const std::vector<ObjectCandidate>& objects,
                                const FidelityModel& fidelity, const LatencyInputs& latency,
                                const OptimizerConfig& config);

struct CavObjects {
  int cav_id = -1;
  std::vector<ObjectCandidate> objects;
};

struct CavSubproblem {
  int cav_id = -1;
  std::vector<ObjectCandidate> objects;
  LatencyInputs latency;
};

// One subproblem per CAV carrying only that CAV's objects and predicted
// rates; ordered by CAV id. Throws kInvalidArgument if a CAV has no inputs.
std::vector<CavSubproblem> Decompose(const std::vector<CavObjects>& detections,
                                     const std::map<int, LatencyInputs>& predicted);

// Solves each subproblem with a seed derived from its CAV id only.
std::map<int, RfOptimizationResult> SolveSubproblems(const std::vector<CavSubproblem>& problems,
                                                     const FidelityModel& fidelity,
                                                     const OptimizerConfig& config);

}  // namespace coperc
