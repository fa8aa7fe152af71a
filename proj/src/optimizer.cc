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
#include <algorithm>
#include <cmath>
#include <limits>

#include "coperc/control.h"
#include "coperc/errors.h"

namespace coperc {
namespace {

constexpr double kRoundTol = 1e-9;

struct Problem {
  std::vector<double> log2_set;
  const std::vector<int>* rf_set = nullptr;
  // mean loss per object per RF index
  std::vector<std::vector<double>> loss;
  std::vector<char> all_selected;

  double Fidelity(const std::vector<double>& x) const {
    const std::size_t R = log2_set.size();
    double f = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double xk = std::clamp(x[k], log2_set.front(), log2_set.back());
      if (R == 1) {
        f -= loss[k][0];
        continue;
      }
      std::size_t j = 0;
      while (j + 2 < R && xk > log2_set[j + 1]) ++j;
      const double w = (xk - log2_set[j]) / (log2_set[j + 1] - log2_set[j]);
      f -= loss[k][j] + w * (loss[k][j + 1] - loss[k][j]);
    }
    return f;
  }

  std::size_t RoundUp(double x) const {
    for (std::size_t j = 0; j < log2_set.size(); ++j) {
      if (log2_set[j] >= x - kRoundTol) return j;
    }
    return log2_set.size() - 1;
  }
};

ControlDecision MakeDecision(const std::vector<ObjectCandidate>& objects,
                             const std::vector<int>& rf_set, const std::vector<std::size_t>& idx) {
  ControlDecision d;
  for (std::size_t k = 0; k < objects.size(); ++k) {
    d.choices.push_back({objects[k].object_id, true, RepresentationFactor(rf_set[idx[k]])});
  }
  return d;
}

}  // namespace

void OptimizerConfig::Validate() const {
  if (!(latency_bound_ms > 0.0) || !(percentile > 0.0 && percentile <= 1.0) ||
      outer_iterations < 1 || inner_iterations < 1 || deviation_count < 2 ||
      !(deviation_sd > 0.0) || !(primal_step > 0.0) || !(dual_step >= 0.0) ||
      !(initial_lambda >= 0.0) || latency_samples == 0 || rf_set.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "optimizer configuration out of range");
  }
  if (!std::is_sorted(rf_set.begin(), rf_set.end()) ||
      std::adjacent_find(rf_set.begin(), rf_set.end()) != rf_set.end()) {
    throw Error(ErrorCode::kInvalidArgument, "RF set must be strictly increasing");
  }
  for (int r : rf_set) RepresentationFactor{r};
}

RfOptimizationResult OptimizeRf(const std::vector<ObjectCandidate>& objects,
                                const FidelityModel& fidelity, const LatencyInputs& latency,
                                const OptimizerConfig& config) {
  config.Validate();
  latency.Validate();
  if (fidelity.dataset == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "optimizer needs a measurement dataset");
  }
  RfOptimizationResult result;
  result.lambda = config.initial_lambda;
  const std::size_t K = objects.size();
  if (K == 0) return result;

  Problem prob;
  prob.rf_set = &config.rf_set;
  for (int r : config.rf_set) prob.log2_set.push_back(RepresentationFactor(r).Log2());
  prob.all_selected.assign(K, 1);
  prob.loss.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const int b = fidelity.dataset->BucketOf(objects[k].raw_point_count);
    for (int r : config.rf_set) prob.loss[k].push_back(fidelity.dataset->MeanLoss({r, b}));
  }
  const double x_min = prob.log2_set.front();
  const double x_max = prob.log2_set.back();
  const double H = config.latency_bound_ms;
  const double p = config.percentile;
  const std::size_t S = config.latency_samples;
  const std::size_t R = prob.log2_set.size();

  auto finish = [&](std::vector<std::size_t> idx) {
    const LatencyScenarios fresh(objects, latency, config.rf_set, S,
                                 DeriveSeed(config.seed, {0xF1}));
    std::vector<double> xd(K);
    auto eval = [&] {
      for (std::size_t k = 0; k < K; ++k) xd[k] = prob.log2_set[idx[k]];
      return fresh.Probability(xd, prob.all_selected, H);
    };
    result.probability = eval();
    if (config.repair_discrete) {
      // Rounding up rarely breaks the constraint, but when it does, coarsen
      // the least compressed object one level at a time.
      while (result.probability < p) {
        std::size_t worst = K;
        for (std::size_t k = 0; k < K; ++k) {
          if (idx[k] + 1 < R && (worst == K || idx[k] < idx[worst])) worst = k;
        }
        if (worst == K) break;
        ++idx[worst];
        ++result.repaired_steps;
        result.probability = eval();
      }
    }
    result.decision = MakeDecision(objects, config.rf_set, idx);
    result.expected_fidelity = ExpectedFidelity(result.decision, objects, fidelity);
  };

  // Feasibility at maximum compression decides whether to optimize at all.
  {
    const LatencyScenarios check(objects, latency, config.rf_set, S,
                                 DeriveSeed(config.seed, {0xFE}));
    const std::vector<double> xmax(K, x_max);
    if (check.Probability(xmax, prob.all_selected, H) < p) {
      result.infeasible = true;
      result.relaxed_log2_rf = xmax;
      finish(std::vector<std::size_t>(K, R - 1));
      return result;
    }
  }

  std::vector<double> x(K, std::clamp(config.initial_log2_rf, x_min, x_max));
  double lambda = config.initial_lambda;
  Rng dev_rng(DeriveSeed(config.seed, {0xD0}));
  std::normal_distribution<double> dev(0.0, config.deviation_sd);
  const int D = config.deviation_count;
  std::vector<std::vector<double>> pts(D, std::vector<double>(K));
  std::vector<double> g(D), xn(K), slope(K);

  for (int m = 0; m < config.outer_iterations; ++m) {
    // fixed draws within an outer iteration make G deterministic in x
    const LatencyScenarios scen(objects, latency, config.rf_set, S,
                                DeriveSeed(config.seed, {0xA0, static_cast<std::uint64_t>(m)}));
    auto G = [&](const std::vector<double>& v) {
      return prob.Fidelity(v) + lambda * (scen.Probability(v, prob.all_selected, H) - p);
    };
    double g_cur = G(x);
    auto& trace = result.lagrangian_trace.emplace_back();
    for (int n = 0; n < config.inner_iterations; ++n) {
      for (int j = 0; j < D; ++j) {
        for (std::size_t k = 0; k < K; ++k) pts[j][k] = std::clamp(x[k] + dev(dev_rng), x_min, x_max);
        g[j] = G(pts[j]);
      }
      double g_mean = 0.0;
      for (double v : g) g_mean += v;
      g_mean /= D;
      for (std::size_t k = 0; k < K; ++k) {
        double mk = 0.0;
        for (int j = 0; j < D; ++j) mk += pts[j][k];
        mk /= D;
        double sxy = 0.0, sxx = 0.0;
        for (int j = 0; j < D; ++j) {
          sxy += (pts[j][k] - mk) * (g[j] - g_mean);
          sxx += (pts[j][k] - mk) * (pts[j][k] - mk);
        }
        slope[k] = sxx > 0.0 ? sxy / sxx : 0.0;
      }
      // ascent step, halved until the Lagrangian does not fall
      double eta = config.primal_step;
      for (int tries = 0; tries < 3; ++tries, eta *= 0.5) {
        for (std::size_t k = 0; k < K; ++k) xn[k] = std::clamp(x[k] + eta * slope[k], x_min, x_max);
        const double g_new = G(xn);
        if (g_new >= g_cur) {
          x = xn;
          g_cur = g_new;
          break;
        }
      }
      trace.push_back(g_cur);
    }
    const double pr = scen.Probability(x, prob.all_selected, H);
    result.probability_trace.push_back(pr);
    lambda = std::max(0.0, lambda - config.dual_step * (pr - p));
    result.lambda_trace.push_back(lambda);
  }
  result.lambda = lambda;
  result.relaxed_log2_rf = x;
  std::vector<std::size_t> idx(K);
  for (std::size_t k = 0; k < K; ++k) idx[k] = prob.RoundUp(x[k]);
  finish(std::move(idx));
  return result;
}

}  // namespace coperc
