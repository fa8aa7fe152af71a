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
// Reference implementations used only by tests. Each one is written
// independently of the library code it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

#include <Eigen/Geometry>

#include "coperc/geometry.h"

namespace coperc::oracle {

inline double BruteChamfer(const PointCloud& a, const PointCloud& b) {
  auto directed = [](const PointCloud& from, const PointCloud& to) {
    double sum = 0.0;
    for (const auto& p : from.points) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to.points) best = std::min(best, (p - q).squaredNorm());
      sum += best;
    }
    return sum / static_cast<double>(from.size());
  };
  return directed(a, b) + directed(b, a);
}

// Mean matched distance, minimised over all n! bijections.
inline double EnumeratedEmd(const PointCloud& a, const PointCloud& b) {
  std::vector<int> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double sum = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) sum += (a.points[i] - b.points[perm[i]]).norm();
    best = std::min(best, sum);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(a.size());
}

// Min-cost perfect matching as a min-cost flow: successive shortest paths
// with Johnson potentials over the bipartite network source -> rows -> cols
// -> sink.
inline double MinCostFlowAssignment(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  const int V = 2 * n + 2, src = 2 * n, dst = 2 * n + 1;
  struct Arc {
    int to;
    int cap;
    double w;
  };
  std::vector<Arc> arcs;
  std::vector<std::vector<int>> adj(V);
  auto add = [&](int u, int v, double w) {
    adj[u].push_back(static_cast<int>(arcs.size()));
    arcs.push_back({v, 1, w});
    adj[v].push_back(static_cast<int>(arcs.size()));
    arcs.push_back({u, 0, -w});
  };
  for (int i = 0; i < n; ++i) add(src, i, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) add(i, n + j, cost[i][j]);
  }
  for (int j = 0; j < n; ++j) add(n + j, dst, 0.0);

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> pot(V, 0.0), dist(V);
  std::vector<int> via(V);
  double total = 0.0;
  for (int flow = 0; flow < n; ++flow) {
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(via.begin(), via.end(), -1);
    std::vector<bool> done(V, false);
    dist[src] = 0.0;
    for (int it = 0; it < V; ++it) {  // dense Dijkstra
      int u = -1;
      for (int v = 0; v < V; ++v) {
        if (!done[v] && dist[v] < inf && (u < 0 || dist[v] < dist[u])) u = v;
      }
      if (u < 0) break;
      done[u] = true;
      for (int e : adj[u]) {
        if (arcs[e].cap == 0) continue;
        const int v = arcs[e].to;
        const double nd = dist[u] + arcs[e].w + pot[u] - pot[v];
        if (nd < dist[v] - 1e-15) {
          dist[v] = nd;
          via[v] = e;
        }
      }
    }
    for (int v = 0; v < V; ++v) {
      if (dist[v] < inf) pot[v] += dist[v];
    }
    for (int v = dst; v != src; v = arcs[via[v] ^ 1].to) {
      arcs[via[v]].cap -= 1;
      arcs[via[v] ^ 1].cap += 1;
      total += arcs[via[v]].w;
    }
  }
  return total;
}

inline double FlowEmd(const PointCloud& a, const PointCloud& b) {
  std::vector<std::vector<double>> cost(a.size(), std::vector<double>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) cost[i][j] = (a.points[i] - b.points[j]).norm();
  }
  return MinCostFlowAssignment(cost) / static_cast<double>(a.size());
}

// Rotation built by composing elementary rotations: yaw about z, then pitch
// about y, then roll about x (intrinsic z-y-x).
inline Eigen::Matrix3d ComposedRotation(double pitch, double roll, double yaw) {
  return (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

// Area of the silhouette of an oriented box seen along direction `u`: convex
// hull (monotone chain) of the eight corners projected onto the plane
// orthogonal to u.
inline double SilhouetteArea(const Bbox3& box, const Eigen::Vector3d& u_world) {
  const Eigen::Vector3d u = u_world.normalized();
  Eigen::Vector3d e1 = u.unitOrthogonal();
  Eigen::Vector3d e2 = u.cross(e1);
  std::vector<Eigen::Vector2d> pts;
  for (int sx = -1; sx <= 1; sx += 2) {
    for (int sy = -1; sy <= 1; sy += 2) {
      for (int sz = -1; sz <= 1; sz += 2) {
        const Point3 c = box.FromBoxFrame(
            0.5 * Eigen::Vector3d(sx * box.extent.x(), sy * box.extent.y(), sz * box.extent.z()));
        pts.emplace_back(c.dot(e1), c.dot(e2));
      }
    }
  }
  std::sort(pts.begin(), pts.end(), [](const auto& p, const auto& q) {
    return p.x() < q.x() || (p.x() == q.x() && p.y() < q.y());
  });
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Eigen::Vector2d> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  double area = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& p = hull[i];
    const auto& q = hull[(i + 1) % hull.size()];
    area += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * std::abs(area);
}

// Multi-server FCFS by explicit event list: arrivals and departures are
// processed in time order; an arrival that finds a free server starts at
// once, otherwise it joins the tail of a single waiting line.
struct QueueJob {
  int id;
  double arrival;
  double service;
};

inline std::vector<double> EventListWaits(std::vector<QueueJob> jobs, int servers) {
  std::vector<double> wait(jobs.size(), 0.0);
  std::vector<std::size_t> order(jobs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (jobs[a].arrival != jobs[b].arrival) return jobs[a].arrival < jobs[b].arrival;
    return jobs[a].id < jobs[b].id;
  });
  struct Event {
    double t;
    int kind;  // 0 departure, 1 arrival: departures first at equal times
    std::size_t seq;
    std::size_t job;
    bool operator>(const Event& o) const {
      if (t != o.t) return t > o.t;
      if (kind != o.kind) return kind > o.kind;
      return seq > o.seq;
    }
  };
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events;
  for (std::size_t r = 0; r < order.size(); ++r) events.push({jobs[order[r]].arrival, 1, r, order[r]});
  int idle = servers;
  std::queue<std::size_t> line;
  std::size_t seq = order.size();
  while (!events.empty()) {
    const Event ev = events.top();
    events.pop();
    if (ev.kind == 1) {
      line.push(ev.job);
    } else {
      ++idle;
    }
    while (idle > 0 && !line.empty()) {
      const std::size_t j = line.front();
      line.pop();
      --idle;
      wait[j] = ev.t - jobs[j].arrival;
      events.push({ev.t + jobs[j].service, 0, seq++, j});
    }
  }
  return wait;
}

// 1-D Kalman update written from the scalar formulas.
struct Scalar1d {
  double mean;
  double var;
};
inline Scalar1d ScalarKalmanUpdate(Scalar1d prior, double obs, double obs_var) {
  const double gain = prior.var / (prior.var + obs_var);
  return {prior.mean + gain * (obs - prior.mean), (1.0 - gain) * prior.var};
}

// Smallest retained sum over every subset that keeps the largest edges
// (nothing removed exceeds anything kept) and either retains at least the
// threshold or is the whole set. Exhaustive over all 2^n subsets.
inline long long BestSuffixSum(const std::vector<int>& edges, int threshold) {
  const std::size_t n = edges.size();
  long long best = std::numeric_limits<long long>::max();
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    long long kept = 0;
    int min_kept = std::numeric_limits<int>::max(), max_removed = -1;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        kept += edges[i];
        min_kept = std::min(min_kept, edges[i]);
      } else {
        max_removed = std::max(max_removed, edges[i]);
      }
    }
    if (max_removed > min_kept) continue;
    const bool whole = mask == (1u << n) - 1;
    if (whole || kept >= threshold) best = std::min(best, kept);
  }
  return best;
}

}  // namespace coperc::oracle
