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
#include "coperc/kdtree.h"

#include <algorithm>
#include <limits>

namespace coperc {

KdTree3::KdTree3(const std::vector<Point3>& points) : points_(points) {
  order_.resize(points.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  Build(0, order_.size(), 0);
}

void KdTree3::Build(std::size_t lo, std::size_t hi, int depth) {
  if (hi - lo <= 1) return;
  const int axis = depth % 3;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::nth_element(order_.begin() + lo, order_.begin() + mid,
                   order_.begin() + hi, [&](std::size_t a, std::size_t b) {
                     return points_[a][axis] < points_[b][axis];
                   });
  Build(lo, mid, depth + 1);
  Build(mid + 1, hi, depth + 1);
}

std::pair<std::size_t, double> KdTree3::Nearest(const Point3& query) const {
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  Search(0, order_.size(), 0, query, &best, &best_d2);
  return {best, best_d2};
}

void KdTree3::Search(std::size_t lo, std::size_t hi, int depth,
                     const Point3& q, std::size_t* best,
                     double* best_d2) const {
  if (lo >= hi) return;
  const std::size_t mid = lo + (hi - lo) / 2;
  const std::size_t idx = order_[mid];
  const double d2 = (points_[idx] - q).squaredNorm();
  if (d2 < *best_d2 || (d2 == *best_d2 && idx < *best)) {
    *best_d2 = d2;
    *best = idx;
  }
  const int axis = depth % 3;
  const double diff = q[axis] - points_[idx][axis];
  const bool go_left = diff < 0.0;
  if (go_left) {
    Search(lo, mid, depth + 1, q, best, best_d2);
    if (diff * diff <= *best_d2) Search(mid + 1, hi, depth + 1, q, best, best_d2);
  } else {
    Search(mid + 1, hi, depth + 1, q, best, best_d2);
    if (diff * diff <= *best_d2) Search(lo, mid, depth + 1, q, best, best_d2);
  }
}

}  // namespace coperc
