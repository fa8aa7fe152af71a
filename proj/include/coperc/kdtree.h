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

#include <cstddef>
#include <utility>
#include <vector>

#include "coperc/geometry.h"

namespace coperc {

// Static 3-D kd-tree stored implicitly in a permuted index array.
class KdTree3 {
 public:
  explicit KdTree3(const std::vector<Point3>& points);

  // Index of the nearest point and its squared distance. The tree must be
  // non-empty.
  std::pair<std::size_t, double> Nearest(const Point3& query) const;

 private:
  void Build(std::size_t lo, std::size_t hi, int depth);
  void Search(std::size_t lo, std::size_t hi, int depth, const Point3& q,
              std::size_t* best, double* best_d2) const;

  const std::vector<Point3>& points_;
  std::vector<std::size_t> order_;
};

}  // namespace coperc
