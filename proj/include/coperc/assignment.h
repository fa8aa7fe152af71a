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

#include <vector>

#include <Eigen/Core>

namespace coperc {

// Optimal square assignment minimizing total cost (shortest augmenting
// paths with dual potentials, O(n^3)). Returns col_of_row.
std::vector<int> HungarianAssignment(const Eigen::MatrixXd& cost);

// Epsilon-scaled forward auction. The returned assignment's total cost is
// within n * eps_final of optimal, where eps_final = rel_tol times the mean
// of the row minima (a lower bound on the optimal mean cost), so the
// relative excess is at most rel_tol.
std::vector<int> AuctionAssignment(const Eigen::MatrixXd& cost,
                                   double rel_tol = 1e-3);

double AssignmentCost(const Eigen::MatrixXd& cost,
                      const std::vector<int>& col_of_row);

}  // namespace coperc
