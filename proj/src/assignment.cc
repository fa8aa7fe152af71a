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
#include "coperc/assignment.h"

#include <algorithm>
#include <deque>
#include <limits>

#include "coperc/errors.h"

namespace coperc {

std::vector<int> HungarianAssignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) {
    throw Error(ErrorCode::kSizeMismatch, "assignment needs a square matrix");
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is the virtual source.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> row_of_col(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    row_of_col[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = row_of_col[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of_col[j0] != 0);
    do {
      const int j1 = way[j0];
      row_of_col[j0] = row_of_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_of_row(n, -1);
  for (int j = 1; j <= n; ++j) col_of_row[row_of_col[j] - 1] = j - 1;
  return col_of_row;
}

std::vector<int> AuctionAssignment(const Eigen::MatrixXd& cost,
                                   double rel_tol) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) {
    throw Error(ErrorCode::kSizeMismatch, "assignment needs a square matrix");
  }
  if (n == 0) return {};
  // Row-major benefit matrix keeps the bidding loop cache friendly.
  std::vector<double> benefit(static_cast<std::size_t>(n) * n);
  double max_cost = 0.0, row_min_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double row_min = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      const double c = cost(i, j);
      benefit[static_cast<std::size_t>(i) * n + j] = -c;
      max_cost = std::max(max_cost, c);
      row_min = std::min(row_min, c);
    }
    row_min_sum += row_min;
  }
  // Optimal total >= row_min_sum, so n * eps_final <= rel_tol * optimum.
  const double eps_final = std::max(rel_tol * row_min_sum / n,
                                    1e-12 * std::max(max_cost, 1.0));

  std::vector<double> price(n, 0.0);
  std::vector<int> owner(n, -1), col_of_row(n, -1);
  constexpr double kScale = 5.0;
  double eps = std::max(max_cost / 4.0, eps_final);
  std::deque<int> free_rows;
  while (true) {
    std::fill(owner.begin(), owner.end(), -1);
    std::fill(col_of_row.begin(), col_of_row.end(), -1);
    free_rows.clear();
    for (int i = 0; i < n; ++i) free_rows.push_back(i);
    while (!free_rows.empty()) {
      const int i = free_rows.front();
      free_rows.pop_front();
      const double* row = &benefit[static_cast<std::size_t>(i) * n];
      double best = -std::numeric_limits<double>::infinity();
      double second = best;
      int best_j = 0;
      for (int j = 0; j < n; ++j) {
        const double value = row[j] - price[j];
        if (value > best) {
          second = best;
          best = value;
          best_j = j;
        } else if (value > second) {
          second = value;
        }
      }
      if (n == 1) second = best;
      price[best_j] += best - second + eps;
      if (owner[best_j] >= 0) {
        col_of_row[owner[best_j]] = -1;
        free_rows.push_back(owner[best_j]);
      }
      owner[best_j] = i;
      col_of_row[i] = best_j;
    }
    if (eps <= eps_final) break;
    eps = std::max(eps / kScale, eps_final);
  }
  return col_of_row;
}

double AssignmentCost(const Eigen::MatrixXd& cost,
                      const std::vector<int>& col_of_row) {
  double total = 0.0;
  for (std::size_t i = 0; i < col_of_row.size(); ++i) {
    total += cost(static_cast<Eigen::Index>(i), col_of_row[i]);
  }
  return total;
}

}  // namespace coperc
