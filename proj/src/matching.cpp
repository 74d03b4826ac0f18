// Copyright 2026 The Joint Auction Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "jal/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "jal/errors.hpp"

namespace jal {
namespace {

// Shortest augmenting path Hungarian algorithm on an n x m cost matrix
// (n <= m), 1-based potentials. Returns the column assigned to each row.
std::vector<std::size_t> hungarian_min(const std::vector<std::vector<double>>& cost,
                                       std::size_t n, std::size_t m) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<std::size_t> col_of_row(n, 0);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) col_of_row[p[j] - 1] = j - 1;
  return col_of_row;
}

double optimum_value(const Matrix& w) {
  if (w.cols() == 0) return 0.0;
  return max_weight_assignment(w).value;
}

Matrix without(const Matrix& w, Eigen::Index row, Eigen::Index col) {
  Matrix out(w.rows() - 1, w.cols() - 1);
  for (Eigen::Index i = 0, oi = 0; i < w.rows(); ++i) {
    if (i == row) continue;
    for (Eigen::Index k = 0, ok = 0; k < w.cols(); ++k) {
      if (k == col) continue;
      out(oi, ok++) = w(i, k);
    }
    ++oi;
  }
  return out;
}

}  // namespace

Assignment max_weight_assignment(const Matrix& weights) {
  const auto items = static_cast<std::size_t>(weights.rows());
  const auto slots = static_cast<std::size_t>(weights.cols());
  if (slots > items)
    throw DomainError("cannot fill " + std::to_string(slots) + " slots with " +
                      std::to_string(items) + " items");
  Assignment a;
  if (slots == 0) return a;
  // Slots are the rows of the cost problem (slots <= items).
  std::vector<std::vector<double>> cost(slots, std::vector<double>(items));
  for (std::size_t k = 0; k < slots; ++k)
    for (std::size_t i = 0; i < items; ++i) cost[k][i] = -weights(i, k);
  a.item_of_slot = hungarian_min(cost, slots, items);
  for (std::size_t k = 0; k < slots; ++k) a.value += weights(a.item_of_slot[k], k);
  return a;
}

Matrix round_allocation(const Matrix& soft) {
  const Eigen::Index items = soft.rows(), slots = soft.cols();
  if (slots > items)
    throw DomainError("rounding needs m + n >= K, got " + std::to_string(items) +
                      " items for " + std::to_string(slots) + " slots");
  Matrix hard = Matrix::Zero(items, slots);
  // Fix slots in order, each to the smallest original item index that keeps
  // the remaining problem optimal.
  Matrix rest = soft;
  std::vector<Eigen::Index> alive(items);
  for (Eigen::Index i = 0; i < items; ++i) alive[i] = i;
  double target = optimum_value(rest);
  for (Eigen::Index k = 0; k < slots; ++k) {
    const double tol = 1e-12 * std::max(1.0, std::abs(target));
    bool fixed = false;
    for (Eigen::Index r = 0; r < rest.rows(); ++r) {
      Matrix sub = without(rest, r, 0);
      const double with_r = rest(r, 0) + optimum_value(sub);
      if (with_r >= target - tol) {
        hard(alive[r], k) = 1.0;
        alive.erase(alive.begin() + r);
        target = with_r - rest(r, 0);
        rest = std::move(sub);
        fixed = true;
        break;
      }
    }
    if (!fixed) throw NumericError("rounding failed to find an optimal item");
  }
  return hard;
}

}  // namespace jal
