#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace herdtrack {

struct AssignmentResult {
  std::vector<int> mapping;          // row index -> column index, -1 unmatched
  double total_cost = 0.0;
  std::vector<double> per_pair_cost; // cost of each matched row, -1 rows skipped
};

namespace detail {

/// Jonker-Volgenant style shortest augmenting path solver on a square
/// matrix. Returns row -> column.
inline std::vector<int> solve_square(const std::vector<std::vector<double>>& a,
                                     int n) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j)
        if (!used[j]) {
          double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
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
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace detail

/// Minimum-cost assignment. Rectangular matrices are padded internally with
/// a large sentinel; padded pairs are dropped from the result, so exactly
/// min(rows, cols) pairs are reported.
inline AssignmentResult hungarian(
    const std::vector<std::vector<double>>& cost) {
  const int rows = static_cast<int>(cost.size());
  const int cols = rows > 0 ? static_cast<int>(cost[0].size()) : 0;
  AssignmentResult result;
  if (rows == 0 || cols == 0) return result;

  double max_abs = 1.0;
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(cost[i].size()) != cols)
      throw std::invalid_argument("hungarian: ragged cost matrix");
    for (double c : cost[i]) {
      if (std::isnan(c)) throw std::invalid_argument("hungarian: NaN entry");
      if (!std::isfinite(c))
        throw std::invalid_argument("hungarian: non-finite entry");
      max_abs = std::max(max_abs, std::fabs(c));
    }
  }

  const int n = std::max(rows, cols);
  const double sentinel = 10.0 * max_abs;
  std::vector<std::vector<double>> padded(n, std::vector<double>(n, sentinel));
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) padded[i][j] = cost[i][j];

  std::vector<int> row_to_col = detail::solve_square(padded, n);

  result.mapping.assign(rows, -1);
  result.per_pair_cost.assign(rows, -1.0);
  for (int i = 0; i < rows; ++i) {
    int j = row_to_col[i];
    if (j >= 0 && j < cols) {
      result.mapping[i] = j;
      result.per_pair_cost[i] = cost[i][j];
      result.total_cost += cost[i][j];
    }
  }
  return result;
}

}  // namespace herdtrack
