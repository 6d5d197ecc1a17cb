#pragma once

// Exact assignment references: permutation enumeration for tiny instances and
// successive-shortest-path min-cost flow (Bellman-Ford, no potentials) for the
// rest. Both are independent of the library's Hungarian solver.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

namespace oracle {

inline std::vector<std::size_t> assignment_by_permutation(const std::vector<double>& cost,
                                                          std::size_t n) {
  std::vector<std::size_t> perm(n), best;
  std::iota(perm.begin(), perm.end(), 0);
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += cost[i * n + perm[i]];
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline std::vector<std::size_t> assignment_by_min_cost_flow(const std::vector<double>& cost,
                                                            std::size_t n) {
  // Residual graph on rows [0,n) and columns [n,2n): row i -> col j has
  // reduced cost cost[i][j] when unmatched, matched edges reverse with -cost.
  std::vector<long> row_of_col(n, -1), col_of_row(n, -1);
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t augment = 0; augment < n; ++augment) {
    // Shortest path from any free row to any free column.
    std::vector<double> dist(2 * n, inf);
    std::vector<long> parent(2 * n, -1);
    for (std::size_t i = 0; i < n; ++i)
      if (col_of_row[i] < 0) dist[i] = 0.0;
    for (std::size_t round = 0; round < 2 * n; ++round) {
      bool changed = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (dist[i] == inf) continue;
        for (std::size_t j = 0; j < n; ++j) {
          if (col_of_row[i] == static_cast<long>(j)) continue;
          const double nd = dist[i] + cost[i * n + j];
          if (nd < dist[n + j]) {
            dist[n + j] = nd;
            parent[n + j] = static_cast<long>(i);
            changed = true;
          }
        }
      }
      for (std::size_t j = 0; j < n; ++j) {
        const long r = row_of_col[j];
        if (r < 0 || dist[n + j] == inf) continue;
        const double nd = dist[n + j] - cost[static_cast<std::size_t>(r) * n + j];
        if (nd < dist[r]) {
          dist[r] = nd;
          parent[r] = static_cast<long>(n + j);
          changed = true;
        }
      }
      if (!changed) break;
    }
    std::size_t target = 0;
    double best = inf;
    for (std::size_t j = 0; j < n; ++j)
      if (row_of_col[j] < 0 && dist[n + j] < best) {
        best = dist[n + j];
        target = j;
      }
    // Walk back, flipping edges.
    long node = static_cast<long>(n + target);
    while (node >= 0) {
      const long row = parent[node];
      const std::size_t col = static_cast<std::size_t>(node) - n;
      const long prev = parent[row];
      row_of_col[col] = row;
      col_of_row[row] = static_cast<long>(col);
      node = prev;
    }
  }
  return std::vector<std::size_t>(col_of_row.begin(), col_of_row.end());
}

}  // namespace oracle
