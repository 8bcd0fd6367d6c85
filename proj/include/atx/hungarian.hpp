#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace atx {

/// Maximum-weight assignment on a rectangular matrix (Kuhn-Munkres with
/// potentials, O(n^2 m)). Matches min(rows, cols) pairs. Entries equal to
/// -infinity are forbidden; rows that can only be matched through a
/// forbidden entry are reported as unmatched (-1).
///
/// Returns row -> column (or -1).
inline std::vector<int> max_weight_assignment(const Eigen::MatrixXd& w) {
  const int rows = static_cast<int>(w.rows()), cols = static_cast<int>(w.cols());
  if (rows == 0 || cols == 0) return std::vector<int>(rows, -1);
  const bool transposed = rows > cols;
  const int n = transposed ? cols : rows;
  const int m = transposed ? rows : cols;
  auto weight = [&](int i, int j) { return transposed ? w(j, i) : w(i, j); };

  double finite_max = 0.0, finite_min = 0.0;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (std::isfinite(w(i, j))) finite_max = std::max(finite_max, w(i, j)), finite_min = std::min(finite_min, w(i, j));
  // Forbidden entries cost more than any complete feasible assignment.
  const double big = (finite_max - finite_min + 1.0) * (n + 1) * 4.0;
  auto cost = [&](int i, int j) {
    const double v = weight(i, j);
    return std::isfinite(v) ? finite_max - v : big;
  };

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) minv[j] = cur, way[j] = j0;
        if (minv[j] < delta) delta = minv[j], j1 = j;
      }
      for (int j = 0; j <= m; ++j) {
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
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> out(rows, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    const int i = p[j] - 1, c = j - 1;
    if (!std::isfinite(weight(i, c))) continue;
    if (transposed) out[c] = i;
    else out[i] = c;
  }
  return out;
}

/// Total weight of an assignment produced by max_weight_assignment.
inline double assignment_weight(const Eigen::MatrixXd& w, const std::vector<int>& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] >= 0) s += w(static_cast<Eigen::Index>(i), a[i]);
  return s;
}

}  // namespace atx
