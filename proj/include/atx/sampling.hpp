#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "atx/common.hpp"

namespace atx {

/// Farthest-point sampling over `pts[idx]`, starting at idx[start].
/// Returns up to `count` entries of `idx` (all of them if count >= size).
/// Distance ties resolve to the earlier entry.
inline std::vector<std::size_t> farthest_point_sample(const Points& pts, const std::vector<std::size_t>& idx,
                                                      std::size_t count, std::size_t start = 0) {
  if (idx.empty() || count == 0) return {};
  if (count >= idx.size()) return idx;
  std::vector<double> d(idx.size(), std::numeric_limits<double>::infinity());
  std::vector<std::size_t> out;
  out.reserve(count);
  std::size_t cur = std::min(start, idx.size() - 1);
  for (std::size_t s = 0; s < count; ++s) {
    out.push_back(idx[cur]);
    const Vec3& c = pts[idx[cur]];
    std::size_t next = 0;
    double far = -1.0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      d[i] = std::min(d[i], (pts[idx[i]] - c).squaredNorm());
      if (d[i] > far) far = d[i], next = i;
    }
    cur = next;
  }
  return out;
}

inline std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

/// Cumulative arc length, starting at 0.
inline std::vector<double> arc_lengths(const Points& p) {
  std::vector<double> s(p.size(), 0.0);
  for (std::size_t i = 1; i < p.size(); ++i) s[i] = s[i - 1] + (p[i] - p[i - 1]).norm();
  return s;
}

/// `n` points spaced uniformly by arc length, endpoints included.
inline Points resample_by_arclength(const Points& p, std::size_t n) {
  if (p.empty() || n == 0) return {};
  if (p.size() == 1 || n == 1) return Points(n, p.front());
  const auto s = arc_lengths(p);
  const double total = s.back();
  Points out;
  out.reserve(n);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double target = total * static_cast<double>(k) / static_cast<double>(n - 1);
    while (seg + 2 < p.size() && s[seg + 1] < target) ++seg;
    const double len = s[seg + 1] - s[seg];
    const double t = len > 0 ? std::clamp((target - s[seg]) / len, 0.0, 1.0) : 0.0;
    out.push_back(p[seg] + t * (p[seg + 1] - p[seg]));
  }
  out.back() = p.back();
  return out;
}

/// `count` evenly spaced indices in [0, m), first and last included, deduplicated.
inline std::vector<std::size_t> evenly_spaced_indices(std::size_t m, std::size_t count) {
  std::vector<std::size_t> out;
  if (m == 0 || count == 0) return out;
  if (count == 1) return {0};
  for (std::size_t j = 0; j < count; ++j) {
    const auto i = static_cast<std::size_t>(
        std::llround(static_cast<double>(j) * static_cast<double>(m - 1) / static_cast<double>(count - 1)));
    if (out.empty() || out.back() != i) out.push_back(i);
  }
  return out;
}

}  // namespace atx
