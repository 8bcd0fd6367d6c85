#pragma once

#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <tuple>
#include <algorithm>
#include <vector>

#include "atx/common.hpp"
#include "atx/scene_io.hpp"

namespace atx {

/// XZ occupancy grid over the navigable bounding box (plus half a cell on
/// each side). Cell (ix, iz) covers
/// [origin + i*res, origin + (i+1)*res) on each axis.
struct OccupancyGrid {
  Vec2 origin = Vec2::Zero();
  double resolution = 0.1;
  int nx = 0, nz = 0;
  std::vector<std::uint8_t> free;  // row-major, index = iz * nx + ix
  double height_y = 0.0;

  int index(int ix, int iz) const { return iz * nx + ix; }
  bool inside(int ix, int iz) const { return ix >= 0 && iz >= 0 && ix < nx && iz < nz; }
  bool is_free(int ix, int iz) const { return inside(ix, iz) && free[index(ix, iz)] != 0; }
  Vec2 center(int ix, int iz) const { return origin + resolution * Vec2(ix + 0.5, iz + 0.5); }
  Vec3 world(int ix, int iz) const {
    const Vec2 c = center(ix, iz);
    return {c.x(), height_y, c.y()};
  }
  std::pair<int, int> cell_of(const Vec2& p) const {
    return {static_cast<int>(std::floor((p.x() - origin.x()) / resolution)),
            static_cast<int>(std::floor((p.y() - origin.y()) / resolution))};
  }
  std::size_t free_count() const {
    std::size_t n = 0;
    for (auto f : free) n += f;
    return n;
  }
};

/// A cell is free iff it holds at least one navigable point and no object
/// point lies within `inflation` (XZ distance) of its center.
inline OccupancyGrid build_grid(const Scene& scene, double resolution, double inflation) {
  if (!(resolution > 0)) throw Error(Stage::Plan, "grid resolution must be > 0");
  Points nav;
  for (std::size_t i = 0; i < scene.size(); ++i)
    if (scene.is_open(i)) nav.push_back(scene.points[i]);
  if (nav.empty()) throw Error(Stage::Plan, "scene has no navigable points");

  OccupancyGrid g;
  g.resolution = resolution;
  Vec2 lo = xz(nav.front()), hi = lo;
  std::vector<double> ys;
  ys.reserve(nav.size());
  for (const auto& p : nav) {
    lo = lo.cwiseMin(xz(p));
    hi = hi.cwiseMax(xz(p));
    ys.push_back(p.y());
  }
  g.height_y = median(std::move(ys));
  // Half-cell margin: samples on a grid of pitch `resolution` land on cell
  // centers instead of cell borders.
  g.origin = lo - Vec2::Constant(resolution / 2);
  g.nx = static_cast<int>(std::floor((hi.x() - g.origin.x()) / resolution)) + 1;
  g.nz = static_cast<int>(std::floor((hi.y() - g.origin.y()) / resolution)) + 1;
  g.free.assign(static_cast<std::size_t>(g.nx) * g.nz, 0);

  for (const auto& p : nav) {
    const auto [ix, iz] = g.cell_of(xz(p));
    g.free[g.index(ix, iz)] = 1;
  }
  const int reach = static_cast<int>(std::ceil(inflation / resolution)) + 1;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    if (scene.is_open(i)) continue;
    const Vec2 o = xz(scene.points[i]);
    auto [cx, cz] = g.cell_of(o);
    for (int iz = cz - reach; iz <= cz + reach; ++iz) {
      for (int ix = cx - reach; ix <= cx + reach; ++ix) {
        if (!g.inside(ix, iz)) continue;
        if ((g.center(ix, iz) - o).norm() <= inflation) g.free[g.index(ix, iz)] = 0;
      }
    }
  }
  if (g.free_count() == 0) throw Error(Stage::Plan, "occupancy grid has no free cells");
  return g;
}

struct PlanResult {
  Points path;
  std::vector<std::pair<int, int>> cells;
  int straight_moves = 0;
  int diagonal_moves = 0;
  double cost = 0.0;  // meters
};

inline double move_cost(int straight, int diagonal, double resolution) {
  return (straight + std::sqrt(2.0) * diagonal) * resolution;
}

/// Nearest free cell center (XZ) within max_radius; ties to the smaller
/// row-major index. Throws when none exists.
inline std::pair<int, int> snap_to_free(const OccupancyGrid& g, const Vec3& p, double max_radius) {
  auto [cx, cz] = g.cell_of(xz(p));
  const int reach = static_cast<int>(std::ceil(max_radius / g.resolution)) + 1;
  double best = std::numeric_limits<double>::infinity();
  std::pair<int, int> cell{-1, -1};
  for (int iz = cz - reach; iz <= cz + reach; ++iz) {
    for (int ix = cx - reach; ix <= cx + reach; ++ix) {
      if (!g.is_free(ix, iz)) continue;
      const double d = (g.center(ix, iz) - xz(p)).norm();
      if (d > max_radius) continue;
      if (d < best) best = d, cell = {ix, iz};
    }
  }
  if (cell.first < 0)
    throw Error(Stage::Plan, "no free cell within " + std::to_string(max_radius) + " m of (" + std::to_string(p.x()) +
                                 ", " + std::to_string(p.z()) + ")");
  return cell;
}

namespace detail {

inline constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
inline constexpr int kDz[8] = {0, 0, 1, -1, 1, -1, 1, -1};

/// 8-connected moves; a diagonal needs both orthogonal neighbors free.
template <class Fn>
void for_each_move(const OccupancyGrid& g, int ix, int iz, Fn&& fn) {
  for (int k = 0; k < 8; ++k) {
    const int jx = ix + kDx[k], jz = iz + kDz[k];
    if (!g.is_free(jx, jz)) continue;
    const bool diag = k >= 4;
    if (diag && (!g.is_free(ix + kDx[k], iz) || !g.is_free(ix, iz + kDz[k]))) continue;
    fn(jx, jz, diag);
  }
}

inline std::size_t component_size(const OccupancyGrid& g, int sx, int sz) {
  std::vector<char> seen(g.free.size(), 0);
  std::deque<std::pair<int, int>> q{{sx, sz}};
  seen[g.index(sx, sz)] = 1;
  std::size_t n = 0;
  while (!q.empty()) {
    auto [x, z] = q.front();
    q.pop_front();
    ++n;
    for_each_move(g, x, z, [&](int jx, int jz, bool) {
      if (!seen[g.index(jx, jz)]) seen[g.index(jx, jz)] = 1, q.emplace_back(jx, jz);
    });
  }
  return n;
}

}  // namespace detail

namespace detail {

/// Path label: move counts give the exact length; `deviation` is the summed
/// squared distance (cell units) of the visited cells from the start-goal
/// segment and breaks ties between equal-length paths.
struct PathLabel {
  int straight = 0, diagonal = 0;
  double deviation = 0.0;
  double length() const { return straight + std::sqrt(2.0) * diagonal; }
  bool same_length(const PathLabel& o) const { return straight == o.straight && diagonal == o.diagonal; }
  bool operator<(const PathLabel& o) const {
    if (!same_length(o)) return length() < o.length();
    return deviation < o.deviation;
  }
};

inline double segment_distance2(double px, double pz, double ax, double az, double bx, double bz) {
  const double dx = bx - ax, dz = bz - az;
  const double l2 = dx * dx + dz * dz;
  double t = l2 > 0 ? ((px - ax) * dx + (pz - az) * dz) / l2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = px - (ax + t * dx), ez = pz - (az + t * dz);
  return ex * ex + ez * ez;
}

}  // namespace detail

/// Cost-optimal 8-connected path between the snapped endpoints (A* with the
/// Euclidean heuristic). Among equal-cost paths the one hugging the straight
/// start-goal segment most closely is returned, so the result does not
/// depend on grid orientation. Returned points are cell centers at height_y.
inline PlanResult astar(const OccupancyGrid& g, const Vec3& start, const Vec3& goal, double snap_radius = 1.0) {
  const auto [sx, sz] = snap_to_free(g, start, snap_radius);
  const auto [gx, gz] = snap_to_free(g, goal, snap_radius);
  const int s = g.index(sx, sz), t = g.index(gx, gz);

  std::vector<detail::PathLabel> label(g.free.size());
  std::vector<char> reached(g.free.size(), 0);
  std::vector<int> parent(g.free.size(), -1);
  auto h = [&](int ix, int iz) { return std::hypot(double(ix - gx), double(iz - gz)); };
  auto dev = [&](int ix, int iz) { return detail::segment_distance2(ix, iz, sx, sz, gx, gz); };
  // Queue entries carry a snapshot of the label; stale entries are skipped.
  using Entry = std::tuple<double, double, int, int, int>;  // f, deviation, index, straight, diagonal
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  label[s] = {0, 0, dev(sx, sz)};
  reached[s] = 1;
  open.emplace(h(sx, sz), label[s].deviation, s, 0, 0);
  // Labels can still improve on the deviation key after a cell is expanded,
  // so cells are re-expanded on improvement and the search runs until every
  // entry with f up to the goal length has been processed.
  constexpr double slack = 1e-9;
  while (!open.empty()) {
    const auto [f, d, cur, st, dg] = open.top();
    open.pop();
    const auto& lc = label[cur];
    if (lc.straight != st || lc.diagonal != dg || lc.deviation != d) continue;
    if (reached[t] && f > label[t].length() + slack) break;
    const int cx = cur % g.nx, cz = cur / g.nx;
    const detail::PathLabel base = lc;
    detail::for_each_move(g, cx, cz, [&](int jx, int jz, bool diag) {
      const int j = g.index(jx, jz);
      detail::PathLabel cand = base;
      (diag ? cand.diagonal : cand.straight)++;
      cand.deviation += dev(jx, jz);
      if (reached[j] && !(cand < label[j])) return;
      label[j] = cand;
      reached[j] = 1;
      parent[j] = cur;
      open.emplace(cand.length() + h(jx, jz), cand.deviation, j, cand.straight, cand.diagonal);
    });
  }
  if (!reached[t]) {
    throw Error(Stage::Plan, "no path: start component has " + std::to_string(detail::component_size(g, sx, sz)) +
                                 " cells, goal component has " + std::to_string(detail::component_size(g, gx, gz)) +
                                 " cells");
  }
  PlanResult r;
  for (int c = t; c >= 0; c = c == s ? -1 : parent[c]) r.cells.emplace_back(c % g.nx, c / g.nx);
  std::reverse(r.cells.begin(), r.cells.end());
  for (std::size_t k = 0; k < r.cells.size(); ++k) {
    r.path.push_back(g.world(r.cells[k].first, r.cells[k].second));
    if (k == 0) continue;
    const bool diag = r.cells[k].first != r.cells[k - 1].first && r.cells[k].second != r.cells[k - 1].second;
    (diag ? r.diagonal_moves : r.straight_moves)++;
  }
  r.cost = move_cost(r.straight_moves, r.diagonal_moves, g.resolution);
  return r;
}

/// A* through consecutive waypoints; shared joints appear once and
/// waypoint indices mark them. Consecutive waypoints that snap to the same
/// cell collapse into one.
inline Trajectory plan_through(const OccupancyGrid& g, const Points& waypoints, double snap_radius = 1.0,
                               double* total_cost = nullptr) {
  if (waypoints.size() < 2) throw Error(Stage::Plan, "plan_through needs at least 2 waypoints");
  Trajectory out;
  double cost = 0.0;
  for (std::size_t w = 0; w + 1 < waypoints.size(); ++w) {
    PlanResult seg;
    try {
      seg = astar(g, waypoints[w], waypoints[w + 1], snap_radius);
    } catch (const Error& e) {
      throw Error(Stage::Plan, "segment " + std::to_string(w) + " -> " + std::to_string(w + 1) + ": " + e.message());
    }
    cost += seg.cost;
    if (out.points.empty()) {
      out.points.push_back(seg.path.front());
      out.waypoints.push_back(0);
    }
    for (std::size_t k = 1; k < seg.path.size(); ++k) out.points.push_back(seg.path[k]);
    if (out.points.size() - 1 != out.waypoints.back()) out.waypoints.push_back(out.points.size() - 1);
  }
  if (out.points.size() < 2) throw Error(Stage::Plan, "all waypoints snap to a single cell");
  if (total_cost) *total_cost = cost;
  return out;
}

}  // namespace atx
