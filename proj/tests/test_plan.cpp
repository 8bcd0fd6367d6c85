#include <queue>

#include <gtest/gtest.h>

#include "atx/plan.hpp"
#include "test_util.hpp"

using namespace atx;

namespace {

OccupancyGrid grid_from(const std::vector<std::string>& rows, double res = 0.1) {
  OccupancyGrid g;
  g.resolution = res;
  g.nz = static_cast<int>(rows.size());
  g.nx = static_cast<int>(rows[0].size());
  g.free.assign(static_cast<std::size_t>(g.nx * g.nz), 0);
  for (int iz = 0; iz < g.nz; ++iz)
    for (int ix = 0; ix < g.nx; ++ix) g.free[g.index(ix, iz)] = rows[iz][ix] == '.';
  return g;
}

OccupancyGrid random_grid(std::mt19937_64& rng, int nx, int nz, double density) {
  OccupancyGrid g;
  g.nx = nx;
  g.nz = nz;
  std::bernoulli_distribution blocked(density);
  for (int i = 0; i < nx * nz; ++i) g.free.push_back(blocked(rng) ? 0 : 1);
  return g;
}

// Plain Dijkstra over the same move rules; returns -1 when unreachable.
double dijkstra(const OccupancyGrid& g, std::pair<int, int> s, std::pair<int, int> t) {
  std::vector<double> dist(g.free.size(), std::numeric_limits<double>::infinity());
  using E = std::pair<double, int>;
  std::priority_queue<E, std::vector<E>, std::greater<>> q;
  dist[g.index(s.first, s.second)] = 0;
  q.emplace(0.0, g.index(s.first, s.second));
  while (!q.empty()) {
    auto [d, c] = q.top();
    q.pop();
    if (d > dist[c]) continue;
    const int x = c % g.nx, z = c / g.nx;
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dz = -1; dz <= 1; ++dz) {
        if (!dx && !dz) continue;
        if (!g.is_free(x + dx, z + dz)) continue;
        if (dx && dz && (!g.is_free(x + dx, z) || !g.is_free(x, z + dz))) continue;
        const double nd = d + ((dx && dz) ? std::sqrt(2.0) : 1.0) * g.resolution;
        const int j = g.index(x + dx, z + dz);
        if (nd < dist[j]) dist[j] = nd, q.emplace(nd, j);
      }
    }
  }
  const double d = dist[g.index(t.first, t.second)];
  return std::isinf(d) ? -1.0 : d;
}

bool valid_path(const OccupancyGrid& g, const PlanResult& r) {
  for (std::size_t k = 0; k < r.cells.size(); ++k) {
    const auto [x, z] = r.cells[k];
    if (!g.is_free(x, z)) return false;
    if (k == 0) continue;
    const int dx = x - r.cells[k - 1].first, dz = z - r.cells[k - 1].second;
    if (std::abs(dx) > 1 || std::abs(dz) > 1 || (!dx && !dz)) return false;
    if (dx && dz && (!g.is_free(x, z - dz) || !g.is_free(x - dx, z))) return false;
  }
  return true;
}

}  // namespace

TEST(Grid, EmptyRoomIsAllFree) {
  const Scene s = test::floor_scene(0, 2, 0, 1, 0.1);
  const OccupancyGrid g = build_grid(s, 0.1, 0.2);
  EXPECT_EQ(g.nx, 21);
  EXPECT_EQ(g.nz, 11);
  EXPECT_EQ(g.free_count(), 21u * 11u);
  EXPECT_NEAR(g.origin.x(), -0.05, 1e-12);
  for (const auto& p : s.points) {
    const auto [ix, iz] = g.cell_of(xz(p));
    EXPECT_LT((g.center(ix, iz) - xz(p)).norm(), 1e-9);
  }
}

TEST(Grid, ObjectBlocksInflatedCells) {
  Scene s = test::floor_scene(0, 3, 0, 3, 0.1);
  test::add_box(s, Vec3(1.2, 0.0, 1.2), Vec3(1.9, 0.5, 1.9), 0, 0.1);  // 0.7 m box
  const OccupancyGrid g = build_grid(s, 0.1, 0.2);
  std::size_t expect = 0;
  for (int iz = 0; iz < g.nz; ++iz) {
    for (int ix = 0; ix < g.nx; ++ix) {
      bool has_nav = false;
      double nearest = 1e300;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.is_open(i)) {
          has_nav = has_nav || g.cell_of(xz(s.points[i])) == std::make_pair(ix, iz);
        } else {
          nearest = std::min(nearest, (g.center(ix, iz) - xz(s.points[i])).norm());
        }
      }
      const bool f = has_nav && nearest > 0.2;
      EXPECT_EQ(g.is_free(ix, iz), f) << ix << "," << iz;
      expect += f;
    }
  }
  EXPECT_EQ(g.free_count(), expect);
  EXPECT_FALSE(g.is_free(g.cell_of({1.5, 1.5}).first, g.cell_of({1.5, 1.5}).second));
}

TEST(Grid, RejectsDegenerateInput) {
  const Scene s = test::floor_scene(0, 1, 0, 1, 0.1);
  EXPECT_THROW(build_grid(s, 0.0, 0.2), Error);
  Scene only_objects = s;
  for (auto& id : only_objects.instance_id) id = 0;
  EXPECT_THROW(build_grid(only_objects, 0.1, 0.2), Error);
}

TEST(AStar, StartEqualsGoal) {
  const OccupancyGrid g = grid_from({"...", "...", "..."});
  const PlanResult r = astar(g, g.world(1, 1), g.world(1, 1));
  ASSERT_EQ(r.path.size(), 1u);
  EXPECT_DOUBLE_EQ(r.cost, 0.0);
}

TEST(AStar, CorridorCost) {
  const OccupancyGrid g = grid_from({".........."});
  const PlanResult r = astar(g, g.world(0, 0), g.world(9, 0));
  EXPECT_EQ(r.path.size(), 10u);
  EXPECT_EQ(r.straight_moves, 9);
  EXPECT_NEAR(r.cost, 0.9, 1e-12);
}

TEST(AStar, NoCornerCutting) {
  const OccupancyGrid g = grid_from({".#", "#."});
  EXPECT_THROW(astar(g, g.world(0, 0), g.world(1, 1), 0.05), Error);
}

TEST(AStar, DisconnectedRegionsReportComponents) {
  const OccupancyGrid g = grid_from({"..#..", "..#..", "..#.."});
  try {
    astar(g, g.world(0, 0), g.world(4, 2), 0.05);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.stage(), Stage::Plan);
    EXPECT_NE(e.message().find("6 cells"), std::string::npos);
  }
}

TEST(AStar, SnapsToNearestFreeCell) {
  const OccupancyGrid g = grid_from({"#....", "#...."});
  const auto cell = snap_to_free(g, g.world(0, 0), 0.5);
  EXPECT_EQ(cell, std::make_pair(1, 0));
  EXPECT_THROW(snap_to_free(g, Vec3(10, 0, 10), 0.5), Error);
}

TEST(AStar, MatchesDijkstraOnRandomGrids) {
  std::mt19937_64 rng(11);
  int solved = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const OccupancyGrid g = random_grid(rng, 20 + trial % 7, 15 + trial % 5, 0.25);
    std::vector<std::pair<int, int>> cells;
    for (int iz = 0; iz < g.nz; ++iz)
      for (int ix = 0; ix < g.nx; ++ix)
        if (g.is_free(ix, iz)) cells.emplace_back(ix, iz);
    std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
    const auto s = cells[pick(rng)], t = cells[pick(rng)];
    const double want = dijkstra(g, s, t);
    if (want < 0) {
      EXPECT_THROW(astar(g, g.world(s.first, s.second), g.world(t.first, t.second), 0.05), Error);
      continue;
    }
    const PlanResult r = astar(g, g.world(s.first, s.second), g.world(t.first, t.second), 0.05);
    EXPECT_NEAR(r.cost, want, 1e-9) << "trial " << trial;
    EXPECT_NEAR(r.cost, move_cost(r.straight_moves, r.diagonal_moves, g.resolution), 1e-12);
    EXPECT_TRUE(valid_path(g, r));
    EXPECT_EQ(r.cells.front(), s);
    EXPECT_EQ(r.cells.back(), t);
    ++solved;
  }
  EXPECT_GT(solved, 50);
}

TEST(AStar, DiagonalRoomPathHugsSegment) {
  const OccupancyGrid g = grid_from({".....", ".....", ".....", ".....", "....."});
  const PlanResult r = astar(g, g.world(0, 0), g.world(4, 4));
  EXPECT_EQ(r.diagonal_moves, 4);
  EXPECT_EQ(r.straight_moves, 0);
}

TEST(PlanThrough, ConcatenatesSegments) {
  const OccupancyGrid g = grid_from({"..........", "..........", ".....#....", ".........."});
  const Points wps{g.world(0, 0), g.world(9, 0), g.world(9, 3), g.world(0, 3)};
  double total = 0;
  const Trajectory t = plan_through(g, wps, 0.05, &total);
  ASSERT_EQ(t.waypoints.size(), 4u);
  EXPECT_EQ(t.waypoints.front(), 0u);
  EXPECT_EQ(t.waypoints.back(), t.points.size() - 1);
  double sum = 0;
  for (std::size_t w = 0; w + 1 < wps.size(); ++w) sum += astar(g, wps[w], wps[w + 1], 0.05).cost;
  EXPECT_NEAR(total, sum, 1e-12);
  for (std::size_t w = 0; w < wps.size(); ++w) EXPECT_LT((t.points[t.waypoints[w]] - wps[w]).norm(), 1e-12);
  for (std::size_t w = 1; w < t.waypoints.size(); ++w) EXPECT_LT(t.waypoints[w - 1], t.waypoints[w]);
  EXPECT_NO_THROW(validate(t));
}

TEST(PlanThrough, CollapsesRepeatedWaypoints) {
  const OccupancyGrid g = grid_from({"....."});
  const Trajectory t = plan_through(g, {g.world(0, 0), g.world(2, 0), g.world(2, 0), g.world(4, 0)}, 0.05);
  EXPECT_EQ(t.points.size(), 5u);
  EXPECT_EQ(t.waypoints, (std::vector<std::uint64_t>{0, 2, 4}));
}

TEST(PlanThrough, ErrorsNameTheSegment) {
  const OccupancyGrid g = grid_from({"..#.."});
  try {
    plan_through(g, {g.world(0, 0), g.world(1, 0), g.world(4, 0)}, 0.05);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(e.message().find("segment 1 -> 2"), std::string::npos);
  }
  EXPECT_THROW(plan_through(g, {g.world(0, 0)}), Error);
}
