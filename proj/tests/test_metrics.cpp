#include <gtest/gtest.h>

#include "atx/metrics.hpp"
#include "test_util.hpp"

using namespace atx;

namespace {

// Independent arc-length resampler: binary search on the cumulative lengths.
Points resample(const Points& p, std::size_t n) {
  std::vector<double> cum{0.0};
  for (std::size_t i = 1; i < p.size(); ++i) cum.push_back(cum.back() + (p[i] - p[i - 1]).norm());
  Points out;
  for (std::size_t k = 0; k < n; ++k) {
    const double s = cum.back() * static_cast<double>(k) / static_cast<double>(n - 1);
    auto it = std::upper_bound(cum.begin(), cum.end(), s);
    std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), p.size() - 1);
    if (j == 0) j = 1;
    const double len = cum[j] - cum[j - 1];
    const double t = len > 0 ? std::clamp((s - cum[j - 1]) / len, 0.0, 1.0) : 0.0;
    out.push_back(p[j - 1] + t * (p[j] - p[j - 1]));
  }
  return out;
}

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2), v.end());
  const double hi = v[n / 2];
  if (n % 2) return hi;
  return 0.5 * (*std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2)) + hi);
}

Points random_walk(std::mt19937_64& rng, std::size_t n) {
  Points p{test::random_point(rng, 0, 3)};
  for (std::size_t i = 1; i < n; ++i) p.push_back(p.back() + test::random_point(rng, -0.3, 0.3));
  return p;
}

Points x_line(double x0, double x1, std::size_t n, double y = 0, double z = 0) {
  Points p;
  for (std::size_t i = 0; i < n; ++i) p.emplace_back(x0 + (x1 - x0) * i / (n - 1.0), y, z);
  return p;
}

}  // namespace

TEST(Aed, IdenticalIsZero) {
  const Points p = x_line(0, 3, 7);
  EXPECT_DOUBLE_EQ(trajectory_aed(p, p), 0.0);
}

TEST(Aed, ConstantOffset) {
  EXPECT_NEAR(trajectory_aed(x_line(0, 3, 7, 1.0), x_line(0, 3, 4)), 1.0, 1e-12);
}

TEST(Aed, DifferentLengthsComparedByArcFraction) {
  // Distances k/255 for k = 0..255, median (127 + 128) / 2 / 255.
  EXPECT_NEAR(trajectory_aed(x_line(0, 2, 3), x_line(0, 1, 2)), 0.5, 1e-12);
}

TEST(Aed, MatchesOracleAndIsSymmetric) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Points a = random_walk(rng, 5 + trial), b = random_walk(rng, 30 - trial);
    const std::size_t n = 64 + 16 * static_cast<std::size_t>(trial % 3);
    const Points ra = resample(a, n), rb = resample(b, n);
    std::vector<double> d;
    for (std::size_t i = 0; i < n; ++i) d.push_back((ra[i] - rb[i]).norm());
    EXPECT_NEAR(trajectory_aed(a, b, n), median_of(d), 1e-9);
    EXPECT_NEAR(trajectory_aed(a, b, n), trajectory_aed(b, a, n), 1e-12);
    EXPECT_GE(trajectory_aed(a, b, n), 0.0);
  }
}

TEST(Inliers, InclusiveThresholds) {
  const auto r = inlier_ratio(x_line(0, 3, 5, 1.0), x_line(0, 3, 5), {0.75, 1.0, 1.5});
  EXPECT_DOUBLE_EQ(r.at(0.75), 0.0);
  EXPECT_DOUBLE_EQ(r.at(1.0), 1.0);
  EXPECT_DOUBLE_EQ(r.at(1.5), 1.0);
}

TEST(Inliers, MatchOracleAndGrowWithThreshold) {
  std::mt19937_64 rng(2);
  const std::vector<double> ths{0.25, 0.5, 0.75, 1.0, 2.0};
  for (int trial = 0; trial < 20; ++trial) {
    const Points a = random_walk(rng, 12), b = random_walk(rng, 9);
    const auto r = inlier_ratio(a, b, ths, 128);
    const Points ra = resample(a, 128), rb = resample(b, 128);
    double prev = 0;
    for (double th : ths) {
      int n = 0;
      for (std::size_t i = 0; i < 128; ++i) n += (ra[i] - rb[i]).norm() <= th;
      EXPECT_NEAR(r.at(th), n / 128.0, 1e-12);
      EXPECT_GE(r.at(th), prev);
      prev = r.at(th);
    }
  }
}

TEST(Collision, CountsStrictlyCloserPoints) {
  const KdTree3 obs(Points{{0, 0, 0}});
  const Points traj{{0.05, 0, 0}, {0.1, 0, 0}, {0.2, 0, 0}, {1, 0, 0}};
  EXPECT_DOUBLE_EQ(collision_ratio(traj, obs, 0.1), 0.25);
  EXPECT_DOUBLE_EQ(collision_ratio(traj, obs, 0.5), 0.75);
  EXPECT_DOUBLE_EQ(collision_ratio({}, obs, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(collision_ratio(traj, KdTree3(Points{}), 0.1), 0.0);
}

TEST(Collision, UsesObjectPointsOnly) {
  Scene s = test::floor_scene(0, 2, 0, 2, 0.1);
  test::add_box(s, Vec3(1, 0, 1), Vec3(1.2, 0.4, 1.2), 0, 0.1);
  const Points traj{{0.3, 0, 0.3}, {1.1, 0.2, 1.1}};
  EXPECT_DOUBLE_EQ(collision_ratio(traj, s, 0.1), 0.5);
}

TEST(Collision, MatchesOracleAndIsMonotone) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Points obs = test::random_points(rng, 60, 0, 3), traj = test::random_points(rng, 40, 0, 3);
    const KdTree3 tree(obs);
    double prev = 0;
    for (double th : {0.05, 0.1, 0.2, 0.4, 0.8}) {
      int hits = 0;
      for (const auto& p : traj) {
        double best = 1e300;
        for (const auto& q : obs) best = std::min(best, (p - q).norm());
        hits += best < th;
      }
      const double r = collision_ratio(traj, tree, th);
      EXPECT_NEAR(r, hits / 40.0, 1e-12);
      EXPECT_GE(r, prev);
      prev = r;
    }
  }
}

TEST(WaypointAed, MedianOfPairedDistances) {
  const Points a{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, b{{0, 0, 0.5}, {1, 0, 2}, {2, 0, 1}};
  EXPECT_DOUBLE_EQ(waypoint_aed(a, b), 1.0);
  EXPECT_THROW(waypoint_aed(a, {a[0]}), Error);
}

TEST(LengthDistortion, Examples) {
  const Points src = x_line(0, 2, 5);
  EXPECT_NEAR(length_distortion(src, src), 0.0, 1e-12);
  EXPECT_NEAR(length_distortion(src, x_line(0, 4, 3)), 1.0, 1e-9);
  EXPECT_NEAR(length_distortion(src, x_line(5, 6, 9)), 0.5, 1e-9);
  EXPECT_THROW(length_distortion({{0, 0, 0}, {0, 0, 0}}, src), Error);
}

TEST(LengthDistortion, MatchesOracle) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Points a = random_walk(rng, 10), b = random_walk(rng, 14);
    const Points ra = resample(a, 100), rb = resample(b, 100);
    double sum = 0;
    for (std::size_t i = 0; i + 1 < 100; ++i) {
      const double ls = (ra[i + 1] - ra[i]).norm();
      sum += std::abs((rb[i + 1] - rb[i]).norm() - ls) / ls;
    }
    EXPECT_NEAR(length_distortion(a, b, 100), sum / 99, 1e-9);
  }
}

TEST(FeatureDistance, ZeroForSameSceneAndPath) {
  std::mt19937_64 rng(5);
  const Scene s = decode_scene(encode_scene(test::random_scene(rng, 200, 3, 4)));
  const KdTree3 tree(s.points);
  const Points path = random_walk(rng, 8);
  EXPECT_NEAR(feature_distance(path, path, s, tree, s, tree, 4, 64), 0.0, 1e-12);
}

TEST(FeatureDistance, OrthogonalSceneFeatures) {
  Scene a = test::floor_scene(0, 2, 0, 2, 0.2, 2), b = a;
  b.features.setZero();
  b.features.row(1).setOnes();
  const KdTree3 ta(a.points), tb(b.points);
  const Points path = x_line(0.1, 1.9, 4, 0, 1);
  EXPECT_NEAR(feature_distance(path, path, a, ta, b, tb, 4, 32), std::sqrt(2.0), 1e-6);
}

TEST(FeatureDistance, MatchesOracle) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Scene t = decode_scene(encode_scene(test::random_scene(rng, 150, 3, 3)));
    const Scene r = decode_scene(encode_scene(test::random_scene(rng, 150, 3, 3)));
    const KdTree3 tt(t.points), rt(r.points);
    const Points src = random_walk(rng, 6), pred = random_walk(rng, 9);
    auto interp = [](const Scene& s, const Vec3& x) {
      std::vector<std::pair<double, std::size_t>> d;
      for (std::size_t j = 0; j < s.size(); ++j) d.emplace_back((s.points[j] - x).norm(), j);
      std::sort(d.begin(), d.end());
      Eigen::VectorXd f = Eigen::VectorXd::Zero(s.dim());
      double ws = 0;
      for (int k = 0; k < 3; ++k) {
        const double w = 1.0 / (d[k].first + 1e-6);
        f += w * s.features.col(static_cast<Eigen::Index>(d[k].second)).cast<double>();
        ws += w;
      }
      return Eigen::VectorXd(f / ws);
    };
    const Points ra = resample(src, 50), rb = resample(pred, 50);
    double sum = 0;
    for (std::size_t i = 0; i < 50; ++i) sum += (interp(t, ra[i]) - interp(r, rb[i])).norm();
    EXPECT_NEAR(feature_distance(src, pred, t, tt, r, rt, 3, 50), sum / 50, 1e-9);
  }
}

TEST(ComputeMetrics, SingleGroundTruthFillsRequestedFields) {
  Config cfg;
  const Trajectory pred = test::polyline(x_line(0, 2, 5, 0, 0.5)), gt = test::polyline(x_line(0, 2, 5, 0, 1.0));
  const MetricReport r = compute_metrics(pred, gt, cfg);
  EXPECT_NEAR(r.trajectory_aed, 0.5, 1e-12);
  EXPECT_EQ(r.inlier_ratio.size(), cfg.inlier_thresholds.size());
  EXPECT_FALSE(r.has_waypoint_aed);
  EXPECT_FALSE(r.has_feature_distance);
  EXPECT_FALSE(r.has_length_distortion);

  Scene ref = test::floor_scene(0, 2, 0, 2, 0.1);
  const Scene tgt = ref;
  const Trajectory src = pred;
  const MetricReport full = compute_metrics(pred, gt, cfg, &ref, &tgt, &src);
  EXPECT_TRUE(full.has_feature_distance);
  EXPECT_TRUE(full.has_length_distortion);
  EXPECT_NEAR(full.length_distortion, 0.0, 1e-9);
  EXPECT_DOUBLE_EQ(full.collision_ratio, 0.0);
}

TEST(ComputeMetrics, WaypointsComparedWhenCountsMatch) {
  Trajectory pred = test::polyline(x_line(0, 3, 4)), gt = test::polyline(x_line(0, 3, 4, 0, 2));
  pred.waypoints = {0, 3};
  gt.waypoints = {0, 3};
  const MetricReport r = compute_metrics(pred, gt, Config{});
  ASSERT_TRUE(r.has_waypoint_aed);
  EXPECT_DOUBLE_EQ(r.waypoint_aed, 2.0);
  gt.waypoints = {0, 1, 3};
  EXPECT_FALSE(compute_metrics(pred, gt, Config{}).has_waypoint_aed);
}

TEST(ComputeMetrics, BestOverGroundTruths) {
  const Config cfg;
  const Trajectory pred = test::polyline(x_line(0, 2, 5));
  const std::vector<Trajectory> gts{test::polyline(x_line(0, 2, 5, 0, 1.2)), test::polyline(x_line(0, 2, 5, 0, 0.8))};
  const MetricReport r = compute_metrics(pred, gts, cfg);
  EXPECT_NEAR(r.trajectory_aed, 0.8, 1e-12);
  EXPECT_DOUBLE_EQ(r.inlier_ratio.at(1.0), 1.0);
  EXPECT_DOUBLE_EQ(r.inlier_ratio.at(0.75), 0.0);
  // Reduction is per metric, not per ground truth.
  for (const auto& g : gts) {
    const MetricReport one = compute_metrics(pred, g, cfg);
    EXPECT_LE(r.trajectory_aed, one.trajectory_aed);
    for (const auto& [th, v] : one.inlier_ratio) EXPECT_GE(r.inlier_ratio.at(th), v);
  }
  EXPECT_THROW(compute_metrics(pred, std::vector<Trajectory>{}, cfg), Error);
}
