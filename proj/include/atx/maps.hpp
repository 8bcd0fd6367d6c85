#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "atx/common.hpp"
#include "atx/config.hpp"
#include "atx/kdtree.hpp"
#include "atx/sampling.hpp"
#include "atx/scene_io.hpp"
#include "atx/smooth_map.hpp"

namespace atx {

/// T(x) = L (x - o_t) + o_r with L = S * R_y(theta) * F.
struct SimilaritySeed {
  Mat3 linear = Mat3::Identity();
  Vec3 src_origin = Vec3::Zero();
  Vec3 dst_origin = Vec3::Zero();
  int rotation = 0;    // index into the N_r rotations
  int reflection = 0;  // 0 none, 1 flip-x, 2 flip-z, 3 flip-xz
  bool scaled = false;
  std::size_t tgt_node = 0, ref_node = 0;

  Vec3 operator()(const Vec3& x) const { return linear * (x - src_origin) + dst_origin; }
  Affine affine() const { return make_affine(linear, dst_origin - linear * src_origin); }
};

/// Points with features plus a 3D index over the positions.
struct PointSet {
  Points points;
  Eigen::MatrixXf features;  // D x N
  std::vector<std::size_t> scene_index;
  KdTree3 tree;

  PointSet() = default;
  PointSet(const Scene& s, const std::vector<std::size_t>& idx) : points(), features(s.features.rows(), static_cast<Eigen::Index>(idx.size())), scene_index(idx) {
    points.reserve(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      points.push_back(s.points[idx[k]]);
      features.col(static_cast<Eigen::Index>(k)) = s.features.col(static_cast<Eigen::Index>(idx[k]));
    }
    tree = KdTree3(points);
  }

  std::size_t size() const { return points.size(); }
};

struct MapCandidate {
  SmoothMap map;
  SimilaritySeed seed;
  double feat_cost = 0.0;
  int tgt_cluster = 0, ref_cluster = 0, match_rank = 0;
};

inline Mat3 rotation_y(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat3 r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

inline Mat3 reflection_matrix(int r) {
  Mat3 f = Mat3::Identity();
  if (r == 1 || r == 3) f(0, 0) = -1;
  if (r == 2 || r == 3) f(2, 2) = -1;
  return f;
}

namespace detail {

inline Vec3 extent(const Points& pts, const Mat3& lin) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
  for (const auto& p : pts) {
    const Vec3 q = lin * p;
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  return hi - lo;
}

}  // namespace detail

/// Similarity seeds for a cluster pair: every (target node, reference node)
/// centroid pair x N_r y-rotations x 4 axis reflections x {unit scale,
/// per-axis bounding-box ratio}. The ratio compares the reference extent to
/// the extent of the rotated target points; axes with zero extent keep 1.
/// Duplicate transforms are dropped, keeping the first.
inline std::vector<SimilaritySeed> enumerate_seeds(const Points& tgt_points, const Points& ref_points,
                                                   const std::vector<Vec3>& tgt_nodes,
                                                   const std::vector<Vec3>& ref_nodes, int n_rotations) {
  if (tgt_points.empty() || ref_points.empty() || tgt_nodes.empty() || ref_nodes.empty())
    throw Error(Stage::Maps, "enumerate_seeds needs non-empty clusters");
  const Vec3 ref_ext = detail::extent(ref_points, Mat3::Identity());

  struct Lin {
    Mat3 m;
    int rot, refl;
    bool scaled;
  };
  std::vector<Lin> lins;
  for (int r = 0; r < n_rotations; ++r) {
    const Mat3 rot = rotation_y(2.0 * std::numbers::pi * r / n_rotations);
    for (int f = 0; f < 4; ++f) {
      const Mat3 rf = rot * reflection_matrix(f);
      lins.push_back({rf, r, f, false});
      const Vec3 te = detail::extent(tgt_points, rf);
      Vec3 s;
      for (int a = 0; a < 3; ++a) s[a] = (te[a] > 1e-9 && ref_ext[a] > 1e-9) ? ref_ext[a] / te[a] : 1.0;
      lins.push_back({s.asDiagonal() * rf, r, f, true});
    }
  }

  std::vector<SimilaritySeed> out;
  std::vector<Affine> seen;
  for (std::size_t t = 0; t < tgt_nodes.size(); ++t) {
    for (std::size_t q = 0; q < ref_nodes.size(); ++q) {
      for (const auto& l : lins) {
        SimilaritySeed s{l.m, tgt_nodes[t], ref_nodes[q], l.rot, l.refl, l.scaled, t, q};
        const Affine a = s.affine();
        const bool dup = std::any_of(seen.begin(), seen.end(), [&](const Affine& b) { return (a - b).cwiseAbs().maxCoeff() < 1e-9; });
        if (dup) continue;
        seen.push_back(a);
        out.push_back(s);
      }
    }
  }
  return out;
}

/// Keeps the `cap` seeds with the smallest mean nearest-neighbor residual of
/// the transformed probe points against `ref`. Stable in enumeration order.
inline std::vector<SimilaritySeed> prioritize_seeds(std::vector<SimilaritySeed> seeds, const Points& probe,
                                                    const KdTree3& ref, std::size_t cap) {
  if (seeds.size() <= cap) return seeds;
  std::vector<std::pair<double, std::size_t>> score(seeds.size());
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    double sum = 0.0;
    for (const auto& p : probe) sum += std::sqrt(ref.nearest(seeds[s](p)).second);
    score[s] = {sum / std::max<std::size_t>(probe.size(), 1), s};
  }
  std::stable_sort(score.begin(), score.end());
  std::vector<SimilaritySeed> out;
  for (std::size_t k = 0; k < cap; ++k) out.push_back(seeds[score[k].second]);
  return out;
}

/// Mean over target points p of |f_tgt(p) - f_ref(NN_ref(phi(p)))|, the NN
/// taken among the reference set (ties to the smallest index).
inline double feature_cost(const SmoothMap& map, const PointSet& tgt, const PointSet& ref) {
  if (tgt.size() == 0 || ref.size() == 0) throw Error(Stage::Maps, "feature_cost needs non-empty clusters");
  std::vector<double> terms(tgt.size());
  for (std::size_t i = 0; i < tgt.size(); ++i) {
    const auto j = ref.tree.nearest(map(tgt.points[i])).first;
    terms[i] = (tgt.features.col(static_cast<Eigen::Index>(i)).cast<double>() -
                ref.features.col(static_cast<Eigen::Index>(j)).cast<double>())
                   .norm();
  }
  return pairwise_sum(terms) / static_cast<double>(terms.size());
}

/// Scene-level inputs for fitting candidates of one matched cluster pair.
struct ClusterPairData {
  int tgt_cluster = 0, ref_cluster = 0, match_rank = 0;
  Points tgt_object_points;        // geometry for seeds and residual ranking
  Points ref_object_points;
  std::vector<Vec3> tgt_nodes;     // node centroids in each cluster
  std::vector<Vec3> ref_nodes;
  Points tgt_controls;             // control candidates (subsampled cluster points)
  const PointSet* tgt_eval = nullptr;  // feature-cost evaluation set (target cluster)
  const PointSet* ref_cluster_set = nullptr;
  const KdTree3* ref_scene = nullptr;  // correspondence search
  double lambda = 0.0;
};

/// Per seed: warp the controls, take reference-scene nearest neighbors as
/// targets, fit a TPS and score it with feature_cost. Returns the top_m
/// candidates by ascending cost (ties keep seed order).
inline std::vector<MapCandidate> fit_cluster_candidates(const ClusterPairData& d, const Config& cfg) {
  if (d.tgt_object_points.empty() || d.ref_object_points.empty() || d.tgt_controls.empty() || !d.tgt_eval ||
      d.tgt_eval->size() == 0 || !d.ref_cluster_set || d.ref_cluster_set->size() == 0)
    return {};
  auto seeds = enumerate_seeds(d.tgt_object_points, d.ref_object_points, d.tgt_nodes, d.ref_nodes, cfg.n_rotations);

  KdTree3 ref_objects(d.ref_object_points);
  std::vector<std::size_t> probe_idx =
      farthest_point_sample(d.tgt_object_points, iota_indices(d.tgt_object_points.size()), 64);
  Points probe;
  for (auto i : probe_idx) probe.push_back(d.tgt_object_points[i]);
  seeds = prioritize_seeds(std::move(seeds), probe, ref_objects, static_cast<std::size_t>(cfg.seed_cap));

  std::vector<MapCandidate> cands(seeds.size());
  parallel_for(seeds.size(), cfg.workers, [&](std::size_t s) {
    const auto& seed = seeds[s];
    Points dst;
    dst.reserve(d.tgt_controls.size());
    for (const auto& c : d.tgt_controls) dst.push_back(d.ref_scene->point(d.ref_scene->nearest(seed(c)).first));
    SmoothMap map = fit_tps(d.tgt_controls, dst, d.lambda);
    if (map.affine_fallback) map = SmoothMap::from_affine(seed.affine());
    MapCandidate c;
    c.feat_cost = feature_cost(map, *d.tgt_eval, *d.ref_cluster_set);
    c.map = std::move(map);
    c.seed = seed;
    c.tgt_cluster = d.tgt_cluster;
    c.ref_cluster = d.ref_cluster;
    c.match_rank = d.match_rank;
    cands[s] = std::move(c);
  });
  std::stable_sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) { return a.feat_cost < b.feat_cost; });
  if (cands.size() > static_cast<std::size_t>(cfg.top_m)) cands.resize(static_cast<std::size_t>(cfg.top_m));
  return cands;
}

}  // namespace atx
