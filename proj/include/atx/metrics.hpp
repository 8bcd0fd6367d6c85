#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "atx/common.hpp"
#include "atx/config.hpp"
#include "atx/kdtree.hpp"
#include "atx/refine.hpp"
#include "atx/sampling.hpp"
#include "atx/scene_io.hpp"

namespace atx {

struct MetricReport {
  double trajectory_aed = 0.0;
  double waypoint_aed = 0.0;
  bool has_waypoint_aed = false;
  std::map<double, double> inlier_ratio;  // threshold -> fraction
  double collision_ratio = 0.0;
  double feature_distance = 0.0;
  bool has_feature_distance = false;
  double length_distortion = 0.0;
  bool has_length_distortion = false;
};

inline std::vector<double> resampled_distances(const Points& pred, const Points& gt, std::size_t samples) {
  const Points a = resample_by_arclength(pred, samples);
  const Points b = resample_by_arclength(gt, samples);
  std::vector<double> d(samples);
  for (std::size_t i = 0; i < samples; ++i) d[i] = (a[i] - b[i]).norm();
  return d;
}

/// Median per-index distance after resampling both curves by arc length.
inline double trajectory_aed(const Points& pred, const Points& gt, std::size_t samples = 256) {
  return median(resampled_distances(pred, gt, samples));
}

inline std::map<double, double> inlier_ratio(const Points& pred, const Points& gt, const std::vector<double>& thresholds,
                                             std::size_t samples = 256) {
  const auto d = resampled_distances(pred, gt, samples);
  std::map<double, double> out;
  for (double th : thresholds) {
    std::size_t n = 0;
    for (double x : d) n += x <= th;
    out[th] = static_cast<double>(n) / static_cast<double>(d.size());
  }
  return out;
}

/// Fraction of trajectory points closer than `threshold` to any object point.
inline double collision_ratio(const Points& pred, const KdTree3& obstacles, double threshold) {
  if (pred.empty()) return 0.0;
  if (obstacles.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& p : pred) hit += obstacles.nearest(p).second < threshold * threshold;
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

inline KdTree3 obstacle_index(const Scene& s) {
  Points obs;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!s.is_open(i)) obs.push_back(s.points[i]);
  return KdTree3(std::move(obs));
}

inline double collision_ratio(const Points& pred, const Scene& scene, double threshold) {
  return collision_ratio(pred, obstacle_index(scene), threshold);
}

/// Mean |f_tgt(src_i) - f_ref(pred_i)| over index-aligned resampled points,
/// features interpolated by inverse-distance k-NN.
inline double feature_distance(const Points& src, const Points& pred, const Scene& tgt, const KdTree3& tgt_tree,
                               const Scene& ref, const KdTree3& ref_tree, int k, std::size_t samples = 256) {
  const Points a = resample_by_arclength(src, samples);
  const Points b = resample_by_arclength(pred, samples);
  std::vector<double> d(samples);
  for (std::size_t i = 0; i < samples; ++i)
    d[i] = (interpolate_feature(tgt, tgt_tree, a[i], k) - interpolate_feature(ref, ref_tree, b[i], k)).norm();
  return pairwise_sum(d) / static_cast<double>(samples);
}

/// Mean per-segment |l_pred - l_src| / l_src after common resampling.
inline double length_distortion(const Points& src, const Points& pred, std::size_t samples = 256) {
  const Points a = resample_by_arclength(src, samples);
  const Points b = resample_by_arclength(pred, samples);
  std::vector<double> r;
  r.reserve(samples - 1);
  for (std::size_t i = 0; i + 1 < samples; ++i) {
    const double ls = (a[i + 1] - a[i]).norm();
    if (!(ls > 0)) throw Error(Stage::Metrics, "zero-length source segment after resampling");
    r.push_back(std::abs((b[i + 1] - b[i]).norm() - ls) / ls);
  }
  return pairwise_sum(r) / static_cast<double>(r.size());
}

inline double waypoint_aed(const Points& pred, const Points& gt) {
  if (pred.size() != gt.size())
    throw Error(Stage::Metrics, "waypoint count mismatch: " + std::to_string(pred.size()) + " vs " +
                                    std::to_string(gt.size()));
  std::vector<double> d(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) d[i] = (pred[i] - gt[i]).norm();
  return median(std::move(d));
}

inline Points waypoint_points(const Trajectory& t) {
  Points w;
  for (auto i : t.waypoints) w.push_back(t.points[i]);
  return w;
}

/// Best value across several ground truths: min for distances, max for
/// inlier fractions.
inline void merge_best(MetricReport& best, const MetricReport& r, bool first) {
  if (first) {
    best = r;
    return;
  }
  best.trajectory_aed = std::min(best.trajectory_aed, r.trajectory_aed);
  if (r.has_waypoint_aed)
    best.waypoint_aed = best.has_waypoint_aed ? std::min(best.waypoint_aed, r.waypoint_aed) : r.waypoint_aed,
    best.has_waypoint_aed = true;
  for (auto& [th, v] : r.inlier_ratio) best.inlier_ratio[th] = std::max(best.inlier_ratio[th], v);
}

/// All metrics of `pred` against one ground truth. Scene- and source-based
/// metrics are filled only when those inputs are given.
inline MetricReport compute_metrics(const Trajectory& pred, const Trajectory& gt, const Config& cfg,
                                    const Scene* reference = nullptr, const Scene* target = nullptr,
                                    const Trajectory* source = nullptr) {
  const auto n = static_cast<std::size_t>(cfg.metric_samples);
  MetricReport r;
  r.trajectory_aed = trajectory_aed(pred.points, gt.points, n);
  r.inlier_ratio = inlier_ratio(pred.points, gt.points, cfg.inlier_thresholds, n);
  if (!pred.waypoints.empty() && pred.waypoints.size() == gt.waypoints.size()) {
    r.waypoint_aed = waypoint_aed(waypoint_points(pred), waypoint_points(gt));
    r.has_waypoint_aed = true;
  }
  if (reference) r.collision_ratio = collision_ratio(pred.points, *reference, cfg.collision_threshold);
  if (reference && target && source) {
    const KdTree3 tt(target->points), rt(reference->points);
    r.feature_distance = feature_distance(source->points, pred.points, *target, tt, *reference, rt, cfg.feat_interp_k, n);
    r.has_feature_distance = true;
  }
  if (source) {
    r.length_distortion = length_distortion(source->points, pred.points, n);
    r.has_length_distortion = true;
  }
  return r;
}

/// Best-value reduction over several ground truths.
inline MetricReport compute_metrics(const Trajectory& pred, const std::vector<Trajectory>& gts, const Config& cfg,
                                    const Scene* reference = nullptr, const Scene* target = nullptr,
                                    const Trajectory* source = nullptr) {
  if (gts.empty()) throw Error(Stage::Metrics, "at least one ground truth is required");
  MetricReport best;
  for (std::size_t g = 0; g < gts.size(); ++g)
    merge_best(best, compute_metrics(pred, gts[g], cfg, g == 0 ? reference : nullptr, g == 0 ? target : nullptr,
                                     g == 0 ? source : nullptr),
               g == 0);
  return best;
}

}  // namespace atx
