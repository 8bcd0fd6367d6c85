#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <vector>

#include "atx/common.hpp"
#include "atx/kdtree.hpp"
#include "atx/sampling.hpp"
#include "atx/scene_io.hpp"
#include "atx/smooth_map.hpp"

namespace atx {

/// Truncated Gaussian density of navigable points.
struct NavigableDensity {
  std::shared_ptr<const KdTree3> points;
  double sigma = 0.2;
  double cutoff_sigmas = 3.0;
  double tau = 0.0;

  NavigableDensity() = default;
  NavigableDensity(Points nav, double sigma_, double cutoff, double tau_override = -1.0)
      : points(std::make_shared<KdTree3>(std::move(nav))), sigma(sigma_), cutoff_sigmas(cutoff) {
    tau = tau_override >= 0 ? tau_override : mean_at_sources();
  }

  double radius() const { return cutoff_sigmas * sigma; }

  double rho(const Vec3& v) const {
    double r = 0.0;
    const double inv = 1.0 / (2.0 * sigma * sigma);
    points->for_each_in_radius(v, radius() * radius(), [&](std::size_t, double d2) { r += std::exp(-d2 * inv); });
    return r;
  }

  /// rho and its gradient with respect to v.
  double rho_grad(const Vec3& v, Vec3& grad) const {
    double r = 0.0;
    grad.setZero();
    const double inv = 1.0 / (2.0 * sigma * sigma);
    points->for_each_in_radius(v, radius() * radius(), [&](std::size_t i, double d2) {
      const double e = std::exp(-d2 * inv);
      r += e;
      grad -= e * (v - points->point(i)) / (sigma * sigma);
    });
    return r;
  }

  /// Mean density evaluated at the navigable points themselves.
  double mean_at_sources() const {
    if (!points || points->empty()) return 0.0;
    std::vector<double> r(points->size());
    for (std::size_t i = 0; i < points->size(); ++i) r[i] = rho(points->point(i));
    return pairwise_sum(r) / static_cast<double>(r.size());
  }
};

struct RefineWeights {
  double shape = 1.0, anchor = 0.1, nav = 1.0, feat = 1.0;
};

struct RefinementState {
  Points vars;
  Points anchors;
  std::vector<double> edge_lengths;  // |t_{i+1} - t_i| of the source
  std::vector<std::pair<std::size_t, Vec3>> sparse_targets;
  RefineWeights weights;
  NavigableDensity density;
};

struct EnergyTerms {
  double shape = 0.0, anchor = 0.0, nav = 0.0, feat = 0.0, total = 0.0;
};

struct EnergyGradients {
  std::vector<Vec3> shape, anchor, nav, feat;
};

inline RefinementState make_state(const Points& source, const Points& anchors, RefineWeights w,
                                  NavigableDensity density,
                                  std::vector<std::pair<std::size_t, Vec3>> sparse_targets = {}) {
  if (source.size() != anchors.size() || source.empty()) throw Error(Stage::Refine, "source/anchor size mismatch");
  RefinementState s;
  s.vars = anchors;
  s.anchors = anchors;
  for (std::size_t i = 0; i + 1 < source.size(); ++i) {
    const double l = (source[i + 1] - source[i]).norm();
    if (!(l > 0)) throw Error(Stage::Refine, "zero-length source segment at " + std::to_string(i));
    s.edge_lengths.push_back(l);
  }
  s.sparse_targets = std::move(sparse_targets);
  s.weights = w;
  s.density = std::move(density);
  return s;
}

namespace detail {

inline Vec3 unit_or_zero(const Vec3& d) {
  const double n = d.norm();
  return n > 0 ? Vec3(d / n) : Vec3::Zero();
}

}  // namespace detail

/// Energy terms at `vars`; gradients are filled when `grads` is non-null.
///   shape  = 1/(M-1) sum (|v_{i+1} - v_i| - l_i)^2
///   anchor = 1/M sum |v_i - u_i|
///   nav    = 1/M sum max(0, tau - rho_i)^2
///   feat   = 1/|T_S| sum_{i in T_S} |v_i - target_i|
inline EnergyTerms energy(const RefinementState& s, const Points& vars, EnergyGradients* grads = nullptr,
                          int workers = 1) {
  const std::size_t m = vars.size();
  EnergyTerms e;
  if (grads) {
    grads->shape.assign(m, Vec3::Zero());
    grads->anchor.assign(m, Vec3::Zero());
    grads->nav.assign(m, Vec3::Zero());
    grads->feat.assign(m, Vec3::Zero());
  }

  if (m > 1) {
    std::vector<double> t(m - 1);
    const double inv = 1.0 / static_cast<double>(m - 1);
    for (std::size_t i = 0; i + 1 < m; ++i) {
      const Vec3 d = vars[i + 1] - vars[i];
      const double r = d.norm() - s.edge_lengths[i];
      t[i] = r * r;
      if (grads) {
        const Vec3 g = 2.0 * r * inv * detail::unit_or_zero(d);
        grads->shape[i + 1] += g;
        grads->shape[i] -= g;
      }
    }
    e.shape = pairwise_sum(t) * inv;
  }

  {
    std::vector<double> t(m);
    const double inv = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
      const Vec3 d = vars[i] - s.anchors[i];
      t[i] = d.norm();
      if (grads) grads->anchor[i] = inv * detail::unit_or_zero(d);
    }
    e.anchor = pairwise_sum(t) * inv;
  }

  if (s.density.points && !s.density.points->empty()) {
    std::vector<double> t(m);
    const double inv = 1.0 / static_cast<double>(m);
    parallel_for(m, workers, [&](std::size_t i) {
      Vec3 g;
      const double rho = s.density.rho_grad(vars[i], g);
      const double gap = std::max(0.0, s.density.tau - rho);
      t[i] = gap * gap;
      if (grads) grads->nav[i] = -2.0 * gap * inv * g;
    });
    e.nav = pairwise_sum(t) * inv;
  }

  if (!s.sparse_targets.empty()) {
    std::vector<double> t(s.sparse_targets.size());
    const double inv = 1.0 / static_cast<double>(s.sparse_targets.size());
    for (std::size_t k = 0; k < s.sparse_targets.size(); ++k) {
      const auto& [i, target] = s.sparse_targets[k];
      const Vec3 d = vars[i] - target;
      t[k] = d.norm();
      if (grads) grads->feat[i] += inv * detail::unit_or_zero(d);
    }
    e.feat = pairwise_sum(t) * inv;
  }

  const auto& w = s.weights;
  e.total = w.shape * e.shape + w.anchor * e.anchor + w.nav * e.nav + w.feat * e.feat;
  return e;
}

inline EnergyTerms energy(const RefinementState& s) { return energy(s, s.vars); }

struct RefineResult {
  Points points;
  EnergyTerms initial;
  EnergyTerms final;
  std::vector<EnergyTerms> trace;  // energy at each iterate, including the start
  int best_step = 0;
  bool failed = false;
};

namespace detail {

/// Piecewise-linear displacement basis along a polyline: knots are the
/// first point, the last point and every point at least `spacing` of arc
/// length past the previous knot. Point i gets weight w_i on knot[seg_i]
/// and 1 - w_i on knot[seg_i + 1].
struct KnotBasis {
  std::vector<std::size_t> knots;
  std::vector<std::size_t> seg;
  std::vector<double> w;

  KnotBasis(const Points& path, double spacing) {
    const std::size_t m = path.size();
    std::vector<double> arc(m, 0.0);
    for (std::size_t i = 1; i < m; ++i) arc[i] = arc[i - 1] + (path[i] - path[i - 1]).norm();
    knots.push_back(0);
    for (std::size_t i = 1; i + 1 < m; ++i)
      if (spacing <= 0 || arc[i] - arc[knots.back()] >= spacing) knots.push_back(i);
    if (m > 1) knots.push_back(m - 1);
    seg.resize(m);
    w.resize(m);
    std::size_t k = 0;
    for (std::size_t i = 0; i < m; ++i) {
      while (k + 2 < knots.size() && knots[k + 1] <= i) ++k;
      seg[i] = k;
      if (knots.size() == 1) {
        w[i] = 1.0;
        continue;
      }
      const double a = arc[knots[k]], b = arc[knots[k + 1]];
      const double t = b > a ? (arc[i] - a) / (b - a) : static_cast<double>(i - knots[k]) / (knots[k + 1] - knots[k]);
      w[i] = 1.0 - std::clamp(t, 0.0, 1.0);
    }
  }

  std::size_t size() const { return knots.size(); }

  Points expand(const Points& base, const std::vector<Vec3>& disp) const {
    Points out(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      Vec3 d = w[i] * disp[seg[i]];
      if (seg[i] + 1 < disp.size()) d += (1.0 - w[i]) * disp[seg[i] + 1];
      out[i] = base[i] + d;
    }
    return out;
  }

  std::vector<Vec3> pull_back(const std::vector<Vec3>& grad) const {
    std::vector<Vec3> out(knots.size(), Vec3::Zero());
    for (std::size_t i = 0; i < grad.size(); ++i) {
      out[seg[i]] += w[i] * grad[i];
      if (seg[i] + 1 < out.size()) out[seg[i] + 1] += (1.0 - w[i]) * grad[i];
    }
    return out;
  }
};

}  // namespace detail

/// Adam descent on the weighted energy with a cosine decay of the step size
/// from `lr` towards 0; returns the lowest-energy iterate seen (the start
/// included). With `knot_spacing` > 0 the descent runs on displacements of
/// knots spaced along the starting path, interpolated linearly to every
/// point; 0 moves every point independently.
inline RefineResult refine(const RefinementState& s, int steps, double lr, int workers = 1,
                           double knot_spacing = 0.0) {
  if (steps < 1) throw Error(Stage::Refine, "refine needs steps >= 1");
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  const auto& w = s.weights;
  const detail::KnotBasis basis(s.vars, knot_spacing);
  const std::size_t n = basis.size();

  RefineResult r;
  std::vector<Vec3> disp(n, Vec3::Zero()), mom(n, Vec3::Zero()), var(n, Vec3::Zero()), grad(s.vars.size());
  Points v = s.vars;
  EnergyGradients g;
  EnergyTerms e = energy(s, v, &g, workers);
  r.initial = e;
  r.final = e;
  r.points = v;
  r.trace.push_back(e);
  if (!std::isfinite(e.total)) {
    r.failed = true;
    return r;
  }

  for (int step = 1; step <= steps; ++step) {
    const double c1 = 1.0 - std::pow(beta1, step), c2 = 1.0 - std::pow(beta2, step);
    const double rate = lr * 0.5 * (1.0 + std::cos(std::numbers::pi * (step - 1) / steps));
    for (std::size_t i = 0; i < grad.size(); ++i)
      grad[i] = w.shape * g.shape[i] + w.anchor * g.anchor[i] + w.nav * g.nav[i] + w.feat * g.feat[i];
    const std::vector<Vec3> gk = basis.pull_back(grad);
    for (std::size_t k = 0; k < n; ++k) {
      mom[k] = beta1 * mom[k] + (1 - beta1) * gk[k];
      var[k] = beta2 * var[k] + (1 - beta2) * gk[k].cwiseProduct(gk[k]);
      const Vec3 mh = mom[k] / c1;
      const Vec3 vh = var[k] / c2;
      disp[k] -= rate * mh.cwiseQuotient((vh.cwiseSqrt().array() + eps).matrix());
    }
    v = basis.expand(s.vars, disp);
    e = energy(s, v, &g, workers);
    r.trace.push_back(e);
    if (!std::isfinite(e.total)) {
      r.points = s.vars;
      r.final = r.initial;
      r.best_step = 0;
      r.failed = true;
      return r;
    }
    if (e.total < r.final.total) {
      r.final = e;
      r.points = v;
      r.best_step = step;
    }
  }
  return r;
}

/// Inverse-distance weighted feature at `x` from its k nearest scene points,
/// weights 1 / (d + 1e-6), renormalized.
inline Eigen::VectorXd interpolate_feature(const Scene& scene, const KdTree3& tree, const Vec3& x, int k) {
  const auto nn = tree.knn(x, static_cast<std::size_t>(k));
  Eigen::VectorXd f = Eigen::VectorXd::Zero(scene.dim());
  double wsum = 0.0;
  for (const auto& [i, d2] : nn) {
    const double wt = 1.0 / (std::sqrt(d2) + 1e-6);
    f += wt * scene.features.col(static_cast<Eigen::Index>(i)).cast<double>();
    wsum += wt;
  }
  return wsum > 0 ? Eigen::VectorXd(f / wsum) : f;
}

/// Feature-matched attraction targets: for evenly spaced trajectory indices,
/// the reference point within XZ radius r of the initial warp u_i whose
/// feature is closest to the source feature at t_i (ties to the smaller
/// index). Indices with an empty disk are dropped.
inline std::vector<std::pair<std::size_t, Vec3>> sparse_feature_targets(const Points& traj, const Points& warped,
                                                                       const Scene& tgt, const KdTree3& tgt_tree,
                                                                       const Scene& ref, const KdTree2& ref_xz,
                                                                       double r, int count, int k) {
  std::vector<std::pair<std::size_t, Vec3>> out;
  for (auto i : evenly_spaced_indices(traj.size(), static_cast<std::size_t>(count))) {
    const Eigen::VectorXd f = interpolate_feature(tgt, tgt_tree, traj[i], k);
    const auto disk = ref_xz.radius(xz(warped[i]), r);
    if (disk.empty()) continue;
    std::size_t best = disk.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (auto j : disk) {
      const double d = (ref.features.col(static_cast<Eigen::Index>(j)).cast<double>() - f).squaredNorm();
      if (d < best_d) best_d = d, best = j;
    }
    out.emplace_back(i, ref.points[best]);
  }
  return out;
}

}  // namespace atx
