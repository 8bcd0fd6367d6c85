#pragma once

#include <cmath>
#include <vector>

#include "atx/common.hpp"

namespace atx {

using Affine = Eigen::Matrix<double, 3, 4>;

/// phi(x) = A [x; 1] + sum_k w_k * |x - c_k|, the 3D thin-plate spline with
/// the biharmonic kernel U(r) = r. A map without controls is purely affine.
struct SmoothMap {
  Points controls;
  Eigen::MatrixX3d weights;  // one row per control
  Affine affine = Affine::Identity();
  double lambda = 0.0;
  bool affine_fallback = false;

  static SmoothMap identity() { return {}; }

  static SmoothMap from_affine(const Affine& a) {
    SmoothMap m;
    m.affine = a;
    return m;
  }

  Vec3 operator()(const Vec3& x) const {
    Vec3 y = affine.leftCols<3>() * x + affine.col(3);
    for (std::size_t k = 0; k < controls.size(); ++k) y += weights.row(static_cast<Eigen::Index>(k)).transpose() * (x - controls[k]).norm();
    return y;
  }

  Points apply(const Points& xs) const {
    Points out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back((*this)(x));
    return out;
  }
};

inline Affine make_affine(const Mat3& linear, const Vec3& translation) {
  Affine a;
  a.leftCols<3>() = linear;
  a.col(3) = translation;
  return a;
}

namespace detail {

/// Least-squares affine fit, ridge-pulled towards the identity so directions
/// the data does not constrain (e.g. the normal of a planar set) stay
/// unscaled instead of collapsing.
inline Affine fit_affine_ls(const Points& src, const Points& dst) {
  const auto n = static_cast<Eigen::Index>(src.size());
  Eigen::MatrixXd p(n, 4);
  Eigen::MatrixXd y(n, 3);
  double scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    p.row(i) << src[i].transpose(), 1.0;
    y.row(i) = dst[i].transpose();
    scale = std::max(scale, src[i].squaredNorm());
  }
  const double mu = 1e-9 * std::max(1.0, static_cast<double>(n)) * std::max(1.0, scale);
  Eigen::Matrix4d normal = p.transpose() * p;
  Eigen::Matrix<double, 4, 3> rhs = p.transpose() * y;
  for (int a = 0; a < 3; ++a) {
    normal(a, a) += mu;
    rhs(a, a) += mu;
  }
  normal(3, 3) += mu * 1e-3;
  Eigen::Matrix<double, 4, 3> sol = normal.ldlt().solve(rhs);
  return sol.transpose();
}

}  // namespace detail

/// Smallest / largest singular value of the centered control set.
inline double control_spread_ratio(const Points& pts) {
  if (pts.size() < 2) return 0.0;
  Vec3 mean = Vec3::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  const auto ev = es.eigenvalues();
  if (!(ev[2] > 0)) return 0.0;
  return std::sqrt(std::max(ev[0], 0.0) / ev[2]);
}

/// Regularized TPS through src -> dst:
///   [U + lambda I, P; P^T, 0] [W; A^T] = [Y; 0],  P = [c 1].
/// Fewer than 4 controls, a (near-)coplanar set or a singular system fall
/// back to an affine least-squares map with `affine_fallback` set.
inline SmoothMap fit_tps(const Points& src, const Points& dst, double lambda) {
  if (src.size() != dst.size()) throw Error(Stage::Maps, "fit_tps: source/target size mismatch");
  if (src.empty()) throw Error(Stage::Maps, "fit_tps: no correspondences");
  if (src.size() < 4 || control_spread_ratio(src) < 1e-6) {
    auto m = SmoothMap::from_affine(detail::fit_affine_ls(src, dst));
    m.affine_fallback = true;
    return m;
  }
  const auto n = static_cast<Eigen::Index>(src.size());
  Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(n + 4, n + 4);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + 4, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) sys(i, j) = sys(j, i) = (src[i] - src[j]).norm();
    sys(i, i) = lambda;
    sys.block<1, 3>(i, n) = src[i].transpose();
    sys(i, n + 3) = 1.0;
    rhs.row(i) = dst[i].transpose();
  }
  sys.block(n, 0, 4, n) = sys.block(0, n, n, 4).transpose();

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys);
  Eigen::MatrixXd sol = lu.solve(rhs);
  const double resid = (sys * sol - rhs).norm() / std::max(1.0, rhs.norm());
  if (!sol.allFinite() || resid > 1e-8) {
    auto m = SmoothMap::from_affine(detail::fit_affine_ls(src, dst));
    m.affine_fallback = true;
    return m;
  }
  SmoothMap m;
  m.controls = src;
  m.weights = sol.topRows(n);
  m.affine = sol.bottomRows(4).transpose();
  m.lambda = lambda;
  return m;
}

inline double bbox_diagonal(const Points& pts) {
  if (pts.empty()) return 0.0;
  Vec3 lo = pts.front(), hi = pts.front();
  for (const auto& p : pts) lo = lo.cwiseMin(p), hi = hi.cwiseMax(p);
  return (hi - lo).norm();
}

}  // namespace atx
