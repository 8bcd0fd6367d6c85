#pragma once

#include <random>
#include <vector>

#include "atx/graph.hpp"
#include "atx/scene_io.hpp"

namespace atx::test {

inline Vec3 random_point(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(rng), u(rng), u(rng)};
}

inline Points random_points(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  Points p;
  for (std::size_t i = 0; i < n; ++i) p.push_back(random_point(rng, lo, hi));
  return p;
}

inline Eigen::VectorXf random_unit(std::mt19937_64& rng, int dim) {
  std::normal_distribution<float> g;
  Eigen::VectorXf f(dim);
  do {
    for (int d = 0; d < dim; ++d) f[d] = g(rng);
  } while (f.norm() < 1e-3f);
  return f.normalized();
}

/// Scene with `n` random points; labels drawn from [-1, instances).
inline Scene random_scene(std::mt19937_64& rng, std::size_t n, int instances, int dim, double extent = 5.0) {
  Scene s;
  std::uniform_int_distribution<int> lab(-1, instances - 1);
  s.features.resize(dim, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    s.points.push_back(random_point(rng, 0.0, extent).cast<float>().cast<double>());
    s.instance_id.push_back(lab(rng));
    s.features.col(static_cast<Eigen::Index>(i)) = random_unit(rng, dim);
  }
  return s;
}

/// Flat floor of open points on a regular XZ grid at y = 0.
inline Scene floor_scene(double x0, double x1, double z0, double z1, double spacing, int dim = 2) {
  Scene s;
  std::vector<Eigen::VectorXf> feats;
  for (double x = x0; x <= x1 + 1e-9; x += spacing) {
    for (double z = z0; z <= z1 + 1e-9; z += spacing) {
      s.points.emplace_back(x, 0.0, z);
      s.instance_id.push_back(-1);
    }
  }
  s.features = Eigen::MatrixXf::Zero(dim, static_cast<Eigen::Index>(s.points.size()));
  s.features.row(0).setOnes();
  return s;
}

/// Adds a solid box of object points (spacing `step`) with the given id.
inline void add_box(Scene& s, const Vec3& lo, const Vec3& hi, int id, double step) {
  std::vector<Vec3> pts;
  for (double x = lo.x(); x <= hi.x() + 1e-9; x += step)
    for (double y = lo.y(); y <= hi.y() + 1e-9; y += step)
      for (double z = lo.z(); z <= hi.z() + 1e-9; z += step) pts.emplace_back(x, y, z);
  const auto old = static_cast<Eigen::Index>(s.points.size());
  s.features.conservativeResize(s.features.rows(), old + static_cast<Eigen::Index>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) {
    s.points.push_back(pts[k]);
    s.instance_id.push_back(id);
    Eigen::VectorXf f = Eigen::VectorXf::Zero(s.features.rows());
    f[s.features.rows() > 1 ? 1 : 0] = 1.0f;
    s.features.col(old + static_cast<Eigen::Index>(k)) = f;
  }
}

inline Trajectory polyline(const Points& pts) {
  Trajectory t;
  t.points = pts;
  return t;
}


/// Random graph with distinct unit features and a rigidly moved, permuted
/// copy. perm[p] is the reference node matching target node p.
struct IsomorphicPair {
  ObjectGraph tgt, ref;
  std::vector<int> perm;
};

inline IsomorphicPair isomorphic_pair(std::mt19937_64& rng, int n, int dim = 8) {
  IsomorphicPair out;
  out.perm.resize(n);
  for (int i = 0; i < n; ++i) out.perm[i] = i;
  std::shuffle(out.perm.begin(), out.perm.end(), rng);
  const Mat3 r = Eigen::AngleAxisd(std::uniform_real_distribution<double>(0, 6.28)(rng),
                                   random_point(rng, -1, 1).normalized())
                     .toRotationMatrix();
  const Vec3 t = random_point(rng, -3, 3);
  out.ref.nodes.resize(n);
  for (int p = 0; p < n; ++p) {
    ObjectNode node{p, random_point(rng, 0, 6), random_unit(rng, dim).cast<double>(), {}};
    ObjectNode twin = node;
    twin.instance_id = out.perm[p];
    twin.centroid = r * node.centroid + t;
    out.tgt.nodes.push_back(node);
    out.ref.nodes[out.perm[p]] = twin;
  }
  return out;
}

}  // namespace atx::test
