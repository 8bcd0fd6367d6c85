#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "atx/common.hpp"
#include "atx/kdtree.hpp"
#include "atx/maps.hpp"
#include "atx/sampling.hpp"
#include "atx/smooth_map.hpp"

namespace atx {

struct CostBreakdown {
  double feat = 0.0;
  double distort = 0.0;
  double nav = 0.0;
  double total = 0.0;
};

/// One candidate index per problem cluster (-1 for clusters without candidates).
struct Assignment {
  std::vector<int> choice;
  CostBreakdown cost;
  int beam_rank = 0;
};

using PairSample = std::vector<std::pair<std::size_t, std::size_t>>;

/// n_pairs index pairs (i in [0, na), j in [0, nb)) from a seeded stream.
inline PairSample sample_pairs(std::size_t na, std::size_t nb, int n_pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PairSample out;
  out.reserve(static_cast<std::size_t>(n_pairs));
  for (int k = 0; k < n_pairs; ++k) {
    const std::size_t i = rng() % na;
    const std::size_t j = rng() % nb;
    out.emplace_back(i, j);
  }
  return out;
}

/// Mean | |phi_a(p) - phi_b(q)| - |p - q| | over the sampled pairs.
inline double distortion_cost(const SmoothMap& a, const SmoothMap& b, const Points& pa, const Points& pb,
                              const PairSample& pairs) {
  if (pairs.empty()) return 0.0;
  std::vector<double> terms(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const Vec3& p = pa[pairs[k].first];
    const Vec3& q = pb[pairs[k].second];
    terms[k] = std::abs((a(p) - b(q)).norm() - (p - q).norm());
  }
  return pairwise_sum(terms) / static_cast<double>(terms.size());
}

inline double distortion_cost(const SmoothMap& a, const SmoothMap& b, const Points& pa, const Points& pb, int n_pairs,
                              std::uint64_t seed) {
  if (pa.empty() || pb.empty()) throw Error(Stage::Assembly, "distortion_cost needs non-empty clusters");
  return distortion_cost(a, b, pa, pb, sample_pairs(pa.size(), pb.size(), n_pairs, seed));
}

/// 1 - fraction of trajectory points whose warped XZ lies within delta of a
/// navigable XZ point. No trajectory points -> 0.
inline double navigability_cost(const SmoothMap& map, const Points& traj_points, const KdTree2& navigable_xz,
                                double delta) {
  if (traj_points.empty()) return 0.0;
  if (navigable_xz.empty()) return 1.0;
  std::size_t inside = 0;
  for (const auto& t : traj_points) {
    const Vec3 w = map(t);
    if (navigable_xz.nearest(xz(w)).second <= delta * delta) ++inside;
  }
  return 1.0 - static_cast<double>(inside) / static_cast<double>(traj_points.size());
}

/// Precomputed costs for the per-cluster map selection.
struct AssemblyProblem {
  std::vector<std::vector<double>> feat;  // [cluster][candidate]
  std::vector<std::vector<double>> nav;   // [cluster][candidate]
  // distort[a][b] for a < b: row-major candidate table of size n_a * n_b.
  std::vector<std::vector<std::vector<double>>> distort;
  std::vector<int> order;  // processing order of clusters
  double lambda_feat = 1.0, lambda_distort = 1.0, lambda_nav = 1.0;

  std::size_t clusters() const { return feat.size(); }
  std::size_t candidates(std::size_t k) const { return feat[k].size(); }

  double pair_cost(std::size_t a, int ca, std::size_t b, int cb) const {
    if (a > b) std::swap(a, b), std::swap(ca, cb);
    return distort[a][b][static_cast<std::size_t>(ca) * candidates(b) + static_cast<std::size_t>(cb)];
  }

  void resize(std::size_t n) {
    feat.assign(n, {});
    nav.assign(n, {});
    distort.assign(n, std::vector<std::vector<double>>(n));
  }
};

/// Full cost of a complete assignment, summed in fixed cluster order.
inline CostBreakdown evaluate(const AssemblyProblem& p, const std::vector<int>& choice) {
  CostBreakdown c;
  for (std::size_t k = 0; k < p.clusters(); ++k) {
    if (choice[k] < 0) continue;
    c.feat += p.feat[k][choice[k]];
    c.nav += p.nav[k][choice[k]];
  }
  for (std::size_t a = 0; a < p.clusters(); ++a) {
    if (choice[a] < 0) continue;
    for (std::size_t b = a + 1; b < p.clusters(); ++b)
      if (choice[b] >= 0) c.distort += p.pair_cost(a, choice[a], b, choice[b]);
  }
  c.total = p.lambda_feat * c.feat + p.lambda_distort * c.distort + p.lambda_nav * c.nav;
  return c;
}

/// Beam search over one candidate per cluster, clusters visited in p.order.
/// Each partial assignment is extended by every candidate of the next
/// cluster; the `width` cheapest partials survive. Clusters without
/// candidates are skipped (choice -1). Result sorted by total cost, ties by
/// choice vector.
inline std::vector<Assignment> beam_search(const AssemblyProblem& p, int width) {
  struct Partial {
    std::vector<int> choice;
    double cost;
  };
  const std::size_t n = p.clusters();
  std::vector<Partial> beam{{std::vector<int>(n, -1), 0.0}};
  std::vector<int> order = p.order;
  if (order.empty())
    for (std::size_t k = 0; k < n; ++k) order.push_back(static_cast<int>(k));
  std::vector<int> placed;
  auto less = [](const Partial& a, const Partial& b) { return a.cost != b.cost ? a.cost < b.cost : a.choice < b.choice; };

  for (int k : order) {
    if (p.candidates(k) == 0) continue;
    std::vector<Partial> next;
    next.reserve(beam.size() * p.candidates(k));
    for (const auto& part : beam) {
      for (std::size_t c = 0; c < p.candidates(k); ++c) {
        double add = p.lambda_feat * p.feat[k][c] + p.lambda_nav * p.nav[k][c];
        for (int j : placed) add += p.lambda_distort * p.pair_cost(k, static_cast<int>(c), j, part.choice[j]);
        Partial q{part.choice, part.cost + add};
        q.choice[k] = static_cast<int>(c);
        next.push_back(std::move(q));
      }
    }
    std::sort(next.begin(), next.end(), less);
    if (next.size() > static_cast<std::size_t>(width)) next.resize(static_cast<std::size_t>(width));
    beam = std::move(next);
    placed.push_back(k);
  }

  std::vector<Assignment> out;
  for (auto& part : beam) out.push_back({part.choice, evaluate(p, part.choice), 0});
  std::sort(out.begin(), out.end(), [](const Assignment& a, const Assignment& b) {
    return a.cost.total != b.cost.total ? a.cost.total < b.cost.total : a.choice < b.choice;
  });
  for (std::size_t r = 0; r < out.size(); ++r) out[r].beam_rank = static_cast<int>(r);
  return out;
}

/// Single global map: farthest-point samples of each selected cluster's
/// target points paired with their warped images, one TPS through all of them.
inline SmoothMap merge_global_map(const std::vector<const SmoothMap*>& maps, const std::vector<Points>& cluster_points,
                                  int per_cluster_samples, double lambda) {
  Points src, dst;
  for (std::size_t k = 0; k < maps.size(); ++k) {
    if (!maps[k] || cluster_points[k].empty()) continue;
    const auto idx = farthest_point_sample(cluster_points[k], iota_indices(cluster_points[k].size()),
                                           static_cast<std::size_t>(per_cluster_samples));
    for (auto i : idx) {
      src.push_back(cluster_points[k][i]);
      dst.push_back((*maps[k])(cluster_points[k][i]));
    }
  }
  if (src.empty()) throw Error(Stage::Assembly, "no selected maps to merge");
  return fit_tps(src, dst, lambda);
}

}  // namespace atx
