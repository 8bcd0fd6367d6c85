#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "atx/common.hpp"
#include "atx/graph.hpp"
#include "atx/hungarian.hpp"

namespace atx {

/// Pairwise-match affinity over candidate node pairs; row/column index of
/// the pair (p, q) is p * n_ref + q.
struct AffinityMatrix {
  Eigen::MatrixXd k;
  std::size_t n_tgt = 0, n_ref = 0;

  std::size_t index(std::size_t p, std::size_t q) const { return p * n_ref + q; }
};

struct SoftAssignment {
  Eigen::MatrixXd x;  // n_tgt x n_ref
  bool converged = true;
  int iterations = 0;
};

struct ClusterMatch {
  int target = 0;
  int reference = 0;
  double score = 0.0;
  int rank = 0;
};

struct ClusterMatchSet {
  std::vector<ClusterMatch> matches;     // only for unmerged target clusters
  std::map<int, int> merged;             // low-confidence cluster -> absorbing cluster
  std::vector<std::string> warnings;

  std::vector<ClusterMatch> for_target(int i) const {
    if (auto it = merged.find(i); it != merged.end()) i = it->second;
    std::vector<ClusterMatch> out;
    for (const auto& m : matches)
      if (m.target == i) out.push_back(m);
    return out;
  }
};

/// Alternating column / row normalization; rows end at unit sum. Zero
/// rows or columns are left alone.
inline void sinkhorn(Eigen::MatrixXd& x, int sweeps) {
  for (int s = 0; s < sweeps; ++s) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double sum = x.col(c).sum();
      if (sum > 0) x.col(c) /= sum;
    }
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const double sum = x.row(r).sum();
      if (sum > 0) x.row(r) /= sum;
    }
  }
}

/// Diagonal: 1 + <f_p, f_q> (kept non-negative for unit features).
/// Off-diagonal with p != p' and q != q': 1 / (|e_pp' - e_qq'| + eps).
/// Pairs sharing exactly one endpoint conflict and get 0. With
/// `normalize_lengths`, each graph's edge lengths are divided by that
/// graph's mean edge length first, so eps is relative.
inline AffinityMatrix build_affinity(const ObjectGraph& tgt, const ObjectGraph& ref, double eps,
                                     bool normalize_lengths = false) {
  if (tgt.size() == 0 || ref.size() == 0) throw Error(Stage::Matching, "affinity needs non-empty graphs");
  AffinityMatrix a;
  a.n_tgt = tgt.size();
  a.n_ref = ref.size();
  const auto n = static_cast<Eigen::Index>(a.n_tgt * a.n_ref);
  a.k = Eigen::MatrixXd::Zero(n, n);

  Eigen::MatrixXd et(a.n_tgt, a.n_tgt), er(a.n_ref, a.n_ref);
  for (std::size_t i = 0; i < a.n_tgt; ++i)
    for (std::size_t j = 0; j < a.n_tgt; ++j) et(i, j) = tgt.edge(i, j);
  for (std::size_t i = 0; i < a.n_ref; ++i)
    for (std::size_t j = 0; j < a.n_ref; ++j) er(i, j) = ref.edge(i, j);
  if (normalize_lengths) {
    auto mean_edge = [](const Eigen::MatrixXd& e) {
      const double n = static_cast<double>(e.rows());
      return n > 1 ? e.sum() / (n * (n - 1)) : 0.0;
    };
    if (const double m = mean_edge(et); m > 0) et /= m;
    if (const double m = mean_edge(er); m > 0) er /= m;
  }

  for (std::size_t p = 0; p < a.n_tgt; ++p) {
    for (std::size_t q = 0; q < a.n_ref; ++q) {
      const auto row = static_cast<Eigen::Index>(a.index(p, q));
      a.k(row, row) = 1.0 + tgt.nodes[p].feature.dot(ref.nodes[q].feature);
      for (std::size_t p2 = 0; p2 < a.n_tgt; ++p2) {
        if (p2 == p) continue;
        for (std::size_t q2 = 0; q2 < a.n_ref; ++q2) {
          if (q2 == q) continue;
          a.k(row, static_cast<Eigen::Index>(a.index(p2, q2))) = 1.0 / (std::abs(et(p, p2) - er(q, q2)) + eps);
        }
      }
    }
  }
  return a;
}

/// Spectral matching: principal eigenvector of K by power iteration from a
/// uniform start, reshaped to n_tgt x n_ref, then Sinkhorn sweeps
/// (column then row normalization, so rows end at unit sum).
inline SoftAssignment match_graphs(const AffinityMatrix& a, int max_iterations = 200, double tolerance = 1e-9,
                                   int sinkhorn_sweeps = 10) {
  const auto n = a.k.rows();
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  SoftAssignment out;
  out.converged = false;
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd w = a.k * v;
    const double norm = w.norm();
    if (!(norm > 0)) break;
    w /= norm;
    const double change = (w - v).norm() / v.norm();
    v = std::move(w);
    out.iterations = it + 1;
    if (change < tolerance) {
      out.converged = true;
      break;
    }
  }
  out.x.resize(static_cast<Eigen::Index>(a.n_tgt), static_cast<Eigen::Index>(a.n_ref));
  for (std::size_t p = 0; p < a.n_tgt; ++p)
    for (std::size_t q = 0; q < a.n_ref; ++q)
      out.x(p, q) = std::max(0.0, v[static_cast<Eigen::Index>(a.index(p, q))]);

  sinkhorn(out.x, sinkhorn_sweeps);
  return out;
}

/// X_inter[i, j]: best total X_assign over one-to-one node matchings between
/// target cluster i and reference cluster j (of size min(|i|, |j|)).
inline Eigen::MatrixXd aggregate_clusters(const Eigen::MatrixXd& x_assign, const Clustering& tgt,
                                          const Clustering& ref) {
  std::vector<std::vector<int>> tm(tgt.count()), rm(ref.count());
  for (std::size_t p = 0; p < tgt.node_cluster.size(); ++p) tm[tgt.node_cluster[p]].push_back(static_cast<int>(p));
  for (std::size_t q = 0; q < ref.node_cluster.size(); ++q) rm[ref.node_cluster[q]].push_back(static_cast<int>(q));

  Eigen::MatrixXd inter = Eigen::MatrixXd::Zero(tgt.count(), ref.count());
  for (int i = 0; i < tgt.count(); ++i) {
    for (int j = 0; j < ref.count(); ++j) {
      Eigen::MatrixXd sub(tm[i].size(), rm[j].size());
      for (std::size_t a = 0; a < tm[i].size(); ++a)
        for (std::size_t b = 0; b < rm[j].size(); ++b) sub(a, b) = x_assign(tm[i][a], rm[j][b]);
      inter(i, j) = assignment_weight(sub, max_weight_assignment(sub));
    }
  }
  return inter;
}

/// Top-K cluster matches per target cluster and low-confidence merging.
///
/// Rank 0 is the maximum-weight assignment of X_inter; each further rank
/// re-solves with every target's earlier choices masked out. When there are
/// more target than reference clusters, targets left unassigned by a round
/// take their best unmasked reference cluster. Within ranks >= 1 entries are
/// reordered by descending score.
///
/// Targets whose rank-0 score is below `merge_threshold` merge into the
/// nearest unmerged target cluster (by centroid). If every target falls
/// below, the best-scoring one stays unmerged.
inline ClusterMatchSet select_top_k(const Eigen::MatrixXd& inter, int k, double merge_threshold,
                                    const std::vector<Vec3>& target_centroids) {
  const int ct = static_cast<int>(inter.rows()), cr = static_cast<int>(inter.cols());
  ClusterMatchSet out;
  std::vector<std::vector<ClusterMatch>> per(ct);
  Eigen::MatrixXd masked = inter;
  constexpr double forbid = -std::numeric_limits<double>::infinity();

  for (int rank = 0; rank < k; ++rank) {
    std::vector<int> a = max_weight_assignment(masked);
    for (int i = 0; i < ct; ++i) {
      if (a[i] < 0) {
        double best = forbid;
        for (int j = 0; j < cr; ++j)
          if (masked(i, j) > best) best = masked(i, j), a[i] = j;
      }
      if (a[i] < 0) continue;
      per[i].push_back({i, a[i], inter(i, a[i]), rank});
      masked(i, a[i]) = forbid;
    }
  }
  for (auto& list : per) {
    if (list.size() > 2)
      std::stable_sort(list.begin() + 1, list.end(), [](const auto& x, const auto& y) { return x.score > y.score; });
    for (std::size_t r = 0; r < list.size(); ++r) list[r].rank = static_cast<int>(r);
  }

  std::vector<char> low(ct, 0);
  for (int i = 0; i < ct; ++i) low[i] = per[i].empty() || per[i].front().score < merge_threshold;
  if (ct > 0 && std::all_of(low.begin(), low.end(), [](char c) { return c != 0; })) {
    int keep = -1;
    double best = forbid;
    for (int i = 0; i < ct; ++i) {
      const double s = per[i].empty() ? forbid : per[i].front().score;
      if (keep < 0 || s > best) best = s, keep = i;
    }
    low[keep] = 0;
    out.warnings.push_back("all cluster matches below merge threshold; kept target cluster " + std::to_string(keep));
  }
  for (int i = 0; i < ct; ++i) {
    if (!low[i]) continue;
    int into = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < ct; ++j) {
      if (low[j]) continue;
      const double d = (target_centroids[i] - target_centroids[j]).squaredNorm();
      if (d < best) best = d, into = j;
    }
    out.merged[i] = into;
  }
  for (int i = 0; i < ct; ++i)
    if (!low[i]) out.matches.insert(out.matches.end(), per[i].begin(), per[i].end());
  return out;
}

/// Moves merged clusters' nodes and points into their absorbing cluster and
/// refreshes the absorbing centroids. Merged ids stay allocated but empty.
inline void apply_merges(const ObjectGraph& g, const ClusterMatchSet& ms, Clustering& cl) {
  if (ms.merged.empty()) return;
  for (auto& c : cl.node_cluster)
    if (auto it = ms.merged.find(c); it != ms.merged.end()) c = it->second;
  for (auto& c : cl.point_cluster)
    if (auto it = ms.merged.find(c); it != ms.merged.end()) c = it->second;
  update_centroids(g, cl);
}

}  // namespace atx
