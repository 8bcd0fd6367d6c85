#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "atx/common.hpp"
#include "atx/scene_io.hpp"

namespace atx {

struct ObjectNode {
  std::int32_t instance_id = 0;
  Vec3 centroid = Vec3::Zero();
  Eigen::VectorXd feature;  // unit norm
  std::vector<std::size_t> point_indices;
};

/// One node per object instance on a complete graph; edge(i, j) is the
/// centroid distance.
struct ObjectGraph {
  std::vector<ObjectNode> nodes;

  std::size_t size() const { return nodes.size(); }
  double edge(std::size_t i, std::size_t j) const { return (nodes[i].centroid - nodes[j].centroid).norm(); }
};

struct Clustering {
  std::vector<int> node_cluster;
  std::vector<int> point_cluster;
  std::vector<Vec3> centroids;

  int count() const { return static_cast<int>(centroids.size()); }
};

/// Nodes are ordered by ascending instance id.
inline ObjectGraph build_object_graph(const Scene& scene) {
  std::map<std::int32_t, std::size_t> slot;
  ObjectGraph g;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const auto id = scene.instance_id[i];
    if (id < 0) continue;
    slot.try_emplace(id, 0);
  }
  if (slot.empty()) throw Error(Stage::Graph, "scene has no object instances");
  for (auto& [id, s] : slot) {
    s = g.nodes.size();
    g.nodes.push_back({id, Vec3::Zero(), Eigen::VectorXd::Zero(scene.dim()), {}});
  }
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const auto id = scene.instance_id[i];
    if (id < 0) continue;
    auto& n = g.nodes[slot[id]];
    n.point_indices.push_back(i);
    n.centroid += scene.points[i];
    n.feature += scene.features.col(static_cast<Eigen::Index>(i)).cast<double>();
  }
  for (auto& n : g.nodes) {
    n.centroid /= static_cast<double>(n.point_indices.size());
    const double fn = n.feature.norm();
    if (fn > 0) {
      n.feature /= fn;
    } else {
      // Member features cancel out exactly; fall back to the first member.
      n.feature = scene.features.col(static_cast<Eigen::Index>(n.point_indices.front())).cast<double>();
    }
  }
  return g;
}

inline int cluster_count(std::size_t nodes, int target_size) {
  const long c = std::lround(static_cast<double>(nodes) / std::max(target_size, 1));
  return static_cast<int>(std::clamp<long>(c, 1, static_cast<long>(std::max<std::size_t>(nodes, 1))));
}

/// Agglomerative clustering of node centroids with Ward linkage, stopping at
/// max(1, round(|V| / target_size)) clusters. Merges the pair with the
/// smallest Ward cost; ties go to the lexicographically smallest pair.
/// Output cluster ids follow the smallest member node index.
inline Clustering cluster_objects(const ObjectGraph& g, int target_size) {
  const std::size_t n = g.size();
  const int want = cluster_count(n, target_size);

  struct Group {
    Vec3 sum = Vec3::Zero();
    double count = 0;
    std::vector<std::size_t> members;
    bool alive = true;
  };
  std::vector<Group> groups(n);
  for (std::size_t i = 0; i < n; ++i) groups[i] = {g.nodes[i].centroid, 1.0, {i}, true};

  auto ward = [&](const Group& a, const Group& b) {
    const Vec3 d = a.sum / a.count - b.sum / b.count;
    return a.count * b.count / (a.count + b.count) * d.squaredNorm();
  };

  for (std::size_t alive = n; alive > static_cast<std::size_t>(want); --alive) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!groups[i].alive) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!groups[j].alive) continue;
        const double c = ward(groups[i], groups[j]);
        if (c < best) best = c, bi = i, bj = j;
      }
    }
    groups[bi].sum += groups[bj].sum;
    groups[bi].count += groups[bj].count;
    groups[bi].members.insert(groups[bi].members.end(), groups[bj].members.begin(), groups[bj].members.end());
    groups[bj].alive = false;
  }

  Clustering cl;
  cl.node_cluster.assign(n, -1);
  // Groups are indexed by their smallest member, so scanning in index order
  // yields ids ordered by smallest member node.
  for (std::size_t i = 0; i < n; ++i) {
    if (!groups[i].alive) continue;
    const int id = cl.count();
    Vec3 c = Vec3::Zero();
    for (auto m : groups[i].members) {
      cl.node_cluster[m] = id;
      c += g.nodes[m].centroid;
    }
    cl.centroids.push_back(c / static_cast<double>(groups[i].members.size()));
  }
  return cl;
}

/// Recomputes cluster centroids as the mean of member node centroids.
inline void update_centroids(const ObjectGraph& g, Clustering& cl) {
  std::vector<Vec3> sum(cl.centroids.size(), Vec3::Zero());
  std::vector<int> cnt(cl.centroids.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    sum[cl.node_cluster[i]] += g.nodes[i].centroid;
    ++cnt[cl.node_cluster[i]];
  }
  for (std::size_t c = 0; c < sum.size(); ++c)
    if (cnt[c] > 0) cl.centroids[c] = sum[c] / cnt[c];
}

/// Dense per-point labels: object points take their node's cluster, open
/// points the nearest centroid among clusters that own nodes (ties to the
/// smaller cluster id).
inline void propagate_regions(const Scene& scene, const ObjectGraph& g, Clustering& cl) {
  std::map<std::int32_t, int> by_instance;
  for (std::size_t i = 0; i < g.size(); ++i) by_instance[g.nodes[i].instance_id] = cl.node_cluster[i];
  std::vector<char> owns(cl.centroids.size(), 0);
  for (int c : cl.node_cluster) owns[c] = 1;
  cl.point_cluster.assign(scene.size(), 0);
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const auto id = scene.instance_id[i];
    if (id >= 0) {
      auto it = by_instance.find(id);
      if (it == by_instance.end()) throw Error(Stage::Graph, "instance " + std::to_string(id) + " missing from graph");
      cl.point_cluster[i] = it->second;
      continue;
    }
    double best = std::numeric_limits<double>::infinity();
    int label = 0;
    for (int c = 0; c < cl.count(); ++c) {
      if (!owns[c]) continue;
      const double d = (scene.points[i] - cl.centroids[c]).squaredNorm();
      if (d < best) best = d, label = c;
    }
    cl.point_cluster[i] = label;
  }
}

/// Point indices per cluster label.
inline std::vector<std::vector<std::size_t>> cluster_members(const Clustering& cl) {
  std::vector<std::vector<std::size_t>> out(cl.centroids.size());
  for (std::size_t i = 0; i < cl.point_cluster.size(); ++i) out[cl.point_cluster[i]].push_back(i);
  return out;
}

}  // namespace atx
