#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace atx {

/// Static k-d tree over a fixed point set. Distance ties are resolved towards
/// the smaller point index, so every query result is deterministic.
template <int Dim>
class KdTree {
 public:
  using Point = Eigen::Matrix<double, Dim, 1>;

  KdTree() = default;

  explicit KdTree(std::vector<Point> pts) : pts_(std::move(pts)) {
    idx_.resize(pts_.size());
    for (std::size_t i = 0; i < idx_.size(); ++i) idx_[i] = static_cast<std::uint32_t>(i);
    if (!pts_.empty()) {
      nodes_.reserve(2 * pts_.size() / kLeaf + 2);
      build(0, idx_.size());
    }
  }

  std::size_t size() const { return pts_.size(); }
  bool empty() const { return pts_.empty(); }
  const Point& point(std::size_t i) const { return pts_[i]; }

  /// Nearest point index and squared distance. Tree must be non-empty.
  std::pair<std::size_t, double> nearest(const Point& q) const {
    Best best{std::numeric_limits<double>::infinity(), std::numeric_limits<std::size_t>::max()};
    nearest_rec(0, q, best);
    return {best.idx, best.d2};
  }

  /// k nearest (index, squared distance), ascending by (distance, index).
  std::vector<std::pair<std::size_t, double>> knn(const Point& q, std::size_t k) const {
    std::vector<std::pair<double, std::size_t>> heap;  // max-heap on (d2, idx)
    k = std::min(k, pts_.size());
    if (k == 0) return {};
    heap.reserve(k + 1);
    knn_rec(0, q, k, heap);
    std::sort_heap(heap.begin(), heap.end());
    std::vector<std::pair<std::size_t, double>> out;
    out.reserve(heap.size());
    for (auto& [d2, i] : heap) out.emplace_back(i, d2);
    return out;
  }

  /// All indices with squared distance <= r2, ascending by index.
  template <class Fn>
  void for_each_in_radius(const Point& q, double r2, Fn&& fn) const {
    if (!pts_.empty()) radius_rec(0, q, r2, fn);
  }

  std::vector<std::size_t> radius(const Point& q, double r) const {
    std::vector<std::size_t> out;
    for_each_in_radius(q, r * r, [&](std::size_t i, double) { out.push_back(i); });
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  static constexpr std::size_t kLeaf = 12;

  struct Node {
    std::uint32_t begin, end;
    std::int32_t left = -1, right = -1;
    int axis = 0;
    double split = 0.0;
    Point lo, hi;
  };

  struct Best {
    double d2;
    std::size_t idx;
  };

  int build(std::size_t begin, std::size_t end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    Node n;
    n.begin = static_cast<std::uint32_t>(begin);
    n.end = static_cast<std::uint32_t>(end);
    n.lo = pts_[idx_[begin]];
    n.hi = n.lo;
    for (std::size_t i = begin; i < end; ++i) {
      n.lo = n.lo.cwiseMin(pts_[idx_[i]]);
      n.hi = n.hi.cwiseMax(pts_[idx_[i]]);
    }
    if (end - begin > kLeaf) {
      Point ext = n.hi - n.lo;
      ext.maxCoeff(&n.axis);
      const std::size_t mid = (begin + end) / 2;
      const int ax = n.axis;
      std::nth_element(idx_.begin() + begin, idx_.begin() + mid, idx_.begin() + end,
                       [&](std::uint32_t a, std::uint32_t b) {
                         if (pts_[a][ax] != pts_[b][ax]) return pts_[a][ax] < pts_[b][ax];
                         return a < b;
                       });
      n.split = pts_[idx_[mid]][ax];
      nodes_[id] = n;
      const int l = build(begin, mid);
      const int r = build(mid, end);
      nodes_[id].left = l;
      nodes_[id].right = r;
    } else {
      nodes_[id] = n;
    }
    return id;
  }

  static double box_d2(const Node& n, const Point& q) {
    double d2 = 0.0;
    for (int a = 0; a < Dim; ++a) {
      const double d = q[a] < n.lo[a] ? n.lo[a] - q[a] : (q[a] > n.hi[a] ? q[a] - n.hi[a] : 0.0);
      d2 += d * d;
    }
    return d2;
  }

  void nearest_rec(int id, const Point& q, Best& best) const {
    const Node& n = nodes_[id];
    if (box_d2(n, q) > best.d2) return;
    if (n.left < 0) {
      for (std::uint32_t k = n.begin; k < n.end; ++k) {
        const std::size_t i = idx_[k];
        const double d2 = (pts_[i] - q).squaredNorm();
        if (d2 < best.d2 || (d2 == best.d2 && i < best.idx)) best = {d2, i};
      }
      return;
    }
    const bool go_left = q[n.axis] < n.split;
    nearest_rec(go_left ? n.left : n.right, q, best);
    nearest_rec(go_left ? n.right : n.left, q, best);
  }

  void knn_rec(int id, const Point& q, std::size_t k,
               std::vector<std::pair<double, std::size_t>>& heap) const {
    const Node& n = nodes_[id];
    if (heap.size() == k && box_d2(n, q) > heap.front().first) return;
    if (n.left < 0) {
      for (std::uint32_t j = n.begin; j < n.end; ++j) {
        const std::size_t i = idx_[j];
        std::pair<double, std::size_t> c{(pts_[i] - q).squaredNorm(), i};
        if (heap.size() < k) {
          heap.push_back(c);
          std::push_heap(heap.begin(), heap.end());
        } else if (c < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = c;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      return;
    }
    const bool go_left = q[n.axis] < n.split;
    knn_rec(go_left ? n.left : n.right, q, k, heap);
    knn_rec(go_left ? n.right : n.left, q, k, heap);
  }

  template <class Fn>
  void radius_rec(int id, const Point& q, double r2, Fn& fn) const {
    const Node& n = nodes_[id];
    if (box_d2(n, q) > r2) return;
    if (n.left < 0) {
      for (std::uint32_t j = n.begin; j < n.end; ++j) {
        const std::size_t i = idx_[j];
        const double d2 = (pts_[i] - q).squaredNorm();
        if (d2 <= r2) fn(i, d2);
      }
      return;
    }
    radius_rec(n.left, q, r2, fn);
    radius_rec(n.right, q, r2, fn);
  }

  std::vector<Point> pts_;
  std::vector<std::uint32_t> idx_;
  std::vector<Node> nodes_;
};

using KdTree3 = KdTree<3>;
using KdTree2 = KdTree<2>;

}  // namespace atx
