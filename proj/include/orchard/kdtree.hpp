#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include "orchard/error.hpp"
#include "orchard/geometry.hpp"

namespace orchard {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
};

/// Exact static 3D kd-tree. Ties in distance resolve to the lowest point index.
class KdTree {
 public:
  KdTree() = default;

  explicit KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::uint32_t{0});
    if (!points_.empty()) {
      nodes_.reserve(2 * points_.size() / kLeafSize + 2);
      build(0, order_.size(), 0);
    }
  }

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  const Vec3& point(std::size_t i) const noexcept { return points_[i]; }

  Neighbor nearest(const Vec3& q) const {
    if (points_.empty()) throw Error(ErrorCode::EmptyInput, "nearest_point: empty index");
    Best best{std::numeric_limits<double>::infinity(), std::numeric_limits<std::size_t>::max()};
    search_nearest(0, q, best);
    return {best.index, std::sqrt(best.d2)};
  }

  /// k nearest neighbors ordered by (distance, index).
  std::vector<Neighbor> knn(const Vec3& q, std::size_t k) const {
    if (points_.empty()) throw Error(ErrorCode::EmptyInput, "knn: empty index");
    k = std::min(k, points_.size());
    std::priority_queue<std::pair<double, std::size_t>> heap;  // max-heap on (d2, index)
    search_knn(0, q, k, heap);
    std::vector<Neighbor> out(heap.size());
    for (std::size_t i = heap.size(); i-- > 0;) {
      out[i] = {heap.top().second, std::sqrt(heap.top().first)};
      heap.pop();
    }
    return out;
  }

  /// Indices of all points with distance < radius, ascending index order.
  std::vector<std::size_t> radius(const Vec3& q, double r) const {
    std::vector<std::size_t> out;
    if (!points_.empty()) search_radius(0, q, r * r, out);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  static constexpr std::size_t kLeafSize = 12;

  struct Node {
    std::uint32_t begin = 0, end = 0;
    std::int32_t left = -1, right = -1;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    Vec3 lo, hi;    // bounding box
  };

  struct Best {
    double d2;
    std::size_t index;
  };

  std::int32_t build(std::size_t begin, std::size_t end, int depth) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({});
    Node node;
    node.begin = static_cast<std::uint32_t>(begin);
    node.end = static_cast<std::uint32_t>(end);
    Bounds b;
    for (std::size_t i = begin; i < end; ++i) b.extend(points_[order_[i]]);
    node.lo = b.min;
    node.hi = b.max;
    if (end - begin > kLeafSize) {
      int axis = 0;
      (b.max - b.min).maxCoeff(&axis);
      const std::size_t mid = (begin + end) / 2;
      std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                       [&](std::uint32_t a, std::uint32_t c) { return points_[a][axis] < points_[c][axis]; });
      node.axis = axis;
      node.split = points_[order_[mid]][axis];
      node.left = build(begin, mid, depth + 1);
      node.right = build(mid, end, depth + 1);
    }
    nodes_[id] = node;
    return id;
  }

  static double box_d2(const Node& n, const Vec3& q) {
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double d = q[k] < n.lo[k] ? n.lo[k] - q[k] : (q[k] > n.hi[k] ? q[k] - n.hi[k] : 0.0);
      d2 += d * d;
    }
    return d2;
  }

  void search_nearest(std::int32_t id, const Vec3& q, Best& best) const {
    const Node& n = nodes_[id];
    if (box_d2(n, q) > best.d2) return;
    if (n.axis < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const std::size_t pi = order_[i];
        const double d2 = (points_[pi] - q).squaredNorm();
        if (d2 < best.d2 || (d2 == best.d2 && pi < best.index)) best = {d2, pi};
      }
      return;
    }
    const bool left_first = q[n.axis] < n.split;
    search_nearest(left_first ? n.left : n.right, q, best);
    search_nearest(left_first ? n.right : n.left, q, best);
  }

  void search_knn(std::int32_t id, const Vec3& q, std::size_t k,
                  std::priority_queue<std::pair<double, std::size_t>>& heap) const {
    const Node& n = nodes_[id];
    if (heap.size() == k && box_d2(n, q) > heap.top().first) return;
    if (n.axis < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const std::size_t pi = order_[i];
        const std::pair<double, std::size_t> cand{(points_[pi] - q).squaredNorm(), pi};
        if (heap.size() < k) {
          heap.push(cand);
        } else if (cand < heap.top()) {
          heap.pop();
          heap.push(cand);
        }
      }
      return;
    }
    const bool left_first = q[n.axis] < n.split;
    search_knn(left_first ? n.left : n.right, q, k, heap);
    search_knn(left_first ? n.right : n.left, q, k, heap);
  }

  void search_radius(std::int32_t id, const Vec3& q, double r2, std::vector<std::size_t>& out) const {
    const Node& n = nodes_[id];
    if (box_d2(n, q) >= r2) return;
    if (n.axis < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        if ((points_[order_[i]] - q).squaredNorm() < r2) out.push_back(order_[i]);
      }
      return;
    }
    search_radius(n.left, q, r2, out);
    search_radius(n.right, q, r2, out);
  }

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Exact nearest neighbor of `query` in an indexed cloud.
inline Neighbor nearest_point(const KdTree& index, const Vec3& query) { return index.nearest(query); }

}  // namespace orchard
