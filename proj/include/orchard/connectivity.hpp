#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "orchard/thinning.hpp"
#include "orchard/voxel.hpp"

namespace orchard {

/// The 26 neighbor offsets in lexicographic (dx, dy, dz) order.
inline const std::array<Voxel, 26>& neighbor_offsets26() {
  static const std::array<Voxel, 26> offsets = [] {
    std::array<Voxel, 26> out{};
    int n = 0;
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz)
          if (dx || dy || dz) out[n++] = {dx, dy, dz};
    return out;
  }();
  return offsets;
}

/// Open-addressing map from voxel to a dense index in [0, n).
class VoxelIndex {
 public:
  VoxelIndex() = default;
  explicit VoxelIndex(std::span<const Voxel> voxels) {
    std::size_t cap = 16;
    while (cap < voxels.size() * 2 + 1) cap <<= 1;
    keys_.assign(cap, kEmpty);
    values_.assign(cap, -1);
    mask_ = cap - 1;
    for (std::size_t i = 0; i < voxels.size(); ++i) insert(voxel_key(voxels[i]), static_cast<std::int32_t>(i));
  }

  /// Index of v, or -1.
  std::int32_t find(const Voxel& v) const noexcept {
    if (keys_.empty()) return -1;
    const std::int64_t key = voxel_key(v);
    for (std::size_t s = slot(key);; s = (s + 1) & mask_) {
      if (keys_[s] == key) return values_[s];
      if (keys_[s] == kEmpty) return -1;
    }
  }

  bool contains(const Voxel& v) const noexcept { return find(v) >= 0; }

 private:
  static constexpr std::int64_t kEmpty = -1;

  std::size_t slot(std::int64_t key) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(key) * 0x9E3779B97F4A7C15ull;
    return static_cast<std::size_t>(h >> 17) & mask_;
  }

  void insert(std::int64_t key, std::int32_t value) {
    for (std::size_t s = slot(key);; s = (s + 1) & mask_) {
      if (keys_[s] == key) return;  // duplicates keep their first index
      if (keys_[s] == kEmpty) {
        keys_[s] = key;
        values_[s] = value;
        return;
      }
    }
  }

  std::vector<std::int64_t> keys_;
  std::vector<std::int32_t> values_;
  std::size_t mask_ = 0;
};

/// Dense adjacency over a voxel set under 26-connectivity, neighbors listed
/// in lexicographic offset order.
class VoxelGraph {
 public:
  explicit VoxelGraph(std::span<const Voxel> voxels) : voxels_(voxels.begin(), voxels.end()), index_(voxels) {
    start_.assign(voxels_.size() + 1, 0);
    for (std::size_t i = 0; i < voxels_.size(); ++i) {
      for (const auto& d : neighbor_offsets26()) {
        const auto j = index_.find(voxels_[i] + d);
        if (j >= 0 && static_cast<std::size_t>(j) != i) adj_.push_back(j);
      }
      start_[i + 1] = adj_.size();
    }
  }

  std::size_t size() const noexcept { return voxels_.size(); }
  const Voxel& voxel(std::size_t i) const noexcept { return voxels_[i]; }
  const std::vector<Voxel>& voxels() const noexcept { return voxels_; }
  const VoxelIndex& index() const noexcept { return index_; }

  std::span<const std::int32_t> neighbors(std::size_t i) const noexcept {
    return {adj_.data() + start_[i], adj_.data() + start_[i + 1]};
  }
  std::size_t degree(std::size_t i) const noexcept { return start_[i + 1] - start_[i]; }

 private:
  std::vector<Voxel> voxels_;
  VoxelIndex index_;
  std::vector<std::size_t> start_;
  std::vector<std::int32_t> adj_;
};

/// Component label per voxel of the graph (labels ordered by discovery).
inline std::vector<std::int32_t> component_labels(const VoxelGraph& graph, std::span<const std::uint8_t> removed = {}) {
  std::vector<std::int32_t> label(graph.size(), -1);
  std::vector<std::int32_t> stack;
  std::int32_t next = 0;
  for (std::size_t s = 0; s < graph.size(); ++s) {
    if (label[s] >= 0 || (!removed.empty() && removed[s])) continue;
    label[s] = next;
    stack.push_back(static_cast<std::int32_t>(s));
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (auto w : graph.neighbors(u)) {
        if (label[w] < 0 && (removed.empty() || !removed[w])) {
          label[w] = next;
          stack.push_back(w);
        }
      }
    }
    ++next;
  }
  return label;
}

/// Partition under 26-connectivity (flood fill). Components are sorted by
/// their minimum (y, z, x) voxel; voxels inside a component are sorted too.
inline std::vector<std::vector<Voxel>> connected_components(std::span<const Voxel> voxels) {
  if (voxels.empty()) return {};
  std::vector<Voxel> unique(voxels.begin(), voxels.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  const VoxelGraph graph(unique);
  const auto label = component_labels(graph);
  const auto count = label.empty() ? 0 : *std::max_element(label.begin(), label.end()) + 1;
  std::vector<std::vector<Voxel>> comps(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < unique.size(); ++i) comps[label[i]].push_back(unique[i]);
  std::vector<Voxel> first(comps.size());
  for (std::size_t c = 0; c < comps.size(); ++c) {
    first[c] = *std::min_element(comps[c].begin(), comps[c].end(), yzx_less);
  }
  std::vector<std::size_t> order(comps.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return yzx_less(first[a], first[b]); });
  std::vector<std::vector<Voxel>> sorted;
  sorted.reserve(comps.size());
  for (auto c : order) sorted.push_back(std::move(comps[c]));
  return sorted;
}

/// Breadth-first shortest path (hop count) on the graph, optionally skipping
/// removed vertices. Returns vertex indices from start to goal, or nullopt.
inline std::optional<std::vector<std::int32_t>> shortest_path_indices(
    const VoxelGraph& graph, std::int32_t start, std::int32_t goal, std::span<const std::uint8_t> removed = {}) {
  if (start < 0 || goal < 0) return std::nullopt;
  auto is_removed = [&](std::int32_t i) { return !removed.empty() && removed[i]; };
  if (is_removed(start) || is_removed(goal)) return std::nullopt;
  if (start == goal) return std::vector<std::int32_t>{start};
  std::vector<std::int32_t> parent(graph.size(), -1);
  std::deque<std::int32_t> queue{start};
  parent[start] = start;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (auto w : graph.neighbors(u)) {
      if (parent[w] >= 0 || is_removed(w)) continue;
      parent[w] = u;
      if (w == goal) {
        std::vector<std::int32_t> path{goal};
        for (auto v = goal; v != start; v = parent[v]) path.push_back(parent[v]);
        std::reverse(path.begin(), path.end());
        return path;
      }
      queue.push_back(w);
    }
  }
  return std::nullopt;
}

/// Hop-count shortest path between two voxels of a set; nullopt when they lie
/// in different components (NotConnected). Ties follow lexicographic offsets.
inline std::optional<std::vector<Voxel>> shortest_path(std::span<const Voxel> voxels, const Voxel& start,
                                                       const Voxel& goal) {
  const VoxelGraph graph(voxels);
  const auto s = graph.index().find(start);
  const auto t = graph.index().find(goal);
  if (s < 0 || t < 0) throw Error(ErrorCode::DegenerateInput, "shortest_path: endpoint not in voxel set");
  auto idx = shortest_path_indices(graph, s, t);
  if (!idx) return std::nullopt;
  std::vector<Voxel> path;
  path.reserve(idx->size());
  for (auto i : *idx) path.push_back(graph.voxel(i));
  return path;
}

inline std::optional<std::vector<Voxel>> shortest_path(const Skeleton& skeleton, const Voxel& start,
                                                       const Voxel& goal) {
  return shortest_path(std::span<const Voxel>(skeleton.voxels), start, goal);
}

/// Euclidean length (meters) of a voxel path through voxel centers.
inline double path_length(std::span<const Voxel> path, double edge) {
  double len = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double dx = path[i].x - path[i - 1].x, dy = path[i].y - path[i - 1].y, dz = path[i].z - path[i - 1].z;
    len += std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return len * edge;
}

}  // namespace orchard
