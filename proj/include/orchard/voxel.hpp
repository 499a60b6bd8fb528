#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "orchard/cloud.hpp"
#include "orchard/error.hpp"
#include "orchard/geometry.hpp"

namespace orchard {

/// Integer voxel coordinate (k, l, m) along (x, y, z).
struct Voxel {
  int x = 0;
  int y = 0;
  int z = 0;

  friend auto operator<=>(const Voxel&, const Voxel&) = default;
  Voxel operator+(const Voxel& o) const { return {x + o.x, y + o.y, z + o.z}; }
};

/// Key usable in hash maps; valid for |coordinate| < 2^20.
constexpr std::int64_t voxel_key(const Voxel& v) noexcept {
  constexpr std::int64_t bias = std::int64_t{1} << 20;
  return ((std::int64_t{v.x} + bias) << 42) | ((std::int64_t{v.y} + bias) << 21) |
         (std::int64_t{v.z} + bias);
}

constexpr Voxel voxel_from_key(std::int64_t key) noexcept {
  constexpr std::int64_t bias = std::int64_t{1} << 20;
  constexpr std::int64_t mask = (std::int64_t{1} << 21) - 1;
  return {static_cast<int>(((key >> 42) & mask) - bias),
          static_cast<int>(((key >> 21) & mask) - bias), static_cast<int>((key & mask) - bias)};
}

/// Ordering by (y, z, x), the component ordering convention.
constexpr bool yzx_less(const Voxel& a, const Voxel& b) noexcept {
  if (a.y != b.y) return a.y < b.y;
  if (a.z != b.z) return a.z < b.z;
  return a.x < b.x;
}

/// Regular grid fitted to a bounding box: dims_k = floor((max_k - min_k) / edge) + 1.
struct GridGeometry {
  Vec3 origin = Vec3::Zero();
  double edge = 0.005;
  std::array<int, 3> dims{1, 1, 1};

  std::int64_t cell_count() const noexcept {
    return std::int64_t{dims[0]} * dims[1] * dims[2];
  }

  bool contains(const Voxel& v) const noexcept {
    return v.x >= 0 && v.y >= 0 && v.z >= 0 && v.x < dims[0] && v.y < dims[1] && v.z < dims[2];
  }

  std::int64_t linear(const Voxel& v) const noexcept {
    return v.x + std::int64_t{dims[0]} * (v.y + std::int64_t{dims[1]} * v.z);
  }

  Voxel from_linear(std::int64_t i) const noexcept {
    const std::int64_t nx = dims[0];
    const std::int64_t nxy = nx * dims[1];
    return {static_cast<int>(i % nx), static_cast<int>((i % nxy) / nx), static_cast<int>(i / nxy)};
  }

  /// Half-open binning: floor((p - origin) / edge), clamped into the grid.
  Voxel bin(const Vec3& p) const noexcept {
    Voxel v{static_cast<int>(std::floor((p.x() - origin.x()) / edge)),
            static_cast<int>(std::floor((p.y() - origin.y()) / edge)),
            static_cast<int>(std::floor((p.z() - origin.z()) / edge))};
    v.x = std::clamp(v.x, 0, dims[0] - 1);
    v.y = std::clamp(v.y, 0, dims[1] - 1);
    v.z = std::clamp(v.z, 0, dims[2] - 1);
    return v;
  }

  Vec3 center(const Voxel& v) const noexcept {
    return origin + edge * Vec3(v.x + 0.5, v.y + 0.5, v.z + 0.5);
  }

  static GridGeometry fit(const Bounds& b, double edge) {
    GridGeometry g;
    g.origin = b.min;
    g.edge = edge;
    for (int k = 0; k < 3; ++k) {
      g.dims[k] = static_cast<int>(std::floor((b.max[k] - b.min[k]) / edge)) + 1;
    }
    return g;
  }
};

/// Binary occupancy over a GridGeometry (x fastest, then y, then z).
class VoxelGrid {
 public:
  VoxelGrid() = default;
  explicit VoxelGrid(const GridGeometry& geometry)
      : geometry_(geometry), occupancy_(static_cast<std::size_t>(geometry.cell_count()), 0) {}

  const GridGeometry& geometry() const noexcept { return geometry_; }
  std::span<const std::uint8_t> occupancy() const noexcept { return occupancy_; }

  bool occupied(const Voxel& v) const noexcept {
    return geometry_.contains(v) && occupancy_[geometry_.linear(v)] != 0;
  }
  void set(const Voxel& v, bool value = true) { occupancy_[geometry_.linear(v)] = value ? 1 : 0; }
  std::vector<std::uint8_t>& raw() noexcept { return occupancy_; }

  std::size_t occupied_count() const noexcept {
    std::size_t n = 0;
    for (auto c : occupancy_) n += c != 0;
    return n;
  }

  /// Occupied voxels in linear (z-major) order.
  std::vector<Voxel> occupied_voxels() const {
    std::vector<Voxel> out;
    for (std::size_t i = 0; i < occupancy_.size(); ++i) {
      if (occupancy_[i]) out.push_back(geometry_.from_linear(static_cast<std::int64_t>(i)));
    }
    return out;
  }

 private:
  GridGeometry geometry_;
  std::vector<std::uint8_t> occupancy_;
};

/// Fits a grid to the points' bounding box and marks every voxel holding a point.
inline VoxelGrid voxelize(std::span<const Vec3> points, double voxel_edge) {
  if (points.empty()) throw Error(ErrorCode::EmptyInput, "voxelize: empty point set");
  if (!(voxel_edge > 0.0)) throw Error(ErrorCode::DegenerateInput, "voxelize: edge must be > 0");
  VoxelGrid grid(GridGeometry::fit(bounds_of(points), voxel_edge));
  for (const auto& p : points) grid.set(grid.geometry().bin(p));
  return grid;
}

inline VoxelGrid voxelize(const ColorPointCloud& cloud, double voxel_edge) {
  return voxelize(std::span<const Vec3>(cloud.points), voxel_edge);
}

/// Fills enclosed background pockets (6-connected background regions that
/// cannot reach the grid boundary) of at most `max_cavity` voxels. Returns the
/// number of voxels filled.
inline std::size_t fill_cavities(VoxelGrid& grid, std::size_t max_cavity = 4096) {
  constexpr std::uint8_t kOutside = 2, kVisiting = 3;
  const auto& g = grid.geometry();
  auto& occ = grid.raw();
  const std::int64_t nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
  const std::array<std::int64_t, 6> step{1, -1, nx, -nx, nx * ny, -nx * ny};
  auto on_boundary = [&](std::int64_t i) {
    const std::int64_t x = i % nx, y = (i / nx) % ny, z = i / (nx * ny);
    return x == 0 || y == 0 || z == 0 || x == nx - 1 || y == ny - 1 || z == nz - 1;
  };
  auto neighbor = [&](std::int64_t i, int k, std::int64_t& j) {
    const std::int64_t x = i % nx, y = (i / nx) % ny, z = i / (nx * ny);
    switch (k) {
      case 0: if (x + 1 >= nx) return false; break;
      case 1: if (x == 0) return false; break;
      case 2: if (y + 1 >= ny) return false; break;
      case 3: if (y == 0) return false; break;
      case 4: if (z + 1 >= nz) return false; break;
      default: if (z == 0) return false; break;
    }
    j = i + step[k];
    return true;
  };

  std::size_t filled = 0;
  std::vector<std::int64_t> region, stack;
  for (std::int64_t s = 0; s < static_cast<std::int64_t>(occ.size()); ++s) {
    if (occ[s] != 1) continue;
    for (int k = 0; k < 6; ++k) {
      std::int64_t seed = 0;
      if (!neighbor(s, k, seed) || occ[seed] != 0) continue;
      region.clear();
      stack.assign(1, seed);
      occ[seed] = kVisiting;
      bool outside = false;
      while (!stack.empty()) {
        const auto i = stack.back();
        stack.pop_back();
        region.push_back(i);
        if (on_boundary(i) || region.size() > max_cavity) {
          outside = true;
          break;
        }
        for (int d = 0; d < 6; ++d) {
          std::int64_t j = 0;
          if (!neighbor(i, d, j)) continue;
          if (occ[j] == kOutside) {
            outside = true;
            break;
          }
          if (occ[j] == 0) {
            occ[j] = kVisiting;
            stack.push_back(j);
          }
        }
        if (outside) break;
      }
      const std::uint8_t mark = outside ? kOutside : 1;
      for (auto i : region) occ[i] = mark;
      for (auto i : stack) occ[i] = mark;
      if (!outside) filled += region.size();
    }
  }
  for (auto& c : occ)
    if (c == kOutside) c = 0;
  return filled;
}

}  // namespace orchard
