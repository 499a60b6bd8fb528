#pragma once

// Topology-preserving 3D medial-axis thinning of a binary voxel grid.
//
// Border voxels are peeled in six directional sub-iterations. A voxel is
// removed only when it is (a) not a curve end (exactly one 26-neighbor),
// (b) Euler invariant over its eight 2x2x2 octants, and (c) its 26-neighbors
// form a single 26-connected component. Candidates collected in a
// sub-iteration are re-checked one by one before deletion, so each deletion
// is of a simple point in the current image. Voxels outside the grid count
// as background.

#include <array>
#include <bit>
#include <cstdint>
#include <vector>

#include "orchard/error.hpp"
#include "orchard/voxel.hpp"

namespace orchard {

/// One-voxel-thick thinning of an occupancy grid. Voxels are sorted.
struct Skeleton {
  GridGeometry geometry;
  std::vector<Voxel> voxels;

  std::size_t size() const noexcept { return voxels.size(); }
  bool empty() const noexcept { return voxels.empty(); }
  Vec3 center(const Voxel& v) const noexcept { return geometry.center(v); }
};

namespace detail {

/// Index of offset (dx,dy,dz) in a 3x3x3 neighborhood; the center is 13.
constexpr int nbr_index(int dx, int dy, int dz) { return (dz + 1) * 9 + (dy + 1) * 3 + (dx + 1); }

struct ThinningTables {
  // euler_delta[o][cfg]: 8x Euler-characteristic change of octant o when the
  // center is deleted, cfg = occupancy of the octant's 7 other voxels.
  std::array<std::array<std::int8_t, 128>, 8> euler_delta{};
  // Neighborhood indices of the 7 non-center voxels of each octant.
  std::array<std::array<int, 7>, 8> octant_members{};
  // 26-adjacency among neighborhood positions (center excluded).
  std::array<std::uint32_t, 27> adjacency{};

  // 8 * local Euler characteristic of a 2x2x2 block (bit i+2j+4k).
  static int block_euler8(unsigned mask) {
    auto bit = [&](int i, int j, int k) { return (mask >> (i + 2 * j + 4 * k)) & 1u; };
    int halves = 0;
    for (int s = 0; s < 2; ++s) {
      unsigned hx = 0, hy = 0, hz = 0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          hx |= bit(s, a, b);
          hy |= bit(a, s, b);
          hz |= bit(a, b, s);
        }
      halves += static_cast<int>(hx + hy + hz);
    }
    int pairs = 0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        pairs += static_cast<int>(bit(0, a, b) | bit(1, a, b));
        pairs += static_cast<int>(bit(a, 0, b) | bit(a, 1, b));
        pairs += static_cast<int>(bit(a, b, 0) | bit(a, b, 1));
      }
    const int any = mask != 0 ? 1 : 0;
    return 8 * any - 4 * halves + 2 * pairs - std::popcount(mask);
  }

  ThinningTables() {
    int o = 0;
    for (int sz : {-1, 1})
      for (int sy : {-1, 1})
        for (int sx : {-1, 1}) {
          // local block bit for each member; center is local (0,0,0) -> bit 0
          std::array<int, 7> local_bit{};
          int m = 0;
          for (int k = 0; k < 2; ++k)
            for (int j = 0; j < 2; ++j)
              for (int i = 0; i < 2; ++i) {
                if (i == 0 && j == 0 && k == 0) continue;
                octant_members[o][m] = nbr_index(i * sx, j * sy, k * sz);
                local_bit[m] = i + 2 * j + 4 * k;
                ++m;
              }
          for (unsigned cfg = 0; cfg < 128; ++cfg) {
            unsigned block = 0;
            for (int b = 0; b < 7; ++b)
              if (cfg & (1u << b)) block |= 1u << local_bit[b];
            euler_delta[o][cfg] =
                static_cast<std::int8_t>(block_euler8(block | 1u) - block_euler8(block));
          }
          ++o;
        }
    for (int a = 0; a < 27; ++a) {
      if (a == 13) continue;
      const int ax = a % 3, ay = (a / 3) % 3, az = a / 9;
      for (int b = 0; b < 27; ++b) {
        if (b == 13 || b == a) continue;
        const int bx = b % 3, by = (b / 3) % 3, bz = b / 9;
        if (std::abs(ax - bx) <= 1 && std::abs(ay - by) <= 1 && std::abs(az - bz) <= 1) {
          adjacency[a] |= 1u << b;
        }
      }
    }
  }
};

inline const ThinningTables& thinning_tables() {
  static const ThinningTables tables;
  return tables;
}

inline bool is_endpoint(std::uint32_t nbhd) {
  return std::popcount(nbhd & ~(1u << 13)) == 1;
}

inline bool is_euler_invariant(std::uint32_t nbhd) {
  const auto& t = thinning_tables();
  int sum = 0;
  for (int o = 0; o < 8; ++o) {
    unsigned cfg = 0;
    for (int b = 0; b < 7; ++b)
      if (nbhd & (1u << t.octant_members[o][b])) cfg |= 1u << b;
    sum += t.euler_delta[o][cfg];
  }
  return sum == 0;
}

/// True when the 26 neighbors form exactly one 26-connected component.
inline bool has_single_neighbor_component(std::uint32_t nbhd) {
  const auto& t = thinning_tables();
  const std::uint32_t fg = nbhd & ~(1u << 13);
  if (fg == 0) return false;
  std::uint32_t comp = fg & (~fg + 1u);
  std::uint32_t frontier = comp;
  while (frontier) {
    std::uint32_t next = 0;
    for (std::uint32_t f = frontier; f; f &= f - 1) {
      next |= t.adjacency[std::countr_zero(f)];
    }
    next &= fg & ~comp;
    comp |= next;
    frontier = next;
  }
  return comp == fg;
}

inline bool is_deletable(std::uint32_t nbhd) {
  return !is_endpoint(nbhd) && is_euler_invariant(nbhd) && has_single_neighbor_component(nbhd);
}

}  // namespace detail

/// Thins the occupied set of `grid` down to curves of one-voxel thickness.
/// Never adds voxels; preserves 26-components, cavities and tunnels.
inline Skeleton skeletonize(const VoxelGrid& grid) {
  const GridGeometry& g = grid.geometry();
  const std::int64_t px = g.dims[0] + 2, py = g.dims[1] + 2, pz = g.dims[2] + 2;
  std::vector<std::uint8_t> img(static_cast<std::size_t>(px * py * pz), 0);
  std::vector<std::int64_t> alive;
  {
    const auto occ = grid.occupancy();
    for (std::size_t i = 0; i < occ.size(); ++i) {
      if (!occ[i]) continue;
      const Voxel v = g.from_linear(static_cast<std::int64_t>(i));
      const std::int64_t pi = (v.x + 1) + px * ((v.y + 1) + py * (v.z + 1));
      img[pi] = 1;
      alive.push_back(pi);
    }
  }
  if (alive.empty()) throw Error(ErrorCode::EmptyInput, "skeletonize: empty grid");

  std::array<std::int64_t, 27> offset{};
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx)
        offset[detail::nbr_index(dx, dy, dz)] = dx + px * (dy + py * dz);

  auto neighborhood = [&](std::int64_t i) {
    std::uint32_t m = 0;
    for (int n = 0; n < 27; ++n) m |= static_cast<std::uint32_t>(img[i + offset[n]] != 0) << n;
    return m;
  };

  // -x, +x, +y, -y, +z, -z
  const std::array<std::int64_t, 6> border_dir{offset[detail::nbr_index(-1, 0, 0)],
                                               offset[detail::nbr_index(1, 0, 0)],
                                               offset[detail::nbr_index(0, 1, 0)],
                                               offset[detail::nbr_index(0, -1, 0)],
                                               offset[detail::nbr_index(0, 0, 1)],
                                               offset[detail::nbr_index(0, 0, -1)]};

  std::vector<std::int64_t> candidates;
  int unchanged = 0;
  while (unchanged < 6) {
    unchanged = 0;
    for (int b = 0; b < 6; ++b) {
      candidates.clear();
      for (auto i : alive) {
        if (img[i + border_dir[b]] != 0) continue;
        if (detail::is_deletable(neighborhood(i))) candidates.push_back(i);
      }
      bool changed = false;
      for (auto i : candidates) {
        if (detail::is_deletable(neighborhood(i))) {
          img[i] = 0;
          changed = true;
        }
      }
      if (changed) {
        std::erase_if(alive, [&](std::int64_t i) { return img[i] == 0; });
      } else {
        ++unchanged;
      }
    }
  }

  Skeleton out;
  out.geometry = g;
  out.voxels.reserve(alive.size());
  for (auto i : alive) {
    const int x = static_cast<int>(i % px) - 1;
    const int y = static_cast<int>((i / px) % py) - 1;
    const int z = static_cast<int>(i / (px * py)) - 1;
    out.voxels.push_back({x, y, z});
  }
  std::sort(out.voxels.begin(), out.voxels.end());
  return out;
}

}  // namespace orchard
