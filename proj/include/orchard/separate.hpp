#pragma once

// Individual tree delineation on the wire-free winter cloud: skeleton
// components are attached to trunks, touching trees are cut apart and
// floating pieces are given to a neighbor. Point labels follow the nearest
// labeled skeleton voxel.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "orchard/connectivity.hpp"
#include "orchard/error.hpp"
#include "orchard/geometry.hpp"
#include "orchard/kdtree.hpp"
#include "orchard/log.hpp"
#include "orchard/segment.hpp"
#include "orchard/thinning.hpp"
#include "orchard/voxel.hpp"

namespace orchard {

struct SeparateParams {
  double voxel_edge = 0.005;
  bool fill_cavities = true;
  double component_trunk_dist = 0.30;
  double floating_ratio = 3.0;
  int end_neighbors = 10;
  double trunk_cylinder_radius = 0.15;
  int path_tolerance_voxels = 1;  // Chebyshev radius around the main axes
};

enum class ComponentStatus { Assigned, Spanning, Floating };

struct ComponentAssignment {
  ComponentStatus status = ComponentStatus::Floating;
  std::vector<int> trees;  // ascending base y
};

/// Vertical trunk segment from the base up to the top of the main axis.
struct TrunkSegment {
  int id = 0;
  Vec3 base = Vec3::Zero();
  Vec3 top = Vec3::Zero();
};

inline std::vector<TrunkSegment> trunk_segments(const TreeSet& trees) {
  std::vector<TrunkSegment> out;
  for (const auto& t : trees.trees) {
    double zt = t.base.z();
    for (const auto& p : t.main_axis) zt = std::max(zt, p.z());
    out.push_back({t.id, t.base, Vec3(t.base.x(), t.base.y(), zt)});
  }
  return out;
}

inline double component_trunk_distance(std::span<const Vec3> centers, const TrunkSegment& s) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : centers) best = std::min(best, point_segment_distance(c, s.base, s.top));
  return best;
}

inline ComponentAssignment assign_component(std::span<const Vec3> centers, std::span<const TrunkSegment> trunks,
                                            double max_dist) {
  ComponentAssignment a;
  for (const auto& s : trunks)
    if (component_trunk_distance(centers, s) < max_dist) a.trees.push_back(s.id);
  a.status = a.trees.empty() ? ComponentStatus::Floating
             : a.trees.size() == 1 ? ComponentStatus::Assigned
                                   : ComponentStatus::Spanning;
  return a;
}

inline std::vector<ComponentAssignment> assign_components(const std::vector<std::vector<Voxel>>& components,
                                                          const GridGeometry& geometry, const TreeSet& trees,
                                                          const SeparateParams& p) {
  const auto trunks = trunk_segments(trees);
  std::vector<ComponentAssignment> out;
  out.reserve(components.size());
  std::vector<Vec3> centers;
  for (const auto& comp : components) {
    centers.clear();
    for (const auto& v : comp) centers.push_back(geometry.center(v));
    out.push_back(assign_component(centers, trunks, p.component_trunk_dist));
  }
  return out;
}

struct SplitPiece {
  std::vector<Voxel> voxels;
  int tree = 0;
};

struct SplitResult {
  std::vector<SplitPiece> pieces;
  std::vector<Voxel> cuts;
};

namespace detail {

/// Cut voxel on a connecting path: largest vertical deviation from the chord
/// between the path ends, then highest z, then earliest on the path.
inline std::size_t pick_cut(std::span<const Vec3> cp) {
  const Vec3 a = cp.front(), b = cp.back();
  const Eigen::Vector2d ab(b.x() - a.x(), b.y() - a.y());
  const double l2 = ab.squaredNorm();
  std::size_t best = 0;
  double best_dev = -1.0;
  for (std::size_t k = 0; k < cp.size(); ++k) {
    double t = 0.0;
    if (l2 > 0) t = std::clamp(Eigen::Vector2d(cp[k].x() - a.x(), cp[k].y() - a.y()).dot(ab) / l2, 0.0, 1.0);
    const double dev = std::abs(cp[k].z() - (a.z() + t * (b.z() - a.z())));
    const bool better = dev > best_dev + 1e-12 ||
                        (std::abs(dev - best_dev) <= 1e-12 && cp[k].z() > cp[best].z());
    if (better) {
      best = k;
      best_dev = dev;
    }
  }
  return best;
}

}  // namespace detail

/// Separates a component spanning several trees. `spanned` lists tree ids in
/// ascending base y; trees are looked up in `trees`.
inline SplitResult split_spanning(std::span<const Voxel> component, std::span<const int> spanned, const TreeSet& trees,
                                  const GridGeometry& geometry, const SeparateParams& p) {
  SplitResult out;
  std::vector<Voxel> vox(component.begin(), component.end());
  std::sort(vox.begin(), vox.end());
  const VoxelGraph graph(vox);
  const std::size_t n = vox.size();
  std::vector<std::uint8_t> removed(n, 0);
  const auto all_trunks = trunk_segments(trees);

  struct Local {
    int id;
    std::int32_t top = -1;
    std::vector<std::int32_t> sp;
  };
  std::vector<Local> local;
  const double r2 = p.trunk_cylinder_radius * p.trunk_cylinder_radius;
  for (int id : spanned) {
    const auto it = std::find_if(trees.trees.begin(), trees.trees.end(), [&](const Tree& t) { return t.id == id; });
    if (it == trees.trees.end()) continue;
    std::int32_t top = -1, bottom = -1;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 c = geometry.center(vox[i]);
      const double dx = c.x() - it->base.x(), dy = c.y() - it->base.y();
      if (dx * dx + dy * dy >= r2) continue;
      const auto& v = vox[i];
      if (top < 0 || v.z > vox[top].z) top = static_cast<std::int32_t>(i);
      if (bottom < 0 || v.z < vox[bottom].z) bottom = static_cast<std::int32_t>(i);
    }
    if (top < 0) continue;
    Local l{id, top, {}};
    if (auto sp = shortest_path_indices(graph, bottom, top)) l.sp = std::move(*sp);
    else l.sp = {top};
    local.push_back(std::move(l));
  }

  const int tol = p.path_tolerance_voxels;
  auto protect = [&](const Local& a, const Local& b) {
    std::vector<std::uint8_t> mask(n, 0);
    for (const auto* l : {&a, &b})
      for (auto i : l->sp) {
        const Voxel& v = vox[i];
        for (int dx = -tol; dx <= tol; ++dx)
          for (int dy = -tol; dy <= tol; ++dy)
            for (int dz = -tol; dz <= tol; ++dz) {
              const auto j = graph.index().find(v + Voxel{dx, dy, dz});
              if (j >= 0) mask[j] = 1;
            }
      }
    return mask;
  };

  auto separate_pair = [&](const Local& a, const Local& b) {
    const auto mask = protect(a, b);
    std::vector<Vec3> cp;
    std::vector<std::int32_t> cp_idx;
    for (std::size_t guard = 0; guard <= n; ++guard) {
      const auto path = shortest_path_indices(graph, a.top, b.top, removed);
      if (!path) return;
      cp.clear();
      cp_idx.clear();
      // longest run of consecutive path voxels off both main axes
      std::size_t run_start = 0, best_start = 0, best_len = 0;
      for (std::size_t q = 0; q <= path->size(); ++q) {
        const bool off = q < path->size() && !mask[(*path)[q]];
        if (off) continue;
        if (q - run_start > best_len) {
          best_len = q - run_start;
          best_start = run_start;
        }
        run_start = q + 1;
      }
      for (std::size_t q = best_start; q < best_start + best_len; ++q) {
        cp.push_back(geometry.center(vox[(*path)[q]]));
        cp_idx.push_back((*path)[q]);
      }
      if (cp.empty()) {
        // the two main axes touch; cut the middle of the interior path
        if (path->size() <= 2) {
          logger().warn("trees {} and {} touch at their tops; left connected", a.id, b.id);
          return;
        }
        const auto mid = (*path)[path->size() / 2];
        removed[mid] = 1;
        out.cuts.push_back(vox[mid]);
        continue;
      }
      const auto k = detail::pick_cut(cp);
      removed[cp_idx[k]] = 1;
      out.cuts.push_back(vox[cp_idx[k]]);
    }
  };

  for (std::size_t k = 0; k + 1 < local.size(); ++k) separate_pair(local[k], local[k + 1]);
  for (std::size_t a = 0; a < local.size(); ++a)
    for (std::size_t b = a + 2; b < local.size(); ++b) separate_pair(local[a], local[b]);

  const auto label = component_labels(graph, removed);
  const auto count = label.empty() ? 0 : *std::max_element(label.begin(), label.end()) + 1;
  std::vector<std::vector<Voxel>> pieces(static_cast<std::size_t>(std::max(0, count)));
  for (std::size_t i = 0; i < n; ++i)
    if (label[i] >= 0) pieces[label[i]].push_back(vox[i]);

  std::vector<TrunkSegment> trunks;
  for (const auto& l : local)
    for (const auto& s : all_trunks)
      if (s.id == l.id) trunks.push_back(s);
  if (trunks.empty())
    for (int id : spanned)
      for (const auto& s : all_trunks)
        if (s.id == id) trunks.push_back(s);
  std::vector<Vec3> centers;
  for (auto& piece : pieces) {
    centers.clear();
    for (const auto& v : piece) centers.push_back(geometry.center(v));
    int best = trunks.empty() ? 0 : trunks.front().id;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& s : trunks) {
      const double d = component_trunk_distance(centers, s);
      if (d < best_d) {
        best_d = d;
        best = s.id;
      }
    }
    out.pieces.push_back({std::move(piece), best});
  }
  return out;
}

struct AssignedComponent {
  std::vector<Vec3> centers;
  int tree = 0;
  KdTree index;
};

/// Tree of a floating component given the components already attached.
inline int assign_floating(std::span<const Voxel> component, const GridGeometry& geometry,
                           std::span<const AssignedComponent> assigned, const SeparateParams& p) {
  if (assigned.empty()) throw Error(ErrorCode::EmptyTrees, "no assigned component to attach a floating one to");
  if (assigned.size() == 1) return assigned.front().tree;
  std::vector<Vec3> centers;
  for (const auto& v : component) centers.push_back(geometry.center(v));
  std::size_t f1 = 0, f2 = 1;
  double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
  for (std::size_t f = 0; f < assigned.size(); ++f) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& c : centers) d = std::min(d, assigned[f].index.nearest(c).distance);
    if (d < d1) {
      d2 = d1;
      f2 = f1;
      d1 = d;
      f1 = f;
    } else if (d < d2) {
      d2 = d;
      f2 = f;
    }
  }
  if (d1 <= 0.0 || d2 / d1 > p.floating_ratio) return assigned[f1].tree;

  std::vector<Voxel> sorted(component.begin(), component.end());
  std::sort(sorted.begin(), sorted.end());
  const VoxelGraph graph(sorted);
  std::vector<Vec3> local;
  for (const auto& v : sorted) local.push_back(geometry.center(v));
  const KdTree local_index(local);
  double e1 = std::numeric_limits<double>::infinity(), e2 = e1;
  bool any = false;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (graph.degree(i) != 1) continue;
    const auto nn = local_index.knn(local[i], static_cast<std::size_t>(p.end_neighbors));
    if (nn.size() < 2) continue;
    std::vector<Vec3> pts;
    for (const auto& q : nn) pts.push_back(local[q.index]);
    const auto axis = principal_axis(pts);
    const Line3 line = Line3::from_direction(axis.centroid, axis.direction);
    any = true;
    for (const auto& c : assigned[f1].centers) e1 = std::min(e1, point_line_distance(c, line));
    for (const auto& c : assigned[f2].centers) e2 = std::min(e2, point_line_distance(c, line));
  }
  if (!any) return assigned[f1].tree;
  return e1 < e2 ? assigned[f1].tree : assigned[f2].tree;
}

struct SeparationResult {
  Skeleton skeleton;
  std::vector<std::vector<Voxel>> components;
  std::vector<ComponentAssignment> assignment;
  std::vector<SplitPiece> labeled;  // every skeleton piece with its tree
  std::vector<Voxel> cuts;
  std::vector<int> point_tree;      // per point of the trees cloud
  std::size_t spanning = 0;
  std::size_t floating = 0;
};

/// Nearest labeled skeleton voxel for every point.
inline std::vector<int> propagate_labels(std::span<const Vec3> points, std::span<const SplitPiece> labeled,
                                         const GridGeometry& geometry) {
  std::vector<Vec3> centers;
  std::vector<int> ids;
  for (const auto& piece : labeled)
    for (const auto& v : piece.voxels) {
      centers.push_back(geometry.center(v));
      ids.push_back(piece.tree);
    }
  if (centers.empty()) throw Error(ErrorCode::EmptyTrees, "no labeled skeleton voxel");
  const KdTree index(centers);
  std::vector<int> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = ids[index.nearest(points[i]).index];
  return out;
}

inline SeparationResult separate_trees(std::span<const Vec3> tree_points, const TreeSet& trees,
                                       const SeparateParams& p) {
  if (tree_points.empty()) throw Error(ErrorCode::EmptyTrees, "separate: empty trees cloud");
  if (trees.empty()) throw Error(ErrorCode::EmptyTrees, "separate: no verified trees");
  SeparationResult r;
  VoxelGrid grid = voxelize(tree_points, p.voxel_edge);
  if (p.fill_cavities) fill_cavities(grid);
  r.skeleton = skeletonize(grid);
  const auto& geo = r.skeleton.geometry;
  r.components = connected_components(r.skeleton.voxels);
  r.assignment = assign_components(r.components, geo, trees, p);

  for (std::size_t c = 0; c < r.components.size(); ++c) {
    const auto& a = r.assignment[c];
    if (a.status == ComponentStatus::Assigned) {
      r.labeled.push_back({r.components[c], a.trees.front()});
    } else if (a.status == ComponentStatus::Spanning) {
      ++r.spanning;
      auto split = split_spanning(r.components[c], a.trees, trees, geo, p);
      for (auto& piece : split.pieces) r.labeled.push_back(std::move(piece));
      r.cuts.insert(r.cuts.end(), split.cuts.begin(), split.cuts.end());
    }
  }
  std::vector<AssignedComponent> assigned;
  assigned.reserve(r.labeled.size());
  for (const auto& piece : r.labeled) {
    AssignedComponent ac;
    for (const auto& v : piece.voxels) ac.centers.push_back(geo.center(v));
    ac.tree = piece.tree;
    ac.index = KdTree(ac.centers);
    assigned.push_back(std::move(ac));
  }
  if (assigned.empty()) throw Error(ErrorCode::EmptyTrees, "no skeleton component reaches a trunk");
  std::vector<SplitPiece> floating;
  for (std::size_t c = 0; c < r.components.size(); ++c) {
    if (r.assignment[c].status != ComponentStatus::Floating) continue;
    ++r.floating;
    floating.push_back({r.components[c], assign_floating(r.components[c], geo, assigned, p)});
  }
  for (auto& f : floating) r.labeled.push_back(std::move(f));
  r.point_tree = propagate_labels(tree_points, r.labeled, geo);
  return r;
}

}  // namespace orchard
