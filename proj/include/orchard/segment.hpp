#pragma once

// Semantic segmentation of a calibrated winter cloud: trellis lines and
// plane, trunk candidates and their verification, support poles, and the
// trunk / wire / pole labels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "orchard/cloud.hpp"
#include "orchard/connectivity.hpp"
#include "orchard/error.hpp"
#include "orchard/geometry.hpp"
#include "orchard/hough.hpp"
#include "orchard/kdtree.hpp"
#include "orchard/log.hpp"
#include "orchard/msac.hpp"
#include "orchard/thinning.hpp"
#include "orchard/voxel.hpp"

namespace orchard {

enum class SemanticLabel : std::int8_t {
  TreeTrunk = 0,
  Branch = 1,
  TrellisWireWaterPipe = 2,
  SupportPole = 3,
};

constexpr const char* to_string(SemanticLabel l) noexcept {
  switch (l) {
    case SemanticLabel::TreeTrunk: return "TreeTrunk";
    case SemanticLabel::Branch: return "Branch";
    case SemanticLabel::TrellisWireWaterPipe: return "TrellisWireWaterPipe";
    case SemanticLabel::SupportPole: return "SupportPole";
  }
  return "?";
}

struct SegmentParams {
  double voxel_edge = 0.005;
  bool fill_cavities = true;
  double hough_phi_step_deg = 0.5;
  double hough_threshold_ratio = 0.20;
  double hough_max_angle_deg = 10.0;
  double line_tube = 0.01;
  double plane_tol = 0.005;
  double wire_merge = 0.30;
  double slab_half_width = 0.05;
  double ground_cell = 0.01;
  double nms_window = 0.15;
  double nms_prominence = 5.0;
  double ground_smoothing_bins = 1.5;
  double trunk_cylinder_radius = 0.15;
  double min_trunk_path = 1.0;
  double trunk_label_dist = 0.03;
  double segment_cylinder_radius = 0.10;
  double trunk_offset = 0.04;
  double line_tol_lowest = 0.07;
  double line_tol_upper = 0.04;
  double wire_max_angle_deg = 10.0;
  double pole_radius = 0.045;
  double pole_shell_half_width = 0.005;
  double pole_slice = 0.02;
  double pole_height = 2.3;
  double pole_ratio = 0.8;
  int pole_min_points = 50;
  MsacOptions msac;
};

/// Rigid map into the trellis-aligned frame: p_hat = rotation * p + translation.
/// Rows of `rotation` are u_X, u_Y, u_Z; the translation only moves x_hat so
/// that the fitted plane is exactly x_hat = 0.
struct TrellisFrame {
  Plane3 plane;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  std::vector<double> heights;

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 invert(const Vec3& q) const { return rotation.transpose() * (q - translation); }
};

struct Tree {
  int id = 0;
  Vec3 base = Vec3::Zero();       // (0, y_hat, 0)
  std::vector<Vec3> main_axis;    // voxel centers from bottom to top
  double axis_length = 0.0;
  Vec3 top() const { return main_axis.back(); }
  Vec3 bottom() const { return main_axis.front(); }
};

struct TreeSet {
  std::vector<Tree> trees;
  std::size_t size() const noexcept { return trees.size(); }
  bool empty() const noexcept { return trees.empty(); }
};

struct HorizontalLines {
  std::vector<Line3> lines;
  std::vector<HoughPeak> peaks;
  BinaryImage projection;
  HoughAccumulator accumulator;
};

namespace detail {

inline VoxelGrid voxelize_for_thinning(std::span<const Vec3> pts, const SegmentParams& p) {
  VoxelGrid g = voxelize(pts, p.voxel_edge);
  if (p.fill_cavities) fill_cavities(g);
  return g;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Skeleton of the whole scene projected to YZ, Hough peaks near horizontal,
/// each peak back-projected to a 3D line whose depth x(y) is fitted to the
/// skeleton voxels lying on it.
inline HorizontalLines detect_horizontal_lines(std::span<const Vec3> points, const SegmentParams& p,
                                               std::uint64_t seed) {
  if (points.empty()) throw Error(ErrorCode::EmptyInput, "detect_horizontal_lines: empty cloud");
  const Skeleton skel = skeletonize(detail::voxelize_for_thinning(points, p));
  const auto& g = skel.geometry;
  HorizontalLines out;
  out.projection = BinaryImage(g.dims[1], g.dims[2]);
  for (const auto& v : skel.voxels) out.projection.at(v.y, v.z) = 1;
  out.accumulator = hough_transform(out.projection, p.hough_phi_step_deg);
  HoughPeakOptions opt;
  opt.threshold_ratio = p.hough_threshold_ratio;
  opt.max_abs_phi_deg = p.hough_max_angle_deg;
  out.peaks = hough_peaks(out.accumulator, opt);

  for (std::size_t k = 0; k < out.peaks.size(); ++k) {
    const auto& peak = out.peaks[k];
    std::vector<Vec3> near;
    for (const auto& v : skel.voxels) {
      if (hough_line_distance(peak, v.y, v.z) <= 1.0) {
        const Vec3 c = g.center(v);
        near.emplace_back(c.x(), c.y(), 0.0);
      }
    }
    if (near.size() < 2) continue;
    LineFit fit;
    try {
      fit = fit_line_msac(near, p.line_tube, detail::mix_seed(seed, 100 + k), 1, p.msac).front();
    } catch (const Error&) {
      continue;
    }
    const Vec3 d = fit.line.direction();
    if (std::abs(d.y()) < 0.5) continue;  // trace runs across the row
    double ylo = std::numeric_limits<double>::infinity(), yhi = -ylo;
    for (auto i : fit.inliers) {
      ylo = std::min(ylo, near[i].y());
      yhi = std::max(yhi, near[i].y());
    }
    if (!(yhi > ylo)) continue;
    auto at_y = [&](double y) {
      const double t = (y - fit.line.p1.y()) / d.y();
      const double x = fit.line.p1.x() + t * d.x();
      const double u = (y - g.origin.y()) / g.edge - 0.5;
      const double z = g.origin.z() + (hough_line_v(peak, u) + 0.5) * g.edge;
      return Vec3(x, y, z);
    };
    out.lines.push_back(Line3::through(at_y(ylo), at_y(yhi)));
  }
  if (out.lines.empty()) throw Error(ErrorCode::NoTrellisFound, "no horizontal line passed the Hough gates");
  return out;
}

struct TrellisEstimate {
  TrellisFrame frame;
  std::vector<std::size_t> tube;  // indices of points within line_tube of a line
  std::vector<std::size_t> plane_inliers;
};

inline std::vector<std::size_t> points_near_lines(std::span<const Vec3> pts, std::span<const Line3> lines, double tol) {
  std::vector<std::size_t> out;
  std::vector<Vec3> u;
  for (const auto& l : lines) u.push_back(l.direction());
  const double t2 = tol * tol;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t k = 0; k < lines.size(); ++k) {
      if ((pts[i] - lines[k].p1).cross(u[k]).squaredNorm() <= t2) {
        out.push_back(i);
        break;
      }
    }
  }
  return out;
}

inline TrellisEstimate estimate_trellis_frame(std::span<const Vec3> points, std::span<const Line3> lines,
                                              const SegmentParams& p, std::uint64_t seed) {
  if (lines.empty()) throw Error(ErrorCode::NoTrellisFound, "no lines to fit a trellis-plane");
  TrellisEstimate est;
  est.tube = points_near_lines(points, lines, p.line_tube);
  std::vector<Vec3> tube_pts;
  tube_pts.reserve(est.tube.size());
  for (auto i : est.tube) tube_pts.push_back(points[i]);
  PlaneFit plane;
  try {
    plane = fit_plane_msac(tube_pts, p.plane_tol, detail::mix_seed(seed, 1), p.msac);
  } catch (const Error& e) {
    throw Error(ErrorCode::NoTrellisFound, std::string("trellis-plane fit failed: ") + e.what());
  }
  for (auto i : plane.inliers) est.plane_inliers.push_back(est.tube[i]);

  Vec3 sum = Vec3::Zero();
  for (const auto& l : lines) {
    Vec3 d = l.p2 - l.p1;
    if (d.y() < 0) d = -d;
    sum += d;
  }
  Vec3 n = plane.plane.normal;
  double offset = plane.plane.offset;
  Vec3 uy = sum - sum.dot(n) * n;
  if (uy.norm() <= 1e-12) throw Error(ErrorCode::NoTrellisFound, "line directions are normal to the plane");
  uy.normalize();
  Vec3 uz = uy.cross(n);
  if (uz.z() < 0) {
    n = -n;
    offset = -offset;
    uz = -uz;
  }
  uz.normalize();
  const Vec3 ux = uy.cross(uz);
  TrellisFrame& f = est.frame;
  f.plane = Plane3{n, offset};
  f.rotation.row(0) = ux.transpose();
  f.rotation.row(1) = uy.transpose();
  f.rotation.row(2) = uz.transpose();
  // any plane point has ux . p = offset (ux = -n)
  f.translation = Vec3(-offset, 0.0, 0.0);
  return est;
}

/// Ascending single-pass grouping of line heights in the aligned frame.
inline std::vector<double> merge_trellis_lines(std::vector<double> heights, double merge_dist) {
  std::sort(heights.begin(), heights.end());
  std::vector<double> groups;
  double sum = 0.0;
  int n = 0;
  for (double z : heights) {
    if (n > 0 && std::abs(z - sum / n) < merge_dist) {
      sum += z;
      ++n;
      continue;
    }
    if (n > 0) groups.push_back(sum / n);
    sum = z;
    n = 1;
  }
  if (n > 0) groups.push_back(sum / n);
  return groups;
}

inline std::vector<double> merge_trellis_lines(std::span<const Line3> lines, const TrellisFrame& frame,
                                               double merge_dist) {
  std::vector<double> h;
  for (const auto& l : lines) h.push_back(0.5 * (frame.apply(l.p1).z() + frame.apply(l.p2).z()));
  return merge_trellis_lines(std::move(h), merge_dist);
}

struct TrunkCandidate {
  double y = 0.0;
  int bin_i = 0;
  int bin_j = 0;
  double strength = 0.0;
};

struct GroundHistogram {
  double x_min = 0.0, y_min = 0.0, cell = 0.01;
  int ni = 0, nj = 0;
  std::vector<double> counts;  // j fastest
  double at(int i, int j) const { return counts[static_cast<std::size_t>(i) * nj + j]; }
};

inline GroundHistogram ground_histogram(std::span<const Vec3> aligned, const SegmentParams& p) {
  GroundHistogram h;
  h.cell = p.ground_cell;
  std::vector<const Vec3*> slab;
  for (const auto& q : aligned)
    if (std::abs(q.x()) < p.slab_half_width) slab.push_back(&q);
  if (slab.empty()) return h;
  double xmax = -std::numeric_limits<double>::infinity(), ymax = xmax;
  h.x_min = h.y_min = std::numeric_limits<double>::infinity();
  for (auto* q : slab) {
    h.x_min = std::min(h.x_min, q->x());
    h.y_min = std::min(h.y_min, q->y());
    xmax = std::max(xmax, q->x());
    ymax = std::max(ymax, q->y());
  }
  h.ni = static_cast<int>(std::floor((xmax - h.x_min) / h.cell)) + 1;
  h.nj = static_cast<int>(std::floor((ymax - h.y_min) / h.cell)) + 1;
  h.counts.assign(static_cast<std::size_t>(h.ni) * h.nj, 0.0);
  for (auto* q : slab) {
    const int i = std::min(h.ni - 1, static_cast<int>(std::floor((q->x() - h.x_min) / h.cell)));
    const int j = std::min(h.nj - 1, static_cast<int>(std::floor((q->y() - h.y_min) / h.cell)));
    h.counts[static_cast<std::size_t>(i) * h.nj + j] += 1.0;
  }
  return h;
}

namespace detail {

inline std::vector<double> gaussian_smooth(const GroundHistogram& h, double sigma) {
  if (sigma <= 0) return h.counts;
  const int r = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> k(2 * r + 1);
  double ks = 0;
  for (int t = -r; t <= r; ++t) ks += k[t + r] = std::exp(-0.5 * t * t / (sigma * sigma));
  for (auto& v : k) v /= ks;
  std::vector<double> tmp(h.counts.size(), 0.0), out(h.counts.size(), 0.0);
  for (int i = 0; i < h.ni; ++i)
    for (int j = 0; j < h.nj; ++j) {
      double s = 0;
      for (int t = -r; t <= r; ++t) {
        const int jj = j + t;
        if (jj >= 0 && jj < h.nj) s += k[t + r] * h.at(i, jj);
      }
      tmp[static_cast<std::size_t>(i) * h.nj + j] = s;
    }
  for (int i = 0; i < h.ni; ++i)
    for (int j = 0; j < h.nj; ++j) {
      double s = 0;
      for (int t = -r; t <= r; ++t) {
        const int ii = i + t;
        if (ii >= 0 && ii < h.ni) s += k[t + r] * tmp[static_cast<std::size_t>(ii) * h.nj + j];
      }
      out[static_cast<std::size_t>(i) * h.nj + j] = s;
    }
  return out;
}

}  // namespace detail

/// Density peaks of the slab |x_hat| < slab_half_width on a ground grid,
/// found by non-maximum suppression and converted with y = J * cell + y_min.
inline std::vector<TrunkCandidate> locate_trunk_candidates(std::span<const Vec3> aligned, const SegmentParams& p) {
  const GroundHistogram h = ground_histogram(aligned, p);
  if (h.counts.empty()) throw Error(ErrorCode::NoTrunkCandidates, "slab around the trellis-plane is empty");
  const auto s = detail::gaussian_smooth(h, p.ground_smoothing_bins);
  std::vector<double> nz;
  for (double v : s)
    if (v > 1e-9) nz.push_back(v);
  std::nth_element(nz.begin(), nz.begin() + static_cast<std::ptrdiff_t>(nz.size() / 2), nz.end());
  const double median = nz[nz.size() / 2];
  const double gate = p.nms_prominence * median;
  const int half = static_cast<int>(std::lround(p.nms_window / h.cell / 2.0));

  std::vector<TrunkCandidate> out;
  for (int i = 0; i < h.ni; ++i)
    for (int j = 0; j < h.nj; ++j) {
      const std::size_t c = static_cast<std::size_t>(i) * h.nj + j;
      const double v = s[c];
      if (!(v > gate)) continue;
      bool peak = true;
      for (int a = std::max(0, i - half); a <= std::min(h.ni - 1, i + half) && peak; ++a)
        for (int b = std::max(0, j - half); b <= std::min(h.nj - 1, j + half); ++b) {
          const std::size_t w = static_cast<std::size_t>(a) * h.nj + b;
          if (s[w] > v || (s[w] == v && w < c)) {
            peak = false;
            break;
          }
        }
      if (peak) out.push_back({j * h.cell + h.y_min, i, j, v});
    }
  if (out.empty()) throw Error(ErrorCode::NoTrunkCandidates, "no density peak passed suppression");
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.y < b.y; });
  return out;
}

struct PoleDecision {
  double y = 0.0;
  bool is_pole = false;
  double ratio = 0.0;
  std::vector<std::size_t> points;  // shell points when is_pole
};

inline std::vector<std::size_t> cylinder_points(std::span<const Vec3> aligned, double y, double radius) {
  std::vector<std::size_t> out;
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    const double dx = aligned[i].x(), dy = aligned[i].y() - y;
    if (dx * dx + dy * dy < r2) out.push_back(i);
  }
  return out;
}

/// Fixed-radius circle center: c <- mean(q - r * unit(q - c)), from the centroid.
inline Eigen::Vector2d fixed_radius_center(std::span<const Eigen::Vector2d> q, double r) {
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& v : q) c += v;
  c /= static_cast<double>(q.size());
  for (int it = 0; it < 50; ++it) {
    Eigen::Vector2d next = Eigen::Vector2d::Zero();
    int n = 0;
    for (const auto& v : q) {
      const Eigen::Vector2d d = v - c;
      const double len = d.norm();
      if (len <= 1e-12) continue;
      next += v - r * d / len;
      ++n;
    }
    if (n == 0) break;
    next /= n;
    const double moved = (next - c).norm();
    c = next;
    if (moved < 1e-7) break;
  }
  return c;
}

inline PoleDecision detect_support_pole(std::span<const Vec3> aligned, std::span<const std::size_t> cylinder,
                                        double candidate_y, const SegmentParams& p, std::uint64_t seed) {
  PoleDecision d;
  d.y = candidate_y;
  if (static_cast<int>(cylinder.size()) < p.pole_min_points) return d;
  double z0 = std::numeric_limits<double>::infinity(), z1 = -z0;
  for (auto i : cylinder) {
    z0 = std::min(z0, aligned[i].z());
    z1 = std::max(z1, aligned[i].z());
  }
  const int n_slices = static_cast<int>(std::floor((z1 - z0) / p.pole_slice)) + 1;
  std::vector<std::vector<Eigen::Vector2d>> slices(static_cast<std::size_t>(n_slices));
  for (auto i : cylinder) {
    const int k = std::min(n_slices - 1, static_cast<int>(std::floor((aligned[i].z() - z0) / p.pole_slice)));
    slices[k].emplace_back(aligned[i].x(), aligned[i].y());
  }
  std::vector<Vec3> centers;
  for (int k = 0; k < n_slices; ++k) {
    if (slices[k].size() < 3) continue;
    const auto c = fixed_radius_center(slices[k], p.pole_radius);
    centers.emplace_back(c.x(), c.y(), z0 + (k + 0.5) * p.pole_slice);
  }
  if (centers.size() < 2) return d;
  Line3 axis;
  try {
    axis = fit_line_msac(centers, 2 * p.pole_shell_half_width, seed, 1, p.msac).front().line;
  } catch (const Error&) {
    return d;
  }
  std::vector<std::size_t> shell;
  const double lo = p.pole_radius - p.pole_shell_half_width, hi = p.pole_radius + p.pole_shell_half_width;
  for (auto i : cylinder) {
    if (aligned[i].z() > z0 + p.pole_height) continue;
    const double r = point_line_distance(aligned[i], axis);
    if (r >= lo && r <= hi) shell.push_back(i);
  }
  d.ratio = static_cast<double>(shell.size()) / static_cast<double>(cylinder.size());
  d.is_pole = d.ratio > p.pole_ratio;
  if (d.is_pole) d.points = std::move(shell);
  return d;
}

struct TrunkVerification {
  TreeSet trees;
  std::vector<PoleDecision> poles;
  std::vector<double> path_lengths;  // per candidate, 0 when no skeleton
};

/// Main axis of the largest skeleton component of a point set: BFS path from
/// its lowest to its highest voxel. Empty when there is no path.
inline std::vector<Vec3> main_axis_of(std::span<const Vec3> pts, const SegmentParams& p, double* length) {
  *length = 0.0;
  if (pts.empty()) return {};
  const Skeleton skel = skeletonize(detail::voxelize_for_thinning(pts, p));
  auto comps = connected_components(skel.voxels);
  std::size_t best = 0;
  for (std::size_t c = 1; c < comps.size(); ++c)
    if (comps[c].size() > comps[best].size()) best = c;
  const auto& comp = comps[best];
  Voxel top = comp.front(), bottom = comp.front();
  for (const auto& v : comp) {
    if (v.z > top.z || (v.z == top.z && v < top)) top = v;
    if (v.z < bottom.z || (v.z == bottom.z && v < bottom)) bottom = v;
  }
  const auto path = shortest_path(std::span<const Voxel>(comp), bottom, top);
  if (!path) return {};
  *length = path_length(*path, skel.geometry.edge);
  std::vector<Vec3> out;
  out.reserve(path->size());
  for (const auto& v : *path) out.push_back(skel.geometry.center(v));
  return out;
}

inline TrunkVerification verify_trunks(std::span<const Vec3> aligned, std::span<const TrunkCandidate> candidates,
                                       const SegmentParams& p, std::uint64_t seed) {
  TrunkVerification out;
  int next_id = 1;
  for (std::size_t s = 0; s < candidates.size(); ++s) {
    const double y = candidates[s].y;
    const auto cyl = cylinder_points(aligned, y, p.trunk_cylinder_radius);
    std::vector<Vec3> pts;
    pts.reserve(cyl.size());
    for (auto i : cyl) pts.push_back(aligned[i]);
    double len = 0.0;
    auto axis = main_axis_of(pts, p, &len);
    out.path_lengths.push_back(len);
    if (!(len > p.min_trunk_path)) {
      logger().debug("candidate y={:.3f} discarded, main axis {:.3f} m", y, len);
      continue;
    }
    auto pole = detect_support_pole(aligned, cyl, y, p, detail::mix_seed(seed, 1000 + s));
    if (pole.is_pole) {
      logger().debug("candidate y={:.3f} is a support pole (ratio {:.3f})", y, pole.ratio);
      out.poles.push_back(std::move(pole));
      continue;
    }
    Tree t;
    t.id = next_id++;
    t.base = Vec3(0.0, y, 0.0);
    t.main_axis = std::move(axis);
    t.axis_length = len;
    out.trees.trees.push_back(std::move(t));
    out.poles.push_back(std::move(pole));
  }
  return out;
}

inline void label_trunk_points(const KdTree& index, const TreeSet& trees, double dist,
                               std::vector<SemanticLabel>& labels) {
  for (const auto& t : trees.trees)
    for (const auto& a : t.main_axis)
      for (auto i : index.radius(a, dist)) labels[i] = SemanticLabel::TreeTrunk;
}

inline void label_pole_points(const std::vector<PoleDecision>& poles, std::vector<SemanticLabel>& labels) {
  for (const auto& pd : poles)
    if (pd.is_pole)
      for (auto i : pd.points)
        if (labels[i] != SemanticLabel::TreeTrunk) labels[i] = SemanticLabel::SupportPole;
}

struct WireSegmentLog {
  int level = 0;
  int segment = 0;
  std::size_t points = 0;
  std::size_t inliers = 0;
  bool skipped = false;
};

/// Line fits along every trellis level between consecutive trunks and the
/// two scene ends; inliers become wire points unless already trunk or pole.
inline std::vector<WireSegmentLog> label_wire_points(std::span<const Vec3> aligned, const KdTree& index,
                                                     std::span<const std::size_t> tube,
                                                     std::span<const double> heights, const TreeSet& trees,
                                                     const SegmentParams& p, std::uint64_t seed,
                                                     std::vector<SemanticLabel>& labels) {
  std::vector<WireSegmentLog> log;
  if (aligned.empty() || heights.empty()) return log;
  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  for (const auto& q : aligned) {
    ymin = std::min(ymin, q.y());
    ymax = std::max(ymax, q.y());
  }
  std::vector<std::size_t> by_y(aligned.size());
  std::iota(by_y.begin(), by_y.end(), std::size_t{0});
  std::sort(by_y.begin(), by_y.end(), [&](auto a, auto b) {
    return aligned[a].y() < aligned[b].y() || (aligned[a].y() == aligned[b].y() && a < b);
  });
  std::vector<Vec3> tube_pts;
  for (auto i : tube) tube_pts.push_back(aligned[i]);
  const KdTree tube_index(tube_pts);

  auto end_point = [&](double y, double z) {
    const Vec3 target(0.0, y, z);
    if (!tube_index.empty()) return tube_pts[tube_index.nearest(target).index];
    return aligned[index.nearest(target).index];
  };

  const std::size_t n = trees.size();
  for (std::size_t q = 0; q < heights.size(); ++q) {
    const double z = heights[q];
    std::vector<Vec3> anchor;
    std::vector<double> ylo, yhi;
    anchor.push_back(end_point(ymin, z));
    for (const auto& t : trees.trees) anchor.push_back(aligned[index.nearest(Vec3(0.0, t.base.y(), z)).index]);
    anchor.push_back(end_point(ymax, z));
    const bool lowest = q == 0;
    for (std::size_t j = 0; j + 1 < anchor.size(); ++j) {
      WireSegmentLog entry{static_cast<int>(q + 1), static_cast<int>(j), 0, 0, false};
      const double lo = j == 0 ? ymin : trees.trees[j - 1].base.y() + p.trunk_offset;
      const double hi = j == n ? ymax : trees.trees[j].base.y() - p.trunk_offset;
      if ((anchor[j + 1] - anchor[j]).norm() <= 0.0 || !(hi > lo)) {
        entry.skipped = true;
        log.push_back(entry);
        continue;
      }
      const Line3 axis = Line3::through(anchor[j], anchor[j + 1]);
      const Vec3 u = axis.direction();
      const double r2 = p.segment_cylinder_radius * p.segment_cylinder_radius;
      auto first = std::upper_bound(by_y.begin(), by_y.end(), lo, [&](double v, std::size_t i) { return v < aligned[i].y(); });
      std::vector<std::size_t> seg;
      for (auto it = first; it != by_y.end() && aligned[*it].y() < hi; ++it) {
        if ((aligned[*it] - axis.p1).cross(u).squaredNorm() < r2) seg.push_back(*it);
      }
      std::sort(seg.begin(), seg.end());
      entry.points = seg.size();
      if (seg.size() < 2) {
        entry.skipped = true;
        logger().debug("wire segment level {} segment {} skipped ({} points)", q + 1, j, seg.size());
        log.push_back(entry);
        continue;
      }
      std::vector<Vec3> pts;
      pts.reserve(seg.size());
      for (auto i : seg) pts.push_back(aligned[i]);
      const double tol = lowest ? p.line_tol_lowest : p.line_tol_upper;
      const auto sub = detail::mix_seed(seed, 10000 + 100 * q + j);
      std::vector<LineFit> fits;
      try {
        fits = fit_line_msac(pts, tol, sub, lowest ? 2 : 1, p.msac);
      } catch (const Error&) {
        fits = fit_line_msac(pts, tol, sub, 1, p.msac);
      }
      const double min_dy = std::cos(deg2rad(p.wire_max_angle_deg));
      for (const auto& f : fits) {
        if (std::abs(f.line.direction().y()) < min_dy) continue;
        for (auto k : f.inliers) {
          auto& l = labels[seg[k]];
          if (l == SemanticLabel::TreeTrunk || l == SemanticLabel::SupportPole) continue;
          l = SemanticLabel::TrellisWireWaterPipe;
          ++entry.inliers;
        }
      }
      log.push_back(entry);
    }
  }
  return log;
}

struct TreesCloud {
  ColorPointCloud cloud;           // aligned frame
  std::vector<std::size_t> index;  // into the aligned cloud
};

inline TreesCloud strip_to_trees(const ColorPointCloud& aligned, std::span<const SemanticLabel> labels) {
  if (labels.size() != aligned.size()) throw Error(ErrorCode::ShapeError, "labels differ from cloud length");
  TreesCloud out;
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    if (labels[i] == SemanticLabel::TrellisWireWaterPipe || labels[i] == SemanticLabel::SupportPole) continue;
    out.cloud.push_back(aligned.points[i], aligned.colors[i]);
    out.index.push_back(i);
  }
  if (out.cloud.empty()) throw Error(ErrorCode::EmptyTrees, "every point was labeled wire or pole");
  return out;
}

struct SegmentResult {
  HorizontalLines lines;
  TrellisEstimate trellis;
  ColorPointCloud aligned;  // PC_w^TP
  std::vector<TrunkCandidate> candidates;
  TrunkVerification verification;
  std::vector<SemanticLabel> labels;
  std::vector<WireSegmentLog> wire_log;
  TreesCloud trees;

  const TrellisFrame& frame() const { return trellis.frame; }
  const TreeSet& tree_set() const { return verification.trees; }
};

inline ColorPointCloud align_to_frame(const ColorPointCloud& cloud, const TrellisFrame& frame) {
  ColorPointCloud out = cloud;
  for (auto& q : out.points) q = frame.apply(q);
  return out;
}

inline SegmentResult segment_winter(const ColorPointCloud& winter, const SegmentParams& p, std::uint64_t seed) {
  require_nonempty(winter, "segment: empty winter cloud");
  SegmentResult r;
  r.lines = detect_horizontal_lines(winter.points, p, detail::mix_seed(seed, 11));
  r.trellis = estimate_trellis_frame(winter.points, r.lines.lines, p, detail::mix_seed(seed, 12));
  r.trellis.frame.heights = merge_trellis_lines(r.lines.lines, r.trellis.frame, p.wire_merge);
  r.aligned = align_to_frame(winter, r.trellis.frame);
  r.candidates = locate_trunk_candidates(r.aligned.points, p);
  r.verification = verify_trunks(r.aligned.points, r.candidates, p, detail::mix_seed(seed, 13));
  r.labels.assign(r.aligned.size(), SemanticLabel::Branch);
  const KdTree index(r.aligned.points);
  label_trunk_points(index, r.verification.trees, p.trunk_label_dist, r.labels);
  label_pole_points(r.verification.poles, r.labels);
  r.wire_log = label_wire_points(r.aligned.points, index, r.trellis.tube, r.trellis.frame.heights,
                                 r.verification.trees, p, detail::mix_seed(seed, 14), r.labels);
  r.trees = strip_to_trees(r.aligned, r.labels);
  return r;
}

}  // namespace orchard
