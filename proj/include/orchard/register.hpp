#pragma once

// Point-to-point ICP from the winter cloud onto the harvest cloud, and
// transfer of tree identities to the detected apples.

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "orchard/apples.hpp"
#include "orchard/error.hpp"
#include "orchard/geometry.hpp"
#include "orchard/kdtree.hpp"
#include "orchard/voxel.hpp"

namespace orchard {

/// q = rotation * p + translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double rms = 0.0;  // over inlier correspondences at convergence
  int iterations = 0;
  bool converged = false;

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform inverse() const {
    RigidTransform t = *this;
    t.rotation = rotation.transpose();
    t.translation = -(rotation.transpose() * translation);
    return t;
  }
  /// this after other
  RigidTransform compose(const RigidTransform& other) const {
    RigidTransform t;
    t.rotation = rotation * other.rotation;
    t.translation = rotation * other.translation + translation;
    return t;
  }
};

struct IcpParams {
  double reject_radius = 0.10;
  double initial_radius = 1.0;
  double anneal_factor = 3.0;  // radius follows max(reject, factor * rms)
  double rms_tolerance = 1e-5;
  int max_iterations = 100;
  std::size_t min_correspondences = 100;
  double subsample_edge = 0.01;  // 0 keeps every source point
};

/// Least-squares rigid map src -> dst (Kabsch, reflection guarded).
inline RigidTransform kabsch(std::span<const Vec3> src, std::span<const Vec3> dst) {
  if (src.size() != dst.size() || src.size() < 3) throw Error(ErrorCode::DegenerateInput, "kabsch: need >= 3 pairs");
  Vec3 cs = Vec3::Zero(), cd = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    cs += src[i];
    cd += dst[i];
  }
  cs /= static_cast<double>(src.size());
  cd /= static_cast<double>(dst.size());
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) h += (src[i] - cs) * (dst[i] - cd).transpose();
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3 u = svd.matrixU(), v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0 ? -1.0 : 1.0;
  RigidTransform t;
  t.rotation = v * d * u.transpose();
  t.translation = cd - t.rotation * cs;
  return t;
}

/// One representative (the lowest index) per occupied voxel, in index order.
inline std::vector<Vec3> voxel_subsample(std::span<const Vec3> pts, double edge) {
  if (edge <= 0 || pts.empty()) return {pts.begin(), pts.end()};
  const GridGeometry geo = GridGeometry::fit(bounds_of(pts), edge);
  std::vector<std::pair<std::int64_t, std::size_t>> keys(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) keys[i] = {geo.linear(geo.bin(pts[i])), i};
  std::sort(keys.begin(), keys.end());
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < keys.size(); ++i)
    if (i == 0 || keys[i].first != keys[i - 1].first) keep.push_back(keys[i].second);
  std::sort(keep.begin(), keep.end());
  std::vector<Vec3> out;
  out.reserve(keep.size());
  for (auto i : keep) out.push_back(pts[i]);
  return out;
}

/// Aligns `source` onto `target` from the identity. The correspondence
/// radius starts wide and shrinks with the residual down to reject_radius.
inline RigidTransform icp_align(std::span<const Vec3> source, std::span<const Vec3> target, const IcpParams& p = {}) {
  if (source.empty() || target.empty()) throw Error(ErrorCode::EmptyInput, "icp: empty cloud");
  const auto src = voxel_subsample(source, p.subsample_edge);
  const KdTree index(target);
  RigidTransform t;
  double radius = p.initial_radius;
  double prev_rms = -1.0;
  std::vector<Vec3> a, b;
  for (int it = 0; it < p.max_iterations; ++it) {
    a.clear();
    b.clear();
    double sum2 = 0.0;
    for (const auto& s : src) {
      const Vec3 q = t.apply(s);
      const auto nn = index.nearest(q);
      if (nn.distance < radius) {
        a.push_back(s);
        b.push_back(index.point(nn.index));
        sum2 += nn.distance * nn.distance;
      }
    }
    if (it == 0 && a.size() < p.min_correspondences)
      throw Error(ErrorCode::AlignmentFailed, "too few correspondences at the initial pose");
    if (a.size() < 3) throw Error(ErrorCode::AlignmentFailed, "correspondences vanished during icp");
    const double rms = std::sqrt(sum2 / static_cast<double>(a.size()));
    const bool at_floor = radius <= p.reject_radius;
    if (at_floor && prev_rms >= 0 && std::abs(prev_rms - rms) < p.rms_tolerance) {
      t.converged = true;
      t.iterations = it;
      break;
    }
    prev_rms = at_floor ? rms : -1.0;
    const auto step = kabsch(a, b);
    t.rotation = step.rotation;
    t.translation = step.translation;
    t.iterations = it + 1;
    radius = std::max(p.reject_radius, std::min(radius, p.anneal_factor * rms));
  }
  double sum2 = 0.0;
  std::size_t n = 0;
  for (const auto& s : src) {
    const auto nn = index.nearest(t.apply(s));
    if (nn.distance < p.reject_radius) {
      sum2 += nn.distance * nn.distance;
      ++n;
    }
  }
  t.rms = n ? std::sqrt(sum2 / static_cast<double>(n)) : 0.0;
  return t;
}

struct AppleAssignment {
  int tree = 0;
  std::size_t point = 0;  // index into the labeled winter points
  double distance = 0.0;
};

/// Nearest transformed tree-labeled winter point for every apple.
inline std::vector<AppleAssignment> assign_apples(std::span<const Vec3> apples, std::span<const Vec3> labeled_points,
                                                  std::span<const int> labels, const RigidTransform& transform) {
  if (labeled_points.size() != labels.size()) throw Error(ErrorCode::ShapeError, "labels differ from points");
  if (labeled_points.empty()) throw Error(ErrorCode::EmptyTrees, "no tree-labeled winter point");
  std::vector<Vec3> moved(labeled_points.size());
  for (std::size_t i = 0; i < moved.size(); ++i) moved[i] = transform.apply(labeled_points[i]);
  const KdTree index(moved);
  std::vector<AppleAssignment> out;
  out.reserve(apples.size());
  for (const auto& a : apples) {
    const auto nn = index.nearest(a);
    out.push_back({labels[nn.index], nn.index, nn.distance});
  }
  return out;
}

}  // namespace orchard
