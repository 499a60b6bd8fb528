#pragma once

// M-estimator sample consensus for planes and lines. Hypotheses are scored
// by sum(min(r^2, tol^2)); the hypothesis count adapts to the best inlier
// ratio seen so far for the requested confidence, up to a hard cap. A
// least-squares refit on the inliers replaces the best hypothesis only when
// it does not raise the score.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "orchard/error.hpp"
#include "orchard/geometry.hpp"

namespace orchard {

struct MsacOptions {
  double confidence = 0.999;
  int max_iterations = 10000;
  bool refine = true;
};

struct PlaneFit {
  Plane3 plane;
  std::vector<std::size_t> inliers;
  double score = 0.0;
  int iterations = 0;
};

struct LineFit {
  Line3 line;
  std::vector<std::size_t> inliers;
  double score = 0.0;
  int iterations = 0;
};

namespace detail {

inline int adaptive_iterations(double inlier_ratio, int sample_size, const MsacOptions& opt) {
  const double w = std::pow(std::clamp(inlier_ratio, 0.0, 1.0), sample_size);
  if (w >= 1.0) return 1;
  if (w <= 0.0) return opt.max_iterations;
  const double n = std::log(1.0 - opt.confidence) / std::log(1.0 - w);
  return static_cast<int>(std::min<double>(opt.max_iterations, std::ceil(n)));
}

template <class Residual>
double msac_score(std::span<const Vec3> pts, double tol2, Residual&& residual2, std::size_t* inliers = nullptr) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& p : pts) {
    const double r2 = residual2(p);
    if (r2 <= tol2) {
      s += r2;
      ++n;
    } else {
      s += tol2;
    }
  }
  if (inliers) *inliers = n;
  return s;
}

/// Rank deficiency check: all points within `eps` of one line.
inline bool all_collinear(std::span<const Vec3> pts, double eps) {
  if (pts.size() < 3) return true;
  const auto axis = principal_axis(pts);
  return std::sqrt(std::max(0.0, axis.eigenvalues[1]) / static_cast<double>(pts.size())) <= eps;
}

}  // namespace detail

inline PlaneFit fit_plane_msac(std::span<const Vec3> pts, double inlier_tol, std::uint64_t seed,
                               const MsacOptions& opt = {}) {
  const std::size_t n = pts.size();
  if (n < 3) throw Error(ErrorCode::DegenerateInput, "plane fit needs >= 3 points");
  const double scale = std::max(1e-12, (bounds_of(pts).max - bounds_of(pts).min).norm());
  if (detail::all_collinear(pts, 1e-12 * scale)) {
    throw Error(ErrorCode::DegenerateInput, "plane fit: points are collinear");
  }
  const double tol2 = inlier_tol * inlier_tol;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  PlaneFit best;
  best.score = std::numeric_limits<double>::infinity();
  int needed = n == 3 ? 1 : opt.max_iterations;
  int it = 0;
  int attempts = 0;
  while (it < needed && attempts < 10 * opt.max_iterations) {
    ++attempts;
    std::size_t a = 0, b = 1, c = 2;
    if (n > 3) {
      a = pick(rng);
      b = pick(rng);
      c = pick(rng);
      if (a == b || b == c || a == c) continue;
    }
    const Vec3 normal = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
    if (normal.norm() <= 1e-12 * scale * scale) continue;
    ++it;
    const Plane3 plane = Plane3::from_normal_point(normal, pts[a]);
    std::size_t count = 0;
    const double s = detail::msac_score(
        pts, tol2, [&](const Vec3& p) { return std::pow(plane.signed_distance(p), 2); }, &count);
    if (s < best.score) {
      best.score = s;
      best.plane = plane;
      needed = std::min(needed, detail::adaptive_iterations(double(count) / double(n), 3, opt));
    }
  }
  if (!std::isfinite(best.score)) throw Error(ErrorCode::DegenerateInput, "plane fit: no valid sample");
  best.iterations = it;

  auto collect = [&](const Plane3& pl) {
    std::vector<std::size_t> in;
    for (std::size_t i = 0; i < n; ++i)
      if (pl.distance(pts[i]) <= inlier_tol) in.push_back(i);
    return in;
  };
  best.inliers = collect(best.plane);
  if (opt.refine && best.inliers.size() >= 3) {
    std::vector<Vec3> in;
    in.reserve(best.inliers.size());
    for (auto i : best.inliers) in.push_back(pts[i]);
    const auto axis = principal_axis(in);
    const Plane3 refined = Plane3::from_normal_point(axis.eigenvectors.col(0), axis.centroid);
    const double s = detail::msac_score(pts, tol2, [&](const Vec3& p) { return std::pow(refined.signed_distance(p), 2); });
    if (s <= best.score) {
      best.score = s;
      best.plane = refined;
      best.inliers = collect(refined);
    }
  }
  return best;
}

namespace detail {

inline LineFit fit_one_line(std::span<const Vec3> pts, double inlier_tol, std::mt19937_64& rng, const MsacOptions& opt) {
  const std::size_t n = pts.size();
  const double tol2 = inlier_tol * inlier_tol;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  LineFit best;
  best.score = std::numeric_limits<double>::infinity();
  auto residual = [](const Line3& l) {
    const Vec3 u = l.direction();
    return [u, p1 = l.p1](const Vec3& p) { return (p - p1).cross(u).squaredNorm(); };
  };
  int needed = n == 2 ? 1 : opt.max_iterations;
  int it = 0;
  int attempts = 0;
  while (it < needed && attempts < 10 * opt.max_iterations) {
    ++attempts;
    std::size_t a = 0, b = 1;
    if (n > 2) {
      a = pick(rng);
      b = pick(rng);
      if (a == b) continue;
    }
    if ((pts[b] - pts[a]).norm() <= 0.0) continue;
    ++it;
    const Line3 line = Line3::through(pts[a], pts[b]);
    std::size_t count = 0;
    const double s = msac_score(pts, tol2, residual(line), &count);
    if (s < best.score) {
      best.score = s;
      best.line = line;
      needed = std::min(needed, adaptive_iterations(double(count) / double(n), 2, opt));
    }
  }
  if (!std::isfinite(best.score)) throw Error(ErrorCode::DegenerateInput, "line fit: all points coincide");
  best.iterations = it;
  auto collect = [&](const Line3& l) {
    std::vector<std::size_t> in;
    const auto r = residual(l);
    for (std::size_t i = 0; i < n; ++i)
      if (r(pts[i]) <= tol2) in.push_back(i);
    return in;
  };
  best.inliers = collect(best.line);
  if (opt.refine && best.inliers.size() >= 2) {
    std::vector<Vec3> in;
    for (auto i : best.inliers) in.push_back(pts[i]);
    const auto axis = principal_axis(in);
    if (axis.eigenvalues[2] > 0.0) {
      const Line3 refined = Line3::from_direction(axis.centroid, axis.direction);
      const double s = msac_score(pts, tol2, residual(refined));
      if (s <= best.score) {
        best.score = s;
        best.line = refined;
        best.inliers = collect(refined);
      }
    }
  }
  return best;
}

}  // namespace detail

/// Sequential MSAC line fits. The second line (count == 2) is fitted to the
/// points left over after removing the first line's inliers. Inlier indices
/// refer to `pts`.
inline std::vector<LineFit> fit_line_msac(std::span<const Vec3> pts, double inlier_tol, std::uint64_t seed,
                                          int count = 1, const MsacOptions& opt = {}) {
  if (count < 1 || count > 2) throw Error(ErrorCode::DegenerateInput, "line fit count must be 1 or 2");
  if (pts.size() < 2) throw Error(ErrorCode::DegenerateInput, "line fit needs >= 2 points");
  std::mt19937_64 rng(seed);
  std::vector<LineFit> out;
  std::vector<std::size_t> remaining(pts.size());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  for (int c = 0; c < count; ++c) {
    if (remaining.size() < 2) throw Error(ErrorCode::DegenerateInput, "line fit: too few points for second line");
    std::vector<Vec3> sub;
    sub.reserve(remaining.size());
    for (auto i : remaining) sub.push_back(pts[i]);
    LineFit fit = detail::fit_one_line(sub, inlier_tol, rng, opt);
    std::vector<std::uint8_t> used(remaining.size(), 0);
    for (auto& i : fit.inliers) {
      used[i] = 1;
      i = remaining[i];
    }
    std::vector<std::size_t> next;
    for (std::size_t k = 0; k < remaining.size(); ++k)
      if (!used[k]) next.push_back(remaining[k]);
    remaining = std::move(next);
    out.push_back(std::move(fit));
  }
  return out;
}

}  // namespace orchard
