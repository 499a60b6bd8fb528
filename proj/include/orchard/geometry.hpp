#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "orchard/error.hpp"

namespace orchard {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Infinite 3D line through two distinct anchors.
struct Line3 {
  Vec3 p1 = Vec3::Zero();
  Vec3 p2 = Vec3::UnitX();

  static Line3 through(const Vec3& a, const Vec3& b) {
    if ((b - a).norm() <= 0.0) {
      throw Error(ErrorCode::DegenerateLine, "line anchors coincide");
    }
    return Line3{a, b};
  }

  static Line3 from_direction(const Vec3& point, const Vec3& direction) {
    return through(point, point + direction.normalized());
  }

  Vec3 direction() const { return (p2 - p1).normalized(); }
};

/// Plane A x + B y + C z + D = 0 with (A,B,C) unit length.
struct Plane3 {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;

  double signed_distance(const Vec3& p) const { return normal.dot(p) + offset; }
  double distance(const Vec3& p) const { return std::abs(signed_distance(p)); }

  static Plane3 from_normal_point(const Vec3& n, const Vec3& p) {
    Vec3 u = n.normalized();
    return Plane3{u, -u.dot(p)};
  }
};

/// ||(p - p1) x (p - p2)|| / ||p2 - p1||.
inline double point_line_distance(const Vec3& p, const Line3& line) {
  const double base = (line.p2 - line.p1).norm();
  if (base <= 0.0) throw Error(ErrorCode::DegenerateLine, "line anchors coincide");
  return (p - line.p1).cross(p - line.p2).norm() / base;
}

inline double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

/// Distance to the half-line origin + t*dir, t >= 0.
inline double point_ray_distance(const Vec3& p, const Vec3& origin, const Vec3& dir) {
  const Vec3 u = dir.normalized();
  const double t = std::max(0.0, (p - origin).dot(u));
  return (p - (origin + t * u)).norm();
}

inline Mat3 rotation_about(const Vec3& axis, double angle_rad) {
  return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

/// Rotation angle (radians) of a rotation matrix.
inline double rotation_angle(const Mat3& r) {
  const double c = std::clamp((r.trace() - 1.0) * 0.5, -1.0, 1.0);
  return std::acos(c);
}

inline bool is_rotation(const Mat3& r, double tol = 1e-6) {
  return (r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(r.determinant() - 1.0) <= tol;
}

/// Principal direction and centroid of a point set (total least squares line).
struct PrincipalAxis {
  Vec3 centroid = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();
  Vec3 eigenvalues = Vec3::Zero();  // ascending
  Mat3 eigenvectors = Mat3::Identity();
};

inline PrincipalAxis principal_axis(std::span<const Vec3> pts) {
  PrincipalAxis out;
  if (pts.empty()) return out;
  for (const auto& p : pts) out.centroid += p;
  out.centroid /= static_cast<double>(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : pts) {
    const Vec3 d = p - out.centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  out.eigenvalues = es.eigenvalues();
  out.eigenvectors = es.eigenvectors();
  out.direction = es.eigenvectors().col(2);
  return out;
}

struct Bounds {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  bool valid() const { return (min.array() <= max.array()).all(); }
  Vec3 center() const { return 0.5 * (min + max); }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

inline Bounds bounds_of(std::span<const Vec3> pts) {
  Bounds b;
  for (const auto& p : pts) b.extend(p);
  return b;
}

}  // namespace orchard
