#pragma once

// Metric calibration of a raw reconstruction from the reference chart.
//
// Marker points are the chart's patch centers listed row-major, top row
// first, columns in ascending order along the tree row. The calibrated frame
// has Y along the chart columns (parallel to the row), Z up the chart and X
// the chart normal pointing from the chart to the row.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <variant>
#include <vector>

#include "orchard/cloud.hpp"
#include "orchard/error.hpp"
#include "orchard/geometry.hpp"

namespace orchard {

struct MarkerObservation {
  std::vector<Vec3> marker_points;
  double patch_spacing_m = 0.0;
  double d_R_cc = 0.0;  // stick to row
  double d_T_cc = 0.0;  // stick to designated tree, signed along +Y
  int marker_cols = 6;
};

struct ExplicitTransform {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 origin = Vec3::Zero();
};

using CalibrationInput = std::variant<MarkerObservation, ExplicitTransform>;

/// p -> rotation * (scale * p) - origin. When `ground_from_roi` is set the
/// z origin is refined to the ground height found inside the ROI.
struct Calibration {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 origin = Vec3::Zero();
  bool ground_from_roi = false;

  Vec3 apply(const Vec3& p) const { return rotation * (scale * p) - origin; }
  Vec3 invert(const Vec3& q) const { return rotation.transpose() * (q + origin) / scale; }
};

struct RoiSpec {
  double row_half_extent = 3.0;  // |y| bound
  double depth = 0.6;            // |x| bound
  double height_min = 0.03;  // drops the ground itself
  double height_max = 3.5;
  double ground_percentile = 0.01;

  void validate() const {
    if (!(row_half_extent > 0 && depth > 0 && height_max > height_min)) {
      throw Error(ErrorCode::ConfigError, "roi extents must be positive");
    }
  }
};

namespace detail {

inline void check_rotation(const Mat3& r) {
  if (!r.allFinite() || !is_rotation(r, 1e-6)) {
    throw Error(ErrorCode::DegenerateInput, "calibration rotation is not orthonormal");
  }
}

inline Calibration calibrate_from_markers(const MarkerObservation& m) {
  const auto& pts = m.marker_points;
  if (pts.size() < 4) throw Error(ErrorCode::DegenerateMarker, "need at least 4 marker points");
  if (m.marker_cols < 2 || pts.size() % static_cast<std::size_t>(m.marker_cols) != 0) {
    throw Error(ErrorCode::DegenerateMarker, "marker count is not a multiple of marker_cols");
  }
  if (!(m.patch_spacing_m > 0)) throw Error(ErrorCode::DegenerateMarker, "patch spacing must be > 0");
  const int cols = m.marker_cols;
  const int rows = static_cast<int>(pts.size()) / cols;
  if (rows < 2) throw Error(ErrorCode::DegenerateMarker, "markers are collinear (single row)");

  const auto axis = principal_axis(pts);
  const double extent = std::sqrt(std::max(0.0, axis.eigenvalues[2]));
  if (std::sqrt(std::max(0.0, axis.eigenvalues[1])) <= 1e-9 * std::max(1.0, extent)) {
    throw Error(ErrorCode::DegenerateMarker, "markers are collinear");
  }

  auto at = [&](int r, int c) -> const Vec3& { return pts[static_cast<std::size_t>(r * cols + c)]; };
  std::vector<double> gaps;
  Vec3 along = Vec3::Zero(), up = Vec3::Zero();
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) {
        gaps.push_back((at(r, c + 1) - at(r, c)).norm());
        along += at(r, c + 1) - at(r, c);
      }
      if (r + 1 < rows) {
        gaps.push_back((at(r, c) - at(r + 1, c)).norm());
        up += at(r, c) - at(r + 1, c);
      }
    }
  double mean = 0.0;
  for (double g : gaps) mean += g;
  mean /= static_cast<double>(gaps.size());
  double var = 0.0;
  for (double g : gaps) var += (g - mean) * (g - mean);
  const double sd = std::sqrt(var / static_cast<double>(gaps.size()));
  if (!(mean > 0)) throw Error(ErrorCode::DegenerateMarker, "markers coincide");
  if (sd / mean > 0.1) throw Error(ErrorCode::MarkerNoiseTooHigh, "patch spacing stddev/mean > 0.1");

  Vec3 x = axis.eigenvectors.col(0).normalized();
  if (x.dot(along.cross(up)) < 0) x = -x;
  const Vec3 y = (along - along.dot(x) * x).normalized();
  const Vec3 z = x.cross(y);

  Calibration cal;
  cal.scale = m.patch_spacing_m / mean;
  cal.rotation.row(0) = x.transpose();
  cal.rotation.row(1) = y.transpose();
  cal.rotation.row(2) = z.transpose();
  const Vec3 center = cal.rotation * (cal.scale * axis.centroid);
  cal.origin = center + Vec3(m.d_R_cc, m.d_T_cc, 0.0);
  cal.ground_from_roi = true;
  return cal;
}

}  // namespace detail

inline Calibration derive_calibration(const CalibrationInput& input) {
  if (const auto* e = std::get_if<ExplicitTransform>(&input)) {
    if (!(e->scale > 0) || !std::isfinite(e->scale)) throw Error(ErrorCode::DegenerateInput, "scale must be > 0");
    detail::check_rotation(e->rotation);
    Calibration c;
    c.scale = e->scale;
    c.rotation = e->rotation;
    c.origin = e->origin;
    return c;
  }
  return detail::calibrate_from_markers(std::get<MarkerObservation>(input));
}

struct CalibratedCloud {
  ColorPointCloud cloud;
  std::vector<std::size_t> kept;  // source index of every output point
  Calibration calibration;        // with the ground refinement folded in
};

inline CalibratedCloud apply_calibration(const ColorPointCloud& cloud, const Calibration& calib, const RoiSpec& roi) {
  roi.validate();
  std::vector<Vec3> mapped(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) mapped[i] = calib.apply(cloud.points[i]);

  Calibration cal = calib;
  auto in_footprint = [&](const Vec3& q) { return std::abs(q.x()) <= roi.depth && std::abs(q.y()) <= roi.row_half_extent; };
  if (cal.ground_from_roi) {
    std::vector<double> zs;
    for (const auto& q : mapped)
      if (in_footprint(q)) zs.push_back(q.z());
    if (zs.empty()) throw Error(ErrorCode::EmptyRoi, "no points inside the roi footprint");
    const auto k = static_cast<std::size_t>(std::floor(roi.ground_percentile * static_cast<double>(zs.size() - 1)));
    std::nth_element(zs.begin(), zs.begin() + static_cast<std::ptrdiff_t>(k), zs.end());
    const double ground = zs[k];
    cal.origin.z() += ground;
    for (auto& q : mapped) q.z() -= ground;
    cal.ground_from_roi = false;
  }

  CalibratedCloud out;
  out.calibration = cal;
  for (std::size_t i = 0; i < mapped.size(); ++i) {
    const Vec3& q = mapped[i];
    if (in_footprint(q) && q.z() >= roi.height_min && q.z() <= roi.height_max) {
      out.cloud.push_back(q, cloud.colors[i]);
      out.kept.push_back(i);
    }
  }
  if (out.cloud.empty()) throw Error(ErrorCode::EmptyRoi, "roi crop removed every point");
  return out;
}

/// Applies a calibration without cropping (identity ROI).
inline ColorPointCloud transform_cloud(const ColorPointCloud& cloud, const Calibration& calib) {
  ColorPointCloud out = cloud;
  for (auto& p : out.points) p = calib.apply(p);
  return out;
}

}  // namespace orchard
