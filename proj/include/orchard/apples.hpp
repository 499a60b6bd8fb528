#pragma once

// Color-threshold apple detection on the calibrated harvest cloud.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "orchard/cloud.hpp"
#include "orchard/color.hpp"
#include "orchard/connectivity.hpp"
#include "orchard/voxel.hpp"

namespace orchard {

enum class HueRange : std::uint8_t { None, Red, GreenYellow };

constexpr const char* to_string(HueRange r) noexcept {
  switch (r) {
    case HueRange::Red: return "red";
    case HueRange::GreenYellow: return "green_yellow";
    default: return "none";
  }
}

struct AppleParams {
  double green_lo = 0.15, green_hi = 0.20;
  double red_lo = 0.05, red_hi = 0.95;  // red is h <= red_lo or h >= red_hi
  double voxel_edge = 0.005;
  int min_voxels = 8;
  bool gate_sv = false;
  double min_saturation = 0.3;
  double min_value = 0.2;
};

/// Hue class of a color, bounds inclusive. Gray has no hue and is in no range.
inline HueRange classify_hue(Rgb c, const AppleParams& p = {}) {
  if (c.r == c.g && c.g == c.b) return HueRange::None;
  const Hsv hsv = rgb_to_hsv(c);
  if (p.gate_sv && (hsv.s < p.min_saturation || hsv.v < p.min_value)) return HueRange::None;
  if (hsv.h >= p.green_lo && hsv.h <= p.green_hi) return HueRange::GreenYellow;
  if (hsv.h <= p.red_lo || hsv.h >= p.red_hi) return HueRange::Red;
  return HueRange::None;
}

inline std::vector<std::size_t> hue_filter(const ColorPointCloud& cloud, const AppleParams& p = {}) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (classify_hue(cloud.colors[i], p) != HueRange::None) out.push_back(i);
  return out;
}

struct DetectedApple {
  Vec3 location = Vec3::Zero();
  HueRange range = HueRange::Red;
  std::size_t voxels = 0;
};

/// Bounding-box centers of the 26-connected components of the voxelized
/// in-range points. The range is the majority class of the member points.
inline std::vector<DetectedApple> detect_apples(const ColorPointCloud& harvest, const AppleParams& p = {}) {
  const auto idx = hue_filter(harvest, p);
  if (idx.empty()) return {};
  std::vector<Vec3> pts;
  pts.reserve(idx.size());
  for (auto i : idx) pts.push_back(harvest.points[i]);
  const GridGeometry geo = GridGeometry::fit(bounds_of(pts), p.voxel_edge);
  std::vector<Voxel> occupied;
  occupied.reserve(pts.size());
  for (const auto& q : pts) occupied.push_back(geo.bin(q));
  std::sort(occupied.begin(), occupied.end());
  occupied.erase(std::unique(occupied.begin(), occupied.end()), occupied.end());
  const auto comps = connected_components(occupied);

  // red/green votes per component through the voxel of every point
  const VoxelIndex vindex(occupied);
  std::vector<std::int32_t> comp_of(occupied.size(), -1);
  for (std::size_t c = 0; c < comps.size(); ++c)
    for (const auto& v : comps[c]) comp_of[vindex.find(v)] = static_cast<std::int32_t>(c);
  std::vector<std::size_t> red(comps.size(), 0), green(comps.size(), 0);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const auto c = comp_of[vindex.find(geo.bin(pts[k]))];
    (classify_hue(harvest.colors[idx[k]], p) == HueRange::Red ? red : green)[c]++;
  }

  std::vector<DetectedApple> out;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    if (static_cast<int>(comps[c].size()) < p.min_voxels) continue;
    Voxel lo = comps[c].front(), hi = lo;
    for (const auto& v : comps[c]) {
      lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
      hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
    }
    DetectedApple a;
    a.location = 0.5 * (geo.center(lo) + geo.center(hi));
    a.range = red[c] >= green[c] ? HueRange::Red : HueRange::GreenYellow;
    a.voxels = comps[c].size();
    out.push_back(a);
  }
  return out;
}

}  // namespace orchard
