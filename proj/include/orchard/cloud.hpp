#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "orchard/error.hpp"
#include "orchard/geometry.hpp"

namespace orchard {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Points (meters) with per-point RGB. The two arrays always have equal length.
struct ColorPointCloud {
  std::vector<Vec3> points;
  std::vector<Rgb> colors;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }

  void reserve(std::size_t n) {
    points.reserve(n);
    colors.reserve(n);
  }

  void push_back(const Vec3& p, Rgb c) {
    points.push_back(p);
    colors.push_back(c);
  }

  ColorPointCloud subset(std::span<const std::size_t> indices) const {
    ColorPointCloud out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(points[i], colors[i]);
    return out;
  }

  /// Throws ShapeError / DegenerateInput when the cloud breaks its invariants.
  void validate() const {
    if (points.size() != colors.size()) {
      throw Error(ErrorCode::ShapeError, "points and colors differ in length");
    }
    for (const auto& p : points) {
      if (!p.allFinite()) throw Error(ErrorCode::DegenerateInput, "non-finite coordinate");
    }
  }
};

inline void require_nonempty(const ColorPointCloud& cloud, const char* what) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyInput, what);
}

}  // namespace orchard
