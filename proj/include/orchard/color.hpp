#pragma once

#include <algorithm>
#include <cmath>

#include "orchard/cloud.hpp"

namespace orchard {

struct Hsv {
  double h = 0.0;  // [0, 1), red at 0
  double s = 0.0;
  double v = 0.0;
};

/// Hexcone conversion. Achromatic colors get h = 0. The hue is one
/// division of exact integers, so bounds such as 0.05 compare exactly.
inline Hsv rgb_to_hsv(Rgb c) {
  const int r = c.r, g = c.g, b = c.b;
  const int mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const int d = mx - mn;
  Hsv out;
  out.v = mx / 255.0;
  out.s = mx > 0 ? static_cast<double>(d) / mx : 0.0;
  if (d == 0) return out;
  int num;  // hue * 6d, in [0, 6d)
  if (mx == r) {
    num = g - b;
    if (num < 0) num += 6 * d;
  } else if (mx == g) {
    num = b - r + 2 * d;
  } else {
    num = r - g + 4 * d;
  }
  out.h = static_cast<double>(num) / (6.0 * d);
  return out;
}

inline Rgb hsv_to_rgb(Hsv c) {
  double h = c.h - std::floor(c.h);
  h *= 6.0;
  const int i = static_cast<int>(std::floor(h)) % 6;
  const double f = h - std::floor(h);
  const double p = c.v * (1 - c.s), q = c.v * (1 - c.s * f), t = c.v * (1 - c.s * (1 - f));
  double r = 0, g = 0, b = 0;
  switch (i) {
    case 0: r = c.v, g = t, b = p; break;
    case 1: r = q, g = c.v, b = p; break;
    case 2: r = p, g = c.v, b = t; break;
    case 3: r = p, g = q, b = c.v; break;
    case 4: r = t, g = p, b = c.v; break;
    default: r = c.v, g = p, b = q; break;
  }
  auto q8 = [](double x) { return static_cast<std::uint8_t>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0)); };
  return {q8(r), q8(g), q8(b)};
}

}  // namespace orchard
