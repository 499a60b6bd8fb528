#pragma once

// Straight-line Hough transform on a binary image. A line is parametrized by
// its direction angle phi from the image's first axis (u) and the signed
// offset rho = -u sin(phi) + v cos(phi); phi = 0 is a line of constant v.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "orchard/geometry.hpp"

namespace orchard {

struct BinaryImage {
  int width = 0;   // u extent
  int height = 0;  // v extent
  std::vector<std::uint8_t> pixels;  // u fastest

  BinaryImage() = default;
  BinaryImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, 0) {}
  std::uint8_t& at(int u, int v) { return pixels[static_cast<std::size_t>(v) * width + u]; }
  std::uint8_t at(int u, int v) const { return pixels[static_cast<std::size_t>(v) * width + u]; }
};

struct HoughAccumulator {
  double phi_step_deg = 0.5;
  int n_phi = 0;
  int n_rho = 0;
  double rho_min = 0.0;  // pixels
  std::vector<std::int32_t> votes;  // rho fastest

  double phi_deg(int k) const { return -90.0 + k * phi_step_deg; }
  double rho(int r) const { return rho_min + r; }
  std::int32_t at(int k, int r) const { return votes[static_cast<std::size_t>(k) * n_rho + r]; }
  std::int32_t max_vote() const { return votes.empty() ? 0 : *std::max_element(votes.begin(), votes.end()); }
};

struct HoughPeak {
  double phi_deg = 0.0;
  double rho = 0.0;
  std::int32_t votes = 0;
};

inline HoughAccumulator hough_transform(const BinaryImage& img, double phi_step_deg = 0.5) {
  HoughAccumulator acc;
  acc.phi_step_deg = phi_step_deg;
  acc.n_phi = static_cast<int>(std::lround(180.0 / phi_step_deg));
  const double diag = std::ceil(std::hypot(img.width, img.height));
  acc.rho_min = -diag;
  acc.n_rho = static_cast<int>(2 * diag) + 1;
  acc.votes.assign(static_cast<std::size_t>(acc.n_phi) * acc.n_rho, 0);
  std::vector<double> s(acc.n_phi), c(acc.n_phi);
  for (int k = 0; k < acc.n_phi; ++k) {
    const double phi = deg2rad(acc.phi_deg(k));
    s[k] = std::sin(phi);
    c[k] = std::cos(phi);
  }
  for (int v = 0; v < img.height; ++v)
    for (int u = 0; u < img.width; ++u) {
      if (!img.at(u, v)) continue;
      for (int k = 0; k < acc.n_phi; ++k) {
        const double rho = -u * s[k] + v * c[k];
        const int r = static_cast<int>(std::lround(rho - acc.rho_min));
        ++acc.votes[static_cast<std::size_t>(k) * acc.n_rho + r];
      }
    }
  return acc;
}

struct HoughPeakOptions {
  double threshold_ratio = 0.20;  // of the global maximum
  double max_abs_phi_deg = 10.0;
  int suppress_rho = 4;           // half window, bins
  double suppress_phi_deg = 2.0;  // half window
  int max_peaks = 64;
};

/// Iterative peak picking: take the strongest remaining cell inside the
/// angle gate, record it if it clears the threshold, suppress its
/// neighborhood, repeat. Ties go to the lowest (phi, rho) index.
inline std::vector<HoughPeak> hough_peaks(const HoughAccumulator& acc, const HoughPeakOptions& opt = {}) {
  std::vector<HoughPeak> peaks;
  const std::int32_t global = acc.max_vote();
  if (global <= 0) return peaks;
  const double threshold = opt.threshold_ratio * global;
  std::vector<std::uint8_t> dead(acc.votes.size(), 0);
  std::vector<int> gate;
  for (int k = 0; k < acc.n_phi; ++k)
    if (std::abs(acc.phi_deg(k)) < opt.max_abs_phi_deg) gate.push_back(k);
  const int sp = static_cast<int>(std::lround(opt.suppress_phi_deg / acc.phi_step_deg));
  while (static_cast<int>(peaks.size()) < opt.max_peaks) {
    std::int32_t best = -1;
    int bk = -1, br = -1;
    for (int k : gate)
      for (int r = 0; r < acc.n_rho; ++r) {
        const auto idx = static_cast<std::size_t>(k) * acc.n_rho + r;
        if (!dead[idx] && acc.votes[idx] > best) {
          best = acc.votes[idx];
          bk = k;
          br = r;
        }
      }
    if (bk < 0 || !(best > threshold)) break;
    peaks.push_back({acc.phi_deg(bk), acc.rho(br), best});
    for (int k = std::max(0, bk - sp); k <= std::min(acc.n_phi - 1, bk + sp); ++k)
      for (int r = std::max(0, br - opt.suppress_rho); r <= std::min(acc.n_rho - 1, br + opt.suppress_rho); ++r)
        dead[static_cast<std::size_t>(k) * acc.n_rho + r] = 1;
  }
  return peaks;
}

/// v coordinate of a peak's line at image coordinate u.
inline double hough_line_v(const HoughPeak& p, double u) {
  const double phi = deg2rad(p.phi_deg);
  return (p.rho + u * std::sin(phi)) / std::cos(phi);
}

/// Perpendicular pixel distance from (u, v) to a peak's line.
inline double hough_line_distance(const HoughPeak& p, double u, double v) {
  const double phi = deg2rad(p.phi_deg);
  return std::abs(-u * std::sin(phi) + v * std::cos(phi) - p.rho);
}

}  // namespace orchard
