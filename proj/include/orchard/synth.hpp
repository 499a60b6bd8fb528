#pragma once

// Seeded generator of winter / harvest scene pairs for an I-trellis row,
// with per-point ground truth, apple truth and the chart markers needed to
// calibrate the raw clouds.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "orchard/calibrate.hpp"
#include "orchard/cloud.hpp"
#include "orchard/color.hpp"
#include "orchard/error.hpp"
#include "orchard/geometry.hpp"

namespace orchard {

/// Ground-truth semantic codes written to the "semlabel" sidecar. The first
/// four match SemanticLabel.
namespace gt {
constexpr int kNone = -1;  // ground, chart
constexpr int kTrunk = 0;
constexpr int kBranch = 1;
constexpr int kWire = 2;
constexpr int kPole = 3;
constexpr int kApple = 4;
constexpr int kLeaf = 5;
}  // namespace gt

struct SceneSpec {
  int n_trees = 5;
  double tree_spacing = 1.0;
  double spacing_jitter = 0.12;
  double min_spacing = 0.8;
  double height_min = 1.6;
  double height_max = 2.8;
  std::vector<double> wire_heights{0.5, 1.0, 1.5, 2.0};
  double wire_radius = 0.002;
  bool water_pipe = true;
  double pipe_drop = 0.06;
  double pipe_radius = 0.01;
  bool pole = true;
  double pole_radius = 0.045;
  double pole_height = 2.3;
  double pole_arc_deg = 240.0;
  int apples_per_tree = 10;
  int leaves_per_tree = 120;
  int floating_twigs = 2;
  double arch_probability = 0.4;
  double trunk_radius_base = 0.025;
  double trunk_radius_top = 0.010;
  double point_spacing = 0.004;
  double ground_spacing = 0.02;
  double noise = 0.002;
  double droop = 0.05;
  double row_padding = 0.5;
  double chart_distance = 0.8;  // d_R
  double chart_offset = 0.25;   // d_T
  double chart_height = 0.6;
  double chart_yaw_deg = 0.0;
  double patch_spacing = 0.05;
  double marker_noise = 0.0;
  double harvest_rotation_deg = 1.0;
  double harvest_shift = 0.03;
  std::uint64_t seed = 1;

  void validate() const {
    auto bad = [](const char* what) { throw Error(ErrorCode::SpecError, what); };
    if (n_trees < 1) bad("n_trees must be >= 1");
    if (!(tree_spacing > 0 && min_spacing > 0)) bad("tree spacing must be positive");
    if (!(height_min > 0 && height_max >= height_min)) bad("tree heights must be positive and ordered");
    if (wire_heights.empty()) bad("at least one wire height");
    for (double h : wire_heights)
      if (!(h > 0)) bad("wire heights must be positive");
    if (!(wire_radius > 0 && pipe_radius > 0 && pole_radius > 0 && pole_height > 0)) bad("radii must be positive");
    if (!(point_spacing > 0 && ground_spacing > 0)) bad("sampling spacing must be positive");
    if (noise < 0 || droop < 0 || marker_noise < 0) bad("noise and droop must be >= 0");
    if (apples_per_tree < 0 || leaves_per_tree < 0 || floating_twigs < 0) bad("counts must be >= 0");
    if (!(patch_spacing > 0 && chart_distance > 0)) bad("chart dimensions must be positive");
    if (!(trunk_radius_base > 0 && trunk_radius_top > 0)) bad("trunk radii must be positive");
  }
};

struct GtApple {
  Vec3 position = Vec3::Zero();  // harvest calibrated frame
  int tree_id = 0;
  double radius = 0.0;
  bool red = true;
};

struct SeasonCloud {
  ColorPointCloud raw;    // reconstruction frame (unknown scale and pose)
  ColorPointCloud world;  // true calibrated frame
  std::vector<int> semlabel;
  std::vector<int> treeid;
  MarkerObservation markers;  // raw coordinates
  Calibration truth;          // raw -> world
};

struct SyntheticScene {
  SceneSpec spec;
  SeasonCloud winter;
  SeasonCloud harvest;
  std::vector<GtApple> apples;
  std::vector<double> tree_y;      // planned trunk bases, ascending
  std::vector<double> tree_height;
  std::optional<double> pole_y;
  Mat3 harvest_rotation = Mat3::Identity();  // harvest world = R * winter world + t
  Vec3 harvest_translation = Vec3::Zero();
  std::size_t shared_points = 0;  // leading points present in both seasons
};

namespace detail {

struct Curve {
  std::vector<Vec3> nodes;
  std::vector<double> radii;
  std::vector<double> droop;  // downward displacement in the harvest season
};

class SceneBuilder {
 public:
  explicit SceneBuilder(std::uint64_t seed) : rng_(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  double normal(double s) { return s > 0 ? std::normal_distribution<double>(0.0, s)(rng_) : 0.0; }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }
  bool chance(double p) { return uniform(0.0, 1.0) < p; }
  std::mt19937_64& rng() { return rng_; }

  void add(const Vec3& p, Rgb c, int sem, int tree, double droop = 0.0) {
    pts.push_back(p);
    col.push_back(c);
    sem_.push_back(sem);
    tree_.push_back(tree);
    droop_.push_back(droop);
  }

  Rgb tint(double h, double s, double v) {
    return hsv_to_rgb({h + uniform(-0.004, 0.004), std::clamp(s + uniform(-0.05, 0.05), 0.0, 1.0),
                       std::clamp(v * uniform(0.85, 1.0), 0.0, 1.0)});
  }

  /// Fills the tube with a cross-section lattice at spacing h; tubes thinner
  /// than the lattice get a ring of six points instead.
  void tube(const Curve& c, double h, double hue, double sat, double val, int sem, int tree) {
    for (std::size_t k = 0; k + 1 < c.nodes.size(); ++k) {
      const Vec3 a = c.nodes[k], b = c.nodes[k + 1];
      const double len = (b - a).norm();
      if (len <= 0) continue;
      const Vec3 d = (b - a) / len;
      Vec3 u = d.cross(Vec3::UnitZ());
      if (u.norm() < 1e-6) u = d.cross(Vec3::UnitX());
      u.normalize();
      const Vec3 v = d.cross(u);
      const int n = std::max(1, static_cast<int>(std::ceil(len / h)));
      for (int i = 0; i < n; ++i) {
        const double t = (i + uniform(0.0, 1.0)) / n;
        const Vec3 axis = a + t * (b - a);
        const double r = c.radii[k] + t * (c.radii[k + 1] - c.radii[k]);
        const double dz = c.droop[k] + t * (c.droop[k + 1] - c.droop[k]);
        if (r < h) {
          const double phase = uniform(0.0, 2 * std::numbers::pi);
          for (int j = 0; j < 6; ++j) {
            const double th = phase + j * std::numbers::pi / 3;
            add(axis + r * (std::cos(th) * u + std::sin(th) * v), tint(hue, sat, val), sem, tree, dz);
          }
          continue;
        }
        const double ou = uniform(-0.5, 0.5) * h, ov = uniform(-0.5, 0.5) * h;
        const int m = static_cast<int>(std::ceil(r / h)) + 1;
        for (int p = -m; p <= m; ++p)
          for (int q = -m; q <= m; ++q) {
            const double x = p * h + ou, y = q * h + ov;
            if (x * x + y * y > r * r) continue;
            add(axis + x * u + y * v, tint(hue, sat, val), sem, tree, dz);
          }
      }
    }
  }

  std::vector<Vec3> pts;
  std::vector<Rgb> col;
  std::vector<int> sem_;
  std::vector<int> tree_;
  std::vector<double> droop_;

 private:
  std::mt19937_64 rng_;
};

inline Mat3 random_rotation(SceneBuilder& b, double max_angle_rad) {
  Vec3 axis(b.normal(1.0), b.normal(1.0), b.normal(1.0));
  if (axis.norm() < 1e-9) axis = Vec3::UnitZ();
  return rotation_about(axis.normalized(), b.uniform(0.0, max_angle_rad));
}

inline Curve straight(const Vec3& a, const Vec3& b, double r) {
  return Curve{{a, b}, {r, r}, {0.0, 0.0}};
}

}  // namespace detail

inline SyntheticScene generate_scene(const SceneSpec& spec) {
  spec.validate();
  using detail::Curve;
  detail::SceneBuilder b(spec.seed);
  SyntheticScene scene;
  scene.spec = spec;
  const double h = spec.point_spacing;
  const double pi = std::numbers::pi;

  // trunk bases, the middle tree is the designated one at y = 0
  std::vector<double> ys{0.0};
  for (int j = 1; j < spec.n_trees; ++j) {
    const double gap = std::max(spec.min_spacing, spec.tree_spacing + b.uniform(-spec.spacing_jitter, spec.spacing_jitter));
    ys.push_back(ys.back() + gap);
  }
  const double shift = ys[static_cast<std::size_t>(spec.n_trees / 2)];
  for (auto& y : ys) y -= shift;
  scene.tree_y = ys;
  const double y_lo = ys.front() - spec.row_padding, y_hi = ys.back() + spec.row_padding;

  struct TreePlan {
    Curve trunk;
    std::vector<Curve> twigs;  // laterals and sub-branches
    double height = 0.0;
    double hue = 0.1;
  };
  std::vector<TreePlan> plans(static_cast<std::size_t>(spec.n_trees));

  auto trunk_at = [](const Curve& c, double z) {
    for (std::size_t k = 0; k + 1 < c.nodes.size(); ++k) {
      if (z <= c.nodes[k + 1].z() || k + 2 == c.nodes.size()) {
        const double t = std::clamp((z - c.nodes[k].z()) / (c.nodes[k + 1].z() - c.nodes[k].z()), 0.0, 1.0);
        return Vec3(c.nodes[k] + t * (c.nodes[k + 1] - c.nodes[k]));
      }
    }
    return c.nodes.back();
  };

  for (int j = 0; j < spec.n_trees; ++j) {
    auto& plan = plans[j];
    plan.height = b.uniform(spec.height_min, spec.height_max);
    plan.hue = b.uniform(0.075, 0.115);
    scene.tree_height.push_back(plan.height);
    const double x0 = b.uniform(-0.01, 0.01);
    const double ax = b.uniform(0.0, 0.01), ay = b.uniform(0.0, 0.015);
    const double lam = b.uniform(1.2, 2.5), ph = b.uniform(0.0, 2 * pi);
    const int n_nodes = static_cast<int>(std::ceil(plan.height / 0.1)) + 1;
    for (int k = 0; k < n_nodes; ++k) {
      const double z = plan.height * k / (n_nodes - 1);
      const double w = z / plan.height;
      plan.trunk.nodes.emplace_back(x0 + ax * std::sin(2 * pi * z / lam + ph) * w,
                                    ys[j] + ay * std::sin(2 * pi * z / lam + 2 * ph) * w, z);
      plan.trunk.radii.push_back(spec.trunk_radius_base + w * (spec.trunk_radius_top - spec.trunk_radius_base));
      plan.trunk.droop.push_back(0.0);
    }

    const int n_lat = b.integer(8, 12);
    for (int k = 0; k < n_lat; ++k) {
      const double z = 0.35 + (plan.height - 0.5) * (k + b.uniform(0.2, 0.8)) / n_lat;
      const Vec3 base = trunk_at(plan.trunk, z);
      const double psi = (b.chance(0.5) ? 0.0 : pi) + b.uniform(-55.0, 55.0) * pi / 180.0;
      const double elev = b.uniform(20.0, 60.0) * pi / 180.0;
      const double len = b.uniform(0.25, 0.55);
      const double arch = b.uniform(-0.04, 0.08) * len;
      const double r0 = b.uniform(0.006, 0.012);
      const double sag = spec.droop * b.uniform(0.4, 1.0);
      const Vec3 dir(std::cos(elev) * std::cos(psi), std::cos(elev) * std::sin(psi), std::sin(elev));
      Curve lat;
      for (int s = 0; s <= 10; ++s) {
        const double t = s / 10.0;
        lat.nodes.push_back(base + t * len * dir + Vec3(0, 0, arch * std::sin(pi * t)));
        lat.radii.push_back(std::max(0.004, r0 * (1.0 - 0.5 * t)));
        lat.droop.push_back(sag * t * t);
      }
      const int n_sub = b.integer(0, 2);
      std::vector<Curve> subs;
      for (int s = 0; s < n_sub; ++s) {
        const double t = b.uniform(0.3, 0.8);
        const int node = static_cast<int>(std::lround(t * 10));
        const Vec3 at = lat.nodes[node];
        const Vec3 pd = (lat.nodes[std::min(node + 1, 10)] - lat.nodes[std::max(node - 1, 0)]).normalized();
        Vec3 side = pd.cross(Vec3(b.normal(1), b.normal(1), b.normal(1)));
        if (side.norm() < 1e-6) side = pd.cross(Vec3::UnitZ());
        side.normalize();
        const double ang = b.uniform(30.0, 60.0) * pi / 180.0;
        const Vec3 sd = (std::cos(ang) * pd + std::sin(ang) * side).normalized();
        const double sl = b.uniform(0.08, 0.2);
        const double sr = std::max(0.004, lat.radii[node] * b.uniform(0.5, 0.7));
        Curve sub;
        for (int q = 0; q <= 4; ++q) {
          const double u = q / 4.0;
          sub.nodes.push_back(at + u * sl * sd);
          sub.radii.push_back(sr);
          sub.droop.push_back(std::min(spec.droop, lat.droop[node] + 0.3 * spec.droop * u * u));
        }
        subs.push_back(std::move(sub));
      }
      plan.twigs.push_back(std::move(lat));
      for (auto& s : subs) plan.twigs.push_back(std::move(s));
    }
  }

  // the shared structure first: trunks, branches, arches, twigs, wires, pipe, pole
  for (int j = 0; j < spec.n_trees; ++j) {
    const auto& plan = plans[j];
    b.tube(plan.trunk, h, plan.hue, 0.5, 0.4, gt::kTrunk, j + 1);
    for (const auto& c : plan.twigs) b.tube(c, h, plan.hue, 0.45, 0.45, gt::kBranch, j + 1);
  }
  for (int j = 0; j + 1 < spec.n_trees; ++j) {
    if (!b.chance(spec.arch_probability)) continue;
    const double top = std::min(plans[j].height, plans[j + 1].height) - 0.5;
    if (top <= 0.9) continue;
    const double hs = b.uniform(0.9, top);
    const Vec3 s = trunk_at(plans[j].trunk, hs);
    const Vec3 e = trunk_at(plans[j + 1].trunk, hs + b.uniform(-0.1, 0.1));
    const double bulge = (b.chance(0.5) ? 1.0 : -1.0) * b.uniform(0.12, 0.25);
    const double lift = b.uniform(0.15, 0.3);
    // two branches, one from each tree, meeting at the apex
    Curve left, right;
    for (int k = 0; k <= 20; ++k) {
      const double t = k / 20.0;
      const Vec3 q = s + t * (e - s) + Vec3(bulge * std::sin(pi * t), 0.0, lift * std::sin(pi * t));
      for (auto* c : {&left, &right}) {
        if ((c == &left && k > 10) || (c == &right && k < 10)) continue;
        c->nodes.push_back(q);
        c->radii.push_back(0.007);
        c->droop.push_back(0.0);
      }
    }
    b.tube(left, h, plans[j].hue, 0.45, 0.45, gt::kBranch, j + 1);
    b.tube(right, h, plans[j + 1].hue, 0.45, 0.45, gt::kBranch, j + 2);
  }
  for (int f = 0; f < spec.floating_twigs; ++f) {
    const int j = b.integer(0, spec.n_trees - 1);
    const auto& plan = plans[j];
    if (plan.twigs.empty()) continue;
    const auto& lat = plan.twigs[static_cast<std::size_t>(b.integer(0, static_cast<int>(plan.twigs.size()) - 1))];
    const Vec3 tip = lat.nodes.back();
    const Vec3 d = (lat.nodes.back() - lat.nodes[lat.nodes.size() - 2]).normalized();
    const Vec3 start = tip + d * b.uniform(0.025, 0.04);
    const double len = b.uniform(0.08, 0.18);
    Curve twig = detail::straight(start, start + len * d, 0.005);
    twig.droop = {lat.droop.back(), lat.droop.back()};
    b.tube(twig, h, plan.hue, 0.45, 0.45, gt::kBranch, j + 1);
  }
  for (double wh : spec.wire_heights) {
    b.tube(detail::straight(Vec3(0, y_lo, wh), Vec3(0, y_hi, wh), spec.wire_radius), h, 0.6, 0.12, 0.6, gt::kWire, 0);
  }
  if (spec.water_pipe) {
    const double zp = *std::min_element(spec.wire_heights.begin(), spec.wire_heights.end()) - spec.pipe_drop;
    b.tube(detail::straight(Vec3(0, y_lo, zp), Vec3(0, y_hi, zp), spec.pipe_radius), h, 0.62, 0.25, 0.15,
           gt::kWire, 0);
  }
  if (spec.pole) {
    double py;
    if (spec.n_trees >= 2) {
      const int k = b.integer(0, spec.n_trees - 2);
      py = 0.5 * (ys[k] + ys[k + 1]);
    } else {
      py = ys[0] + 0.5;
    }
    scene.pole_y = py;
    const double arc = spec.pole_arc_deg * pi / 180.0;
    const int n_th = std::max(3, static_cast<int>(std::ceil(arc * spec.pole_radius / h)));
    const int n_z = static_cast<int>(std::ceil(spec.pole_height / h));
    for (int iz = 0; iz < n_z; ++iz)
      for (int it = 0; it < n_th; ++it) {
        const double th = pi - arc / 2 + arc * (it + b.uniform(0.0, 1.0)) / n_th;
        const double z = spec.pole_height * (iz + b.uniform(0.0, 1.0)) / n_z;
        b.add(Vec3(spec.pole_radius * std::cos(th), py + spec.pole_radius * std::sin(th), z), b.tint(0.55, 0.1, 0.7),
              gt::kPole, 0);
      }
  }
  const std::size_t n_struct = b.pts.size();
  scene.shared_points = n_struct;

  // ground and chart belong to both seasons but are sampled separately
  auto add_ground_and_chart = [&](detail::SceneBuilder& sb, std::vector<Vec3>& markers) {
    for (double x = -0.7; x <= 0.7; x += spec.ground_spacing)
      for (double y = y_lo - 0.3; y <= y_hi + 0.3; y += spec.ground_spacing)
        sb.add(Vec3(x + sb.uniform(0, spec.ground_spacing), y + sb.uniform(0, spec.ground_spacing), 0.0),
               sb.tint(0.13, 0.5, 0.35), gt::kNone, 0);
    const Vec3 center(-spec.chart_distance, -spec.chart_offset, spec.chart_height);
    const Mat3 yaw = rotation_about(Vec3::UnitZ(), deg2rad(spec.chart_yaw_deg));
    const int rows = 4, cols = 6;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const Vec3 local(0.0, (c - (cols - 1) / 2.0) * spec.patch_spacing, ((rows - 1) / 2.0 - r) * spec.patch_spacing);
        markers.push_back(center + yaw * local);
      }
    const double half_w = 0.5 * cols * spec.patch_spacing + 0.02, half_h = 0.5 * rows * spec.patch_spacing + 0.02;
    for (double u = -half_w; u <= half_w; u += h)
      for (double v = -half_h; v <= half_h; v += h)
        sb.add(center + yaw * Vec3(0.0, u, v), sb.tint(0.6, 0.2, 0.5), gt::kNone, 0);
  };

  // harvest-only additions
  detail::SceneBuilder extra(spec.seed ^ 0xA5A5A5A5ull);
  std::vector<Vec3> apple_centers;
  auto harvest_pos = [&](const Vec3& p, double droop) { return Vec3(p - Vec3(0, 0, droop)); };
  for (int j = 0; j < spec.n_trees; ++j) {
    const auto& plan = plans[j];
    if (plan.twigs.empty()) continue;
    int placed = 0;
    for (int attempt = 0; attempt < 60 * std::max(1, spec.apples_per_tree) && placed < spec.apples_per_tree; ++attempt) {
      const auto& c = plan.twigs[static_cast<std::size_t>(extra.integer(0, static_cast<int>(plan.twigs.size()) - 1))];
      const int node = extra.integer(static_cast<int>(c.nodes.size()) / 3, static_cast<int>(c.nodes.size()) - 1);
      const double radius = extra.uniform(0.03, 0.04);
      const Vec3 hang = harvest_pos(c.nodes[node], c.droop[node]);
      const Vec3 center = hang + Vec3(extra.uniform(-0.01, 0.01), extra.uniform(-0.01, 0.01), -(radius + c.radii[node] + 0.006));
      if (center.z() < 0.15) continue;
      bool clear = true;
      for (const auto& o : apple_centers)
        if ((o - center).norm() < 0.1) clear = false;
      if (!clear) continue;
      apple_centers.push_back(center);
      const bool red = extra.chance(0.5);
      const double hue = red ? (extra.chance(0.5) ? extra.uniform(0.005, 0.04) : extra.uniform(0.96, 0.995))
                             : extra.uniform(0.16, 0.19);
      scene.apples.push_back({center, j + 1, radius, red});
      const int n = std::max(20, static_cast<int>(4 * pi * radius * radius / (h * h)));
      const double golden = pi * (3.0 - std::sqrt(5.0));
      for (int k = 0; k < n; ++k) {
        const double z = 1.0 - 2.0 * (k + 0.5) / n;
        const double rr = std::sqrt(1.0 - z * z);
        const double th = golden * k;
        extra.add(center + radius * Vec3(rr * std::cos(th), rr * std::sin(th), z),
                  hsv_to_rgb({hue, extra.uniform(0.65, 0.9), extra.uniform(0.55, 0.9)}), gt::kApple, j + 1);
      }
      ++placed;
    }
    for (int k = 0; k < spec.leaves_per_tree; ++k) {
      const auto& c = plan.twigs[static_cast<std::size_t>(extra.integer(0, static_cast<int>(plan.twigs.size()) - 1))];
      const int node = extra.integer(0, static_cast<int>(c.nodes.size()) - 1);
      Vec3 nrm(extra.normal(1), extra.normal(1), extra.normal(1));
      if (nrm.norm() < 1e-6) nrm = Vec3::UnitZ();
      nrm.normalize();
      const Vec3 center = harvest_pos(c.nodes[node], c.droop[node]) + 0.025 * nrm;
      Vec3 u = nrm.cross(Vec3::UnitZ());
      if (u.norm() < 1e-6) u = nrm.cross(Vec3::UnitX());
      u.normalize();
      const Vec3 v = nrm.cross(u);
      const double lr = extra.uniform(0.015, 0.025);
      for (double a = -lr; a <= lr; a += h)
        for (double bb = -lr; bb <= lr; bb += h)
          if (a * a + bb * bb <= lr * lr)
            extra.add(center + a * u + bb * v, extra.tint(extra.uniform(0.24, 0.36), 0.6, 0.5), gt::kLeaf, j + 1);
    }
  }

  // harvest misalignment about the designated tree base
  const Mat3 hrot = detail::random_rotation(b, deg2rad(spec.harvest_rotation_deg));
  const Vec3 htr(b.uniform(-spec.harvest_shift, spec.harvest_shift), b.uniform(-spec.harvest_shift, spec.harvest_shift),
                 b.uniform(-spec.harvest_shift, spec.harvest_shift) * 0.3);
  scene.harvest_rotation = hrot;
  scene.harvest_translation = htr;
  for (auto& a : scene.apples) a.position = hrot * a.position + htr;

  auto finish = [&](SeasonCloud& season, bool harvest, std::uint64_t salt) {
    detail::SceneBuilder noise(spec.seed * 0x100000001B3ull + salt);
    auto& w = season.world;
    w.reserve(n_struct + (harvest ? extra.pts.size() : 0) + 50000);
    for (std::size_t i = 0; i < n_struct; ++i) {
      Vec3 p = b.pts[i];
      if (harvest) p = hrot * harvest_pos(p, b.droop_[i]) + htr;
      w.push_back(p + Vec3(noise.normal(spec.noise), noise.normal(spec.noise), noise.normal(spec.noise)), b.col[i]);
      season.semlabel.push_back(b.sem_[i]);
      season.treeid.push_back(b.tree_[i]);
    }
    if (harvest) {
      for (std::size_t i = 0; i < extra.pts.size(); ++i) {
        const Vec3 p = hrot * extra.pts[i] + htr;
        w.push_back(p + Vec3(noise.normal(spec.noise), noise.normal(spec.noise), noise.normal(spec.noise)), extra.col[i]);
        season.semlabel.push_back(extra.sem_[i]);
        season.treeid.push_back(extra.tree_[i]);
      }
    }
    detail::SceneBuilder fixed(spec.seed * 31 + salt);
    std::vector<Vec3> markers;
    add_ground_and_chart(fixed, markers);
    for (std::size_t i = 0; i < fixed.pts.size(); ++i) {
      Vec3 p = fixed.pts[i];
      if (harvest && fixed.sem_[i] == gt::kNone && p.x() > -spec.chart_distance + 0.05) p = hrot * p + htr;
      w.push_back(p + Vec3(noise.normal(spec.noise), noise.normal(spec.noise), noise.normal(spec.noise)), fixed.col[i]);
      season.semlabel.push_back(gt::kNone);
      season.treeid.push_back(0);
    }

    Calibration truth;
    truth.scale = std::exp(noise.uniform(std::log(0.5), std::log(2.0)));
    truth.rotation = detail::random_rotation(noise, pi);
    truth.origin = Vec3(noise.uniform(-5, 5), noise.uniform(-5, 5), noise.uniform(-5, 5));
    season.truth = truth;
    season.raw = w;
    for (auto& p : season.raw.points) p = truth.invert(p);
    season.markers.patch_spacing_m = spec.patch_spacing;
    season.markers.d_R_cc = spec.chart_distance;
    season.markers.d_T_cc = spec.chart_offset;
    season.markers.marker_cols = 6;
    for (const auto& m : markers) {
      const Vec3 jitter(noise.normal(spec.marker_noise), noise.normal(spec.marker_noise), noise.normal(spec.marker_noise));
      season.markers.marker_points.push_back(truth.invert(m + jitter));
    }
  };
  finish(scene.winter, false, 1);
  finish(scene.harvest, true, 2);
  return scene;
}

}  // namespace orchard
