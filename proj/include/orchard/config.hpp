#pragma once

// Pipeline configuration: every tunable constant with its default, a
// key = value text format, and the flag > file > default precedence.
//
// File format: one "key = value" per line, '#' starts a comment, blank lines
// are ignored. Keys are the names listed by config_entries(); lists (calib,
// batch.scenes) are comma separated.

#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "orchard/apples.hpp"
#include "orchard/calibrate.hpp"
#include "orchard/error.hpp"
#include "orchard/register.hpp"
#include "orchard/segment.hpp"
#include "orchard/separate.hpp"

namespace orchard {

struct PipelineConfig {
  std::string winter;
  std::string harvest;
  std::vector<std::string> calib;  // winter first, then harvest; one entry serves both
  std::string gt_labels;
  std::string gt_apples;
  std::string out = "orchard_out";
  std::uint64_t seed = 0;
  std::string stage = "run";
  int workers = 1;
  bool emit_debug = false;
  bool winter_only = false;
  std::string tree_labels = "auto";  // auto | truth
  std::vector<std::string> batch;

  RoiSpec roi;
  SegmentParams segment;
  SeparateParams separate;
  AppleParams apples;
  IcpParams icp;
  double match_radius = 0.10;
};

struct ConfigEntry {
  std::string key;
  std::variant<double*, int*, bool*, std::string*, std::uint64_t*, std::vector<std::string>*> target;
  std::string doc;
};

inline std::vector<ConfigEntry> config_entries(PipelineConfig& c) {
  auto& s = c.segment;
  auto& sp = c.separate;
  auto& a = c.apples;
  auto& i = c.icp;
  return {
      {"winter", &c.winter, "winter cloud (PLY)"},
      {"harvest", &c.harvest, "harvest cloud (PLY)"},
      {"calib", &c.calib, "calibration sidecars: winter[,harvest]"},
      {"gt_labels", &c.gt_labels, "winter ground-truth labels (PLY with semlabel/treeid)"},
      {"gt_apples", &c.gt_apples, "ground-truth apples (JSON)"},
      {"out", &c.out, "output directory"},
      {"seed", &c.seed, "seed for every robust fit"},
      {"stage", &c.stage, "last stage to run"},
      {"workers", &c.workers, "scenes processed concurrently in batch mode"},
      {"emit_debug", &c.emit_debug, "write debug images and overlays"},
      {"winter_only", &c.winter_only, "stop after tree separation"},
      {"tree_labels", &c.tree_labels, "tree labels used for apple assignment: auto | truth"},
      {"batch.scenes", &c.batch, "config files of the scenes of a batch"},
      {"roi.row_half_extent", &c.roi.row_half_extent, "half length of the crop along the row (m)"},
      {"roi.depth", &c.roi.depth, "half depth of the crop across the row (m)"},
      {"roi.height_min", &c.roi.height_min, "lowest kept height above ground (m)"},
      {"roi.height_max", &c.roi.height_max, "highest kept height (m)"},
      {"roi.ground_percentile", &c.roi.ground_percentile, "height percentile taken as ground"},
      {"segment.voxel_edge", &s.voxel_edge, "voxel edge for skeletons (m)"},
      {"segment.fill_cavities", &s.fill_cavities, "fill enclosed voids before thinning"},
      {"segment.hough_phi_step_deg", &s.hough_phi_step_deg, "Hough angle resolution (deg)"},
      {"segment.hough_threshold_ratio", &s.hough_threshold_ratio, "peak threshold relative to the maximum vote"},
      {"segment.hough_max_angle_deg", &s.hough_max_angle_deg, "largest angle from horizontal (deg)"},
      {"segment.line_tube", &s.line_tube, "distance to a horizontal line for plane fitting (m)"},
      {"segment.plane_tol", &s.plane_tol, "trellis-plane inlier tolerance (m)"},
      {"segment.wire_merge", &s.wire_merge, "merge distance of trellis line heights (m)"},
      {"segment.slab_half_width", &s.slab_half_width, "trunk search half width around the plane (m)"},
      {"segment.ground_cell", &s.ground_cell, "ground grid cell (m)"},
      {"segment.nms_window", &s.nms_window, "non-maximum suppression window (m)"},
      {"segment.nms_prominence", &s.nms_prominence, "peak factor over the median nonzero cell"},
      {"segment.ground_smoothing_bins", &s.ground_smoothing_bins, "Gaussian sigma of the ground grid (cells)"},
      {"segment.trunk_cylinder_radius", &s.trunk_cylinder_radius, "trunk verification cylinder (m)"},
      {"segment.min_trunk_path", &s.min_trunk_path, "shortest accepted main axis (m)"},
      {"segment.trunk_label_dist", &s.trunk_label_dist, "distance to a main axis for trunk points (m)"},
      {"segment.segment_cylinder_radius", &s.segment_cylinder_radius, "wire segment cylinder (m)"},
      {"segment.trunk_offset", &s.trunk_offset, "wire segment offset from trunks (m)"},
      {"segment.line_tol_lowest", &s.line_tol_lowest, "lowest level line tolerance (m)"},
      {"segment.line_tol_upper", &s.line_tol_upper, "upper level line tolerance (m)"},
      {"segment.wire_max_angle_deg", &s.wire_max_angle_deg, "largest wire angle from the row (deg)"},
      {"segment.pole_radius", &s.pole_radius, "support pole radius (m)"},
      {"segment.pole_shell_half_width", &s.pole_shell_half_width, "half width of the pole shell (m)"},
      {"segment.pole_slice", &s.pole_slice, "pole slice height (m)"},
      {"segment.pole_height", &s.pole_height, "pole height (m)"},
      {"segment.pole_ratio", &s.pole_ratio, "shell fraction for a pole"},
      {"segment.pole_min_points", &s.pole_min_points, "points needed to test a pole"},
      {"msac.confidence", &s.msac.confidence, "MSAC stopping confidence"},
      {"msac.max_iterations", &s.msac.max_iterations, "MSAC iteration cap"},
      {"separate.voxel_edge", &sp.voxel_edge, "voxel edge for the tree skeleton (m)"},
      {"separate.fill_cavities", &sp.fill_cavities, "fill enclosed voids before thinning"},
      {"separate.component_trunk_dist", &sp.component_trunk_dist, "component to trunk distance (m)"},
      {"separate.floating_ratio", &sp.floating_ratio, "distance ratio for direct floating assignment"},
      {"separate.end_neighbors", &sp.end_neighbors, "neighbors of an end-point for line fitting"},
      {"separate.trunk_cylinder_radius", &sp.trunk_cylinder_radius, "cylinder for refreshing main axes (m)"},
      {"separate.path_tolerance_voxels", &sp.path_tolerance_voxels, "main axis protection radius (voxels)"},
      {"apples.green_lo", &a.green_lo, "green/yellow hue lower bound"},
      {"apples.green_hi", &a.green_hi, "green/yellow hue upper bound"},
      {"apples.red_lo", &a.red_lo, "red hue upper bound of [0, red_lo]"},
      {"apples.red_hi", &a.red_hi, "red hue lower bound of [red_hi, 1]"},
      {"apples.voxel_edge", &a.voxel_edge, "apple voxel edge (m)"},
      {"apples.min_voxels", &a.min_voxels, "smallest kept apple component (voxels)"},
      {"apples.gate_sv", &a.gate_sv, "also gate saturation and value"},
      {"apples.min_saturation", &a.min_saturation, "saturation gate"},
      {"apples.min_value", &a.min_value, "value gate"},
      {"icp.reject_radius", &i.reject_radius, "correspondence rejection radius (m)"},
      {"icp.initial_radius", &i.initial_radius, "first correspondence radius (m)"},
      {"icp.anneal_factor", &i.anneal_factor, "radius factor over the residual"},
      {"icp.rms_tolerance", &i.rms_tolerance, "convergence on residual change (m)"},
      {"icp.max_iterations", &i.max_iterations, "iteration cap"},
      {"icp.min_correspondences", &i.min_correspondences, "correspondences needed at the start"},
      {"icp.subsample_edge", &i.subsample_edge, "winter subsampling voxel (m), 0 keeps all"},
      {"eval.match_radius", &c.match_radius, "apple match radius (m)"},
  };
}

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  T out{};
  is >> out;
  if (!is || !(is >> std::ws).eof()) throw Error(ErrorCode::ConfigError, key + ": cannot parse '" + v + "'");
  return out;
}

}  // namespace detail

inline void set_config_value(PipelineConfig& c, const std::string& key, const std::string& value) {
  for (auto& e : config_entries(c)) {
    if (e.key != key) continue;
    std::visit(
        [&](auto* t) {
          using T = std::remove_pointer_t<decltype(t)>;
          if constexpr (std::is_same_v<T, std::string>) {
            *t = value;
          } else if constexpr (std::is_same_v<T, bool>) {
            if (value == "true" || value == "1" || value == "yes") *t = true;
            else if (value == "false" || value == "0" || value == "no") *t = false;
            else throw Error(ErrorCode::ConfigError, key + ": expected a boolean, got '" + value + "'");
          } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
            t->clear();
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ','))
              if (auto v = detail::trim(item); !v.empty()) t->push_back(v);
          } else {
            *t = detail::parse_number<T>(key, value);
          }
        },
        e.target);
    return;
  }
  throw Error(ErrorCode::ConfigError, "unknown key '" + key + "'");
}

inline void apply_config_text(PipelineConfig& c, std::istream& in, const std::string& origin = "config") {
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ConfigError, origin + ":" + std::to_string(n) + ": expected key = value");
    try {
      set_config_value(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, origin + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

inline void apply_config_file(PipelineConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path);
  apply_config_text(c, in, path);
}

/// Positive constants stay positive; ranges stay ordered.
inline void validate_config(const PipelineConfig& c) {
  c.roi.validate();
  auto positive = [](double v, const char* key) {
    if (!(v > 0)) throw Error(ErrorCode::ConfigError, std::string(key) + " must be > 0");
  };
  const auto& s = c.segment;
  positive(s.voxel_edge, "segment.voxel_edge");
  positive(s.hough_phi_step_deg, "segment.hough_phi_step_deg");
  positive(s.hough_threshold_ratio, "segment.hough_threshold_ratio");
  positive(s.hough_max_angle_deg, "segment.hough_max_angle_deg");
  positive(s.line_tube, "segment.line_tube");
  positive(s.plane_tol, "segment.plane_tol");
  positive(s.wire_merge, "segment.wire_merge");
  positive(s.slab_half_width, "segment.slab_half_width");
  positive(s.ground_cell, "segment.ground_cell");
  positive(s.nms_window, "segment.nms_window");
  positive(s.nms_prominence, "segment.nms_prominence");
  positive(s.trunk_cylinder_radius, "segment.trunk_cylinder_radius");
  positive(s.min_trunk_path, "segment.min_trunk_path");
  positive(s.trunk_label_dist, "segment.trunk_label_dist");
  positive(s.segment_cylinder_radius, "segment.segment_cylinder_radius");
  positive(s.trunk_offset, "segment.trunk_offset");
  positive(s.line_tol_lowest, "segment.line_tol_lowest");
  positive(s.line_tol_upper, "segment.line_tol_upper");
  positive(s.pole_radius, "segment.pole_radius");
  positive(s.pole_shell_half_width, "segment.pole_shell_half_width");
  positive(s.pole_slice, "segment.pole_slice");
  positive(s.pole_height, "segment.pole_height");
  positive(s.pole_ratio, "segment.pole_ratio");
  positive(s.msac.confidence, "msac.confidence");
  if (s.msac.confidence >= 1) throw Error(ErrorCode::ConfigError, "msac.confidence must be < 1");
  positive(s.msac.max_iterations, "msac.max_iterations");
  positive(c.separate.voxel_edge, "separate.voxel_edge");
  positive(c.separate.component_trunk_dist, "separate.component_trunk_dist");
  positive(c.separate.floating_ratio, "separate.floating_ratio");
  positive(c.separate.end_neighbors, "separate.end_neighbors");
  positive(c.apples.voxel_edge, "apples.voxel_edge");
  if (!(c.apples.green_lo <= c.apples.green_hi)) throw Error(ErrorCode::ConfigError, "apples green range is empty");
  if (!(c.apples.red_lo < c.apples.red_hi)) throw Error(ErrorCode::ConfigError, "apples red bounds overlap");
  positive(c.icp.reject_radius, "icp.reject_radius");
  positive(c.icp.initial_radius, "icp.initial_radius");
  positive(c.icp.max_iterations, "icp.max_iterations");
  positive(c.match_radius, "eval.match_radius");
  if (c.workers < 1) throw Error(ErrorCode::ConfigError, "workers must be >= 1");
  if (c.tree_labels != "auto" && c.tree_labels != "truth")
    throw Error(ErrorCode::ConfigError, "tree_labels must be auto or truth");
}

}  // namespace orchard
