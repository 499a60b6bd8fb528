#pragma once

// JSON sidecars (calibration, ground-truth apples, transforms), CSV and PGM
// writers. Every JSON document carries "schema": "v1".

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "orchard/calibrate.hpp"
#include "orchard/error.hpp"
#include "orchard/geometry.hpp"
#include "orchard/hough.hpp"
#include "orchard/register.hpp"

namespace orchard {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "v1";

inline Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

inline void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

inline Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline Json to_json(const Mat3& m) {
  Json rows = Json::array();
  for (int r = 0; r < 3; ++r) rows.push_back(Json::array({m(r, 0), m(r, 1), m(r, 2)}));
  return rows;
}

namespace detail {

inline Vec3 vec3_from(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::ParseError, what + ": expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline Mat3 mat3_from(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::ParseError, what + ": expected 3x3 rows");
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    const Vec3 row = vec3_from(j[r], what);
    m.row(r) = row.transpose();
  }
  return m;
}

}  // namespace detail

/// Either {"marker_points", "patch_spacing_m", "d_R_cc", "d_T_cc"[, "marker_cols"]}
/// or {"scale", "rotation", "origin"}.
inline CalibrationInput calibration_from_json(const Json& j) {
  try {
    if (j.contains("marker_points")) {
      MarkerObservation m;
      for (const auto& p : j.at("marker_points")) m.marker_points.push_back(detail::vec3_from(p, "marker_points"));
      m.patch_spacing_m = j.at("patch_spacing_m").get<double>();
      m.d_R_cc = j.at("d_R_cc").get<double>();
      m.d_T_cc = j.at("d_T_cc").get<double>();
      m.marker_cols = j.value("marker_cols", 6);
      return m;
    }
    if (j.contains("scale")) {
      ExplicitTransform e;
      e.scale = j.at("scale").get<double>();
      e.rotation = detail::mat3_from(j.at("rotation"), "rotation");
      e.origin = detail::vec3_from(j.at("origin"), "origin");
      return e;
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("calibration: ") + e.what());
  }
  throw Error(ErrorCode::ParseError, "calibration: expected marker_points or scale/rotation/origin");
}

inline CalibrationInput read_calibration(const std::string& path) { return calibration_from_json(read_json(path)); }

inline Json to_json(const MarkerObservation& m) {
  Json pts = Json::array();
  for (const auto& p : m.marker_points) pts.push_back(to_json(p));
  return {{"schema", kSchema}, {"marker_points", pts}, {"patch_spacing_m", m.patch_spacing_m},
          {"d_R_cc", m.d_R_cc},  {"d_T_cc", m.d_T_cc},   {"marker_cols", m.marker_cols}};
}

inline Json to_json(const Calibration& c) {
  return {{"schema", kSchema}, {"scale", c.scale}, {"rotation", to_json(c.rotation)}, {"origin", to_json(c.origin)}};
}

struct ApplePoint {
  Vec3 position = Vec3::Zero();
  int tree_id = 0;
};

/// Accepts a bare array or {"apples": [...]}; entries are {x, y, z, tree_id}.
inline std::vector<ApplePoint> apples_from_json(const Json& j) {
  const Json& arr = j.is_object() ? j.at("apples") : j;
  if (!arr.is_array()) throw Error(ErrorCode::ParseError, "apples: expected an array");
  std::vector<ApplePoint> out;
  try {
    for (const auto& a : arr)
      out.push_back({{a.at("x").get<double>(), a.at("y").get<double>(), a.at("z").get<double>()},
                     a.value("tree_id", 0)});
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("apples: ") + e.what());
  }
  return out;
}

inline std::vector<ApplePoint> read_apples(const std::string& path) { return apples_from_json(read_json(path)); }

inline Json apples_to_json(const std::vector<ApplePoint>& apples) {
  Json arr = Json::array();
  for (const auto& a : apples)
    arr.push_back({{"x", a.position.x()}, {"y", a.position.y()}, {"z", a.position.z()}, {"tree_id", a.tree_id}});
  return {{"schema", kSchema}, {"apples", arr}};
}

inline Json to_json(const RigidTransform& t) {
  return {{"schema", kSchema},          {"R", to_json(t.rotation)},     {"T", to_json(t.translation)},
          {"rms", t.rms},               {"iterations", t.iterations}, {"converged", t.converged}};
}

inline RigidTransform transform_from_json(const Json& j) {
  RigidTransform t;
  try {
    t.rotation = detail::mat3_from(j.at("R"), "R");
    t.translation = detail::vec3_from(j.at("T"), "T");
    t.rms = j.value("rms", 0.0);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("transform: ") + e.what());
  }
  return t;
}

/// apple_id, x, y, z, tree_id, nn_distance_m
inline std::string assignments_csv(const std::vector<Vec3>& apples, const std::vector<AppleAssignment>& a) {
  if (apples.size() != a.size()) throw Error(ErrorCode::ShapeError, "assignments differ from apples");
  std::ostringstream os;
  os.precision(9);
  os << "apple_id,x,y,z,tree_id,nn_distance_m\n";
  for (std::size_t i = 0; i < a.size(); ++i)
    os << i << ',' << apples[i].x() << ',' << apples[i].y() << ',' << apples[i].z() << ',' << a[i].tree << ','
       << a[i].distance << '\n';
  return os.str();
}

/// Binary P5 image; `values` row-major, scaled so the maximum maps to 255.
inline void write_pgm(const std::string& path, int width, int height, const std::vector<double>& values) {
  if (width <= 0 || height <= 0 || values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw Error(ErrorCode::ShapeError, "pgm: size mismatch");
  double hi = 0.0;
  for (double v : values) hi = std::max(hi, v);
  std::string body(values.size(), '\0');
  for (std::size_t i = 0; i < values.size(); ++i)
    body[i] = static_cast<char>(hi > 0 ? static_cast<std::uint8_t>(std::lround(255.0 * std::max(0.0, values[i]) / hi)) : 0);
  write_text(path, "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n" + body);
}

}  // namespace orchard
