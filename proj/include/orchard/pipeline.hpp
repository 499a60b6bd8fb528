#pragma once

// End-to-end run: calibrate -> segment -> separate -> apples -> register ->
// assign -> eval, with artifact emission and a run report.

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "orchard/apples.hpp"
#include "orchard/calibrate.hpp"
#include "orchard/config.hpp"
#include "orchard/evaluate.hpp"
#include "orchard/io.hpp"
#include "orchard/log.hpp"
#include "orchard/ply.hpp"
#include "orchard/register.hpp"
#include "orchard/segment.hpp"
#include "orchard/separate.hpp"
#include "orchard/synth.hpp"

namespace orchard {

enum class Stage { Calibrate, Segment, Separate, Apples, Register, Assign, Eval };

inline constexpr const char* kStageNames[] = {"calibrate", "segment", "separate", "apples",
                                              "register",  "assign",  "eval"};

inline Stage parse_stage(const std::string& s) {
  if (s == "run") return Stage::Eval;
  for (int i = 0; i < 7; ++i)
    if (s == kStageNames[i]) return static_cast<Stage>(i);
  throw Error(ErrorCode::ConfigError, "unknown stage '" + s + "'");
}

struct PipelineInputs {
  std::optional<ColorPointCloud> winter;   // raw reconstruction frame
  std::optional<ColorPointCloud> harvest;  // raw reconstruction frame
  std::optional<CalibrationInput> winter_calib;
  std::optional<CalibrationInput> harvest_calib;
  std::optional<std::vector<int>> gt_semlabel;  // per raw winter point
  std::optional<std::vector<int>> gt_treeid;    // per raw winter point
  std::optional<std::vector<ApplePoint>> gt_apples;  // harvest calibrated frame
};

struct TreeSeparationMetrics {
  std::size_t points = 0;  // trunk and branch truth points kept by segmentation
  std::size_t correct = 0;
  std::optional<double> accuracy;
};

struct EvaluationReport {
  std::vector<std::pair<int, SegmentationMetrics>> classes;  // SemanticLabel code -> metrics
  std::optional<TreeSeparationMetrics> tree_ids;
  std::optional<AppleMatch> apple_match;
  std::optional<double> acc;            // with the configured tree labels
  std::optional<double> acc_gt_labels;  // with truth tree labels, when available
};

struct PipelineResult {
  std::optional<CalibratedCloud> winter;
  std::optional<CalibratedCloud> harvest;
  std::optional<SegmentResult> segment;
  std::optional<SeparationResult> separation;
  std::vector<int> winter_semantic;  // per calibrated winter point, -1 before segmentation
  std::vector<int> winter_tree;      // per calibrated winter point, 0 when not a tree point
  std::vector<DetectedApple> apples;
  std::optional<RigidTransform> transform;
  std::vector<AppleAssignment> assignments;
  std::vector<AppleAssignment> assignments_gt_labels;
  std::optional<EvaluationReport> evaluation;
  std::vector<std::pair<std::string, double>> timings;  // seconds per stage
  std::string last_stage;
};

namespace detail {

class StageTimer {
 public:
  StageTimer(PipelineResult& r, const char* name) : r_(r), name_(name), t0_(std::chrono::steady_clock::now()) {
    logger().info("stage {}", name);
  }
  ~StageTimer() {
    r_.timings.emplace_back(name_, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count());
    r_.last_stage = name_;
  }

 private:
  PipelineResult& r_;
  const char* name_;
  std::chrono::steady_clock::time_point t0_;
};

inline Calibration calibrate_input(const std::optional<CalibrationInput>& c, const char* season) {
  if (!c) throw Error(ErrorCode::ConfigError, std::string("no calibration for the ") + season + " cloud");
  return derive_calibration(*c);
}

/// Tree-labeled winter points and their labels.
inline void tree_points(const PipelineResult& r, const std::vector<int>& labels, std::vector<Vec3>& pts,
                        std::vector<int>& ids) {
  pts.clear();
  ids.clear();
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] > 0) {
      pts.push_back(r.winter->cloud.points[i]);
      ids.push_back(labels[i]);
    }
}

inline bool is_tree_class(int gt_code) { return gt_code == gt::kTrunk || gt_code == gt::kBranch; }

}  // namespace detail

/// Runs every stage up to `c.stage` whose inputs are present. Winter stages
/// need the winter cloud, apple detection the harvest cloud, registration
/// and assignment both.
inline PipelineResult run_pipeline(const PipelineInputs& in, const PipelineConfig& c) {
  validate_config(c);
  const Stage last = c.winter_only ? Stage::Separate : parse_stage(c.stage);
  const auto want = [&](Stage s) { return static_cast<int>(s) <= static_cast<int>(last); };
  const bool truth_labels = c.tree_labels == "truth";
  PipelineResult r;

  {
    detail::StageTimer t(r, "calibrate");
    if (in.winter) r.winter = apply_calibration(*in.winter, detail::calibrate_input(in.winter_calib, "winter"), c.roi);
    if (in.harvest && !c.winter_only)
      r.harvest = apply_calibration(*in.harvest, detail::calibrate_input(in.harvest_calib, "harvest"), c.roi);
    if (!r.winter && !r.harvest) throw Error(ErrorCode::ConfigError, "neither a winter nor a harvest cloud given");
  }
  const bool gt_labels = in.gt_semlabel && in.gt_treeid && r.winter;
  if (gt_labels && (in.gt_semlabel->size() != in.winter->size() || in.gt_treeid->size() != in.winter->size()))
    throw Error(ErrorCode::ShapeError, "ground-truth labels differ from the winter cloud length");
  if (r.winter) {
    r.winter_semantic.assign(r.winter->cloud.size(), -1);
    r.winter_tree.assign(r.winter->cloud.size(), 0);
  }

  if (r.winter && want(Stage::Segment)) {
    detail::StageTimer t(r, "segment");
    r.segment = segment_winter(r.winter->cloud, c.segment, c.seed);
    for (std::size_t i = 0; i < r.segment->labels.size(); ++i)
      r.winter_semantic[i] = static_cast<int>(r.segment->labels[i]);
  }
  if (r.segment && want(Stage::Separate)) {
    detail::StageTimer t(r, "separate");
    r.separation = separate_trees(r.segment->trees.cloud.points, r.segment->tree_set(), c.separate);
    for (std::size_t k = 0; k < r.segment->trees.index.size(); ++k)
      r.winter_tree[r.segment->trees.index[k]] = r.separation->point_tree[k];
  }

  if (r.harvest && want(Stage::Apples)) {
    detail::StageTimer t(r, "apples");
    r.apples = detect_apples(r.harvest->cloud, c.apples);
    logger().info("{} apples detected", r.apples.size());
  }
  if (r.winter && r.harvest && want(Stage::Register)) {
    detail::StageTimer t(r, "register");
    r.transform = icp_align(r.winter->cloud.points, r.harvest->cloud.points, c.icp);
  }

  std::vector<int> truth_tree;
  if (gt_labels) {
    truth_tree.assign(r.winter->cloud.size(), 0);
    for (std::size_t i = 0; i < truth_tree.size(); ++i) {
      const auto src = r.winter->kept[i];
      if (detail::is_tree_class((*in.gt_semlabel)[src])) truth_tree[i] = (*in.gt_treeid)[src];
    }
  }
  if (r.transform && want(Stage::Assign)) {
    detail::StageTimer t(r, "assign");
    std::vector<Vec3> locs;
    for (const auto& a : r.apples) locs.push_back(a.location);
    std::vector<Vec3> pts;
    std::vector<int> ids;
    if (truth_labels) {
      if (!gt_labels) throw Error(ErrorCode::ConfigError, "tree_labels = truth needs ground-truth labels");
      detail::tree_points(r, truth_tree, pts, ids);
    } else {
      if (!r.separation) throw Error(ErrorCode::ConfigError, "assignment needs separated trees");
      detail::tree_points(r, r.winter_tree, pts, ids);
    }
    r.assignments = assign_apples(locs, pts, ids, *r.transform);
    if (gt_labels && !truth_labels) {
      detail::tree_points(r, truth_tree, pts, ids);
      r.assignments_gt_labels = assign_apples(locs, pts, ids, *r.transform);
    }
  }

  if (want(Stage::Eval) && (gt_labels || in.gt_apples)) {
    detail::StageTimer t(r, "eval");
    EvaluationReport ev;
    std::map<int, int> mapping;
    if (gt_labels && r.segment) {
      std::vector<int> gt_sem(r.winter->cloud.size());
      for (std::size_t i = 0; i < gt_sem.size(); ++i) gt_sem[i] = (*in.gt_semlabel)[r.winter->kept[i]];
      for (int cls = 0; cls < 4; ++cls) ev.classes.emplace_back(cls, segmentation_metrics(r.winter_semantic, gt_sem, cls));
    }
    if (gt_labels && r.separation) {
      mapping = majority_tree_mapping(r.winter_tree, truth_tree);
      TreeSeparationMetrics tm;
      for (std::size_t k = 0; k < r.segment->trees.index.size(); ++k) {
        const auto i = r.segment->trees.index[k];
        if (truth_tree[i] <= 0) continue;
        ++tm.points;
        tm.correct += map_tree(mapping, r.winter_tree[i]) == truth_tree[i];
      }
      if (tm.points) tm.accuracy = static_cast<double>(tm.correct) / static_cast<double>(tm.points);
      ev.tree_ids = tm;
    }
    if (in.gt_apples && r.harvest && want(Stage::Apples)) {
      std::vector<Vec3> det, gt_pos;
      std::vector<int> gt_tree;
      for (const auto& a : r.apples) det.push_back(a.location);
      for (const auto& g : *in.gt_apples) {
        gt_pos.push_back(g.position);
        gt_tree.push_back(g.tree_id);
      }
      ev.apple_match = match_apples(det, gt_pos, c.match_radius);
      if (!r.assignments.empty()) {
        std::vector<int> pred;
        const bool map_ids = !truth_labels && !mapping.empty();
        for (const auto& a : r.assignments) pred.push_back(map_ids ? map_tree(mapping, a.tree) : a.tree);
        ev.acc = assignment_accuracy(ev.apple_match->pairs, pred, gt_tree);
      }
      if (!r.assignments_gt_labels.empty()) {
        std::vector<int> pred;
        for (const auto& a : r.assignments_gt_labels) pred.push_back(a.tree);
        ev.acc_gt_labels = assignment_accuracy(ev.apple_match->pairs, pred, gt_tree);
      }
    }
    r.evaluation = std::move(ev);
  }
  return r;
}

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json metrics_json(const SegmentationMetrics& m) {
  return {{"tp", m.counts.tp},          {"fp", m.counts.fp},
          {"fn", m.counts.fn},          {"tn", m.counts.tn},
          {"recall", optional_json(m.recall)}, {"precision", optional_json(m.precision)},
          {"f1", optional_json(m.f1)},  {"iou", optional_json(m.iou)},
          {"accuracy", m.accuracy}};
}

inline Json trees_json(const SegmentResult& s) {
  Json trees = Json::array();
  for (const auto& t : s.tree_set().trees)
    trees.push_back({{"id", t.id},
                     {"base", to_json(t.base)},
                     {"bottom", to_json(t.bottom())},
                     {"top", to_json(t.top())},
                     {"axis_length_m", t.axis_length}});
  Json poles = Json::array();
  for (const auto& p : s.verification.poles)
    if (p.is_pole) poles.push_back({{"y", p.y}, {"ratio", p.ratio}, {"points", p.points.size()}});
  return {{"frame", {{"rotation", to_json(s.frame().rotation)}, {"translation", to_json(s.frame().translation)}}},
          {"trellis_heights_m", s.frame().heights},
          {"trees", trees},
          {"poles", poles}};
}

/// Deterministic part of the report: no paths and no timings.
inline Json comparable_json(const PipelineResult& r, const PipelineConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["tree_labels"] = c.tree_labels;
  j["last_stage"] = r.last_stage;
  Json counts;
  if (r.winter) counts["winter_points"] = r.winter->cloud.size();
  if (r.harvest) counts["harvest_points"] = r.harvest->cloud.size();
  if (r.segment) {
    std::array<std::size_t, 4> per{};
    for (auto l : r.segment->labels) ++per[static_cast<std::size_t>(l)];
    counts["labels"] = {{"tree_trunk", per[0]}, {"branch", per[1]}, {"trellis_wire_water_pipe", per[2]},
                        {"support_pole", per[3]}};
    counts["trellis_lines"] = r.segment->frame().heights.size();
    counts["trunk_candidates"] = r.segment->candidates.size();
    counts["trees"] = r.segment->tree_set().size();
  }
  if (r.separation) {
    counts["skeleton_components"] = r.separation->components.size();
    counts["spanning_components"] = r.separation->spanning;
    counts["floating_components"] = r.separation->floating;
    counts["cut_points"] = r.separation->cuts.size();
  }
  if (r.harvest) counts["apples"] = r.apples.size();
  j["counts"] = counts;
  if (r.segment) j["segmentation"] = trees_json(*r.segment);
  if (r.transform) j["transform"] = to_json(*r.transform);
  if (!r.assignments.empty()) {
    Json a = Json::array();
    for (std::size_t i = 0; i < r.assignments.size(); ++i)
      a.push_back({{"apple_id", i}, {"location", to_json(r.apples[i].location)}, {"tree_id", r.assignments[i].tree},
                   {"nn_distance_m", r.assignments[i].distance}});
    j["assignments"] = a;
  }
  if (r.evaluation) {
    const auto& ev = *r.evaluation;
    Json e;
    for (const auto& [cls, m] : ev.classes) e["segmentation"][to_string(static_cast<SemanticLabel>(cls))] = metrics_json(m);
    if (ev.tree_ids)
      e["tree_separation"] = {{"points", ev.tree_ids->points}, {"correct", ev.tree_ids->correct},
                              {"accuracy", optional_json(ev.tree_ids->accuracy)}};
    if (ev.apple_match) {
      e["apples"] = {{"tp", ev.apple_match->tp}, {"fp", ev.apple_match->fp}, {"fn", ev.apple_match->fn},
                     {"acc", optional_json(ev.acc)}};
      if (!r.assignments_gt_labels.empty()) e["apples"]["acc_gt_labels"] = optional_json(ev.acc_gt_labels);
    }
    j["evaluation"] = e;
  }
  return j;
}

inline std::string fmt_pct(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * *v);
  return buf;
}

inline std::string report_markdown(const PipelineResult& r) {
  std::ostringstream os;
  os << "# Orchard run report\n\n";
  if (r.segment) os << "Trees detected: " << r.segment->tree_set().size() << "\n\n";
  if (r.harvest) os << "Apples detected: " << r.apples.size() << "\n\n";
  if (r.evaluation) {
    const auto& ev = *r.evaluation;
    if (!ev.classes.empty()) {
      os << "| Class | Re | Pr | F1 | IoU | CA |\n|---|---|---|---|---|---|\n";
      for (const auto& [cls, m] : ev.classes)
        os << "| " << to_string(static_cast<SemanticLabel>(cls)) << " | " << fmt_pct(m.recall) << " | "
           << fmt_pct(m.precision) << " | " << fmt_pct(m.f1) << " | " << fmt_pct(m.iou) << " | "
           << fmt_pct(m.accuracy) << " |\n";
      os << "\n";
    }
    if (ev.tree_ids) os << "Tree-id accuracy of trunk and branch points: " << fmt_pct(ev.tree_ids->accuracy) << "\n\n";
    if (ev.apple_match) {
      os << "| TP | FP | FN | ACC |\n|---|---|---|---|\n";
      os << "| " << ev.apple_match->tp << " | " << ev.apple_match->fp << " | " << ev.apple_match->fn << " | "
         << fmt_pct(ev.acc) << " |\n\n";
      if (ev.acc_gt_labels) os << "ACC with ground-truth tree labels: " << fmt_pct(ev.acc_gt_labels) << "\n";
    }
  }
  return os.str();
}

struct RunReport {
  Json json;
  int exit_code = 0;
  std::vector<std::string> artifacts;
};

namespace detail {

inline PipelineInputs load_inputs(const PipelineConfig& c, Stage last) {
  PipelineInputs in;
  if (!c.winter.empty()) in.winter = read_ply(c.winter).cloud;
  const bool harvest_stage = !c.winter_only && static_cast<int>(last) >= static_cast<int>(Stage::Apples);
  if (!c.harvest.empty() && harvest_stage) in.harvest = read_ply(c.harvest).cloud;
  if (c.stage == "run" && !c.winter_only && (c.winter.empty() || c.harvest.empty()))
    throw Error(ErrorCode::ConfigError, "a full run needs --winter and --harvest");
  if (c.calib.size() > 2) throw Error(ErrorCode::ConfigError, "at most two calibration files");
  if (!c.calib.empty()) {
    const auto first = read_calibration(c.calib.front());
    const auto second = c.calib.size() == 2 ? read_calibration(c.calib.back()) : first;
    if (in.winter) {
      in.winter_calib = first;
      in.harvest_calib = second;
    } else {
      in.harvest_calib = first;
    }
  }
  if (!c.gt_labels.empty()) {
    const auto gt = read_ply(c.gt_labels);
    if (!gt.semlabel || !gt.treeid) throw Error(ErrorCode::ParseError, c.gt_labels + ": needs semlabel and treeid");
    in.gt_semlabel = *gt.semlabel;
    in.gt_treeid = *gt.treeid;
  }
  if (!c.gt_apples.empty()) {
    in.gt_apples = read_apples(c.gt_apples);
  }
  return in;
}

inline std::vector<double> to_values(const BinaryImage& img) {
  return {img.pixels.begin(), img.pixels.end()};
}

}  // namespace detail

/// Loads the configured files, runs the pipeline and writes every artifact
/// into c.out. Failures keep the artifacts written so far and are recorded
/// in report.json with a nonzero exit code.
inline RunReport run_pipeline_files(const PipelineConfig& c) {
  namespace fs = std::filesystem;
  RunReport rep;
  const auto t0 = std::chrono::steady_clock::now();
  PipelineResult r;
  std::string status = "ok", error_code, error_msg;
  try {
    fs::create_directories(c.out);
  } catch (const fs::filesystem_error& e) {
    rep.exit_code = 2;
    rep.json = {{"schema", kSchema}, {"status", "error"}, {"error", {{"code", "IoError"}, {"message", e.what()}}}};
    return rep;
  }
  const auto path = [&](const std::string& name) { return (fs::path(c.out) / name).string(); };
  const auto emit = [&](const std::string& name, const std::function<void(const std::string&)>& write) {
    write(path(name));
    rep.artifacts.push_back(name);
  };
  try {
    validate_config(c);
    const Stage last = c.winter_only ? Stage::Separate : parse_stage(c.stage);
    const auto in = detail::load_inputs(c, last);
    r = run_pipeline(in, c);
    if (r.segment) {
      emit("trees.json", [&](const std::string& p) {
        Json j = trees_json(*r.segment);
        j["schema"] = kSchema;
        if (r.separation) {
          std::map<int, std::size_t> points;
          std::map<int, double> top;
          for (std::size_t k = 0; k < r.separation->point_tree.size(); ++k) {
            const int t = r.separation->point_tree[k];
            ++points[t];
            top[t] = std::max(top.count(t) ? top[t] : 0.0, r.segment->trees.cloud.points[k].z());
          }
          for (auto& t : j["trees"]) {
            const int id = t["id"].get<int>();
            t["points"] = points[id];
            t["height_m"] = top[id];
          }
        }
        write_json(p, j);
      });
    }
    if (r.winter) {
      emit("winter_labeled.ply", [&](const std::string& p) {
        PlyWriteOptions opt;
        opt.semlabel = &r.winter_semantic;
        opt.treeid = &r.winter_tree;
        write_ply(p, r.winter->cloud, opt);
      });
    }
    if (r.harvest && static_cast<int>(last) >= static_cast<int>(Stage::Apples)) {
      emit("apples.json", [&](const std::string& p) {
        Json arr = Json::array();
        for (std::size_t i = 0; i < r.apples.size(); ++i) {
          const auto& a = r.apples[i];
          Json e = {{"x", a.location.x()}, {"y", a.location.y()}, {"z", a.location.z()},
                    {"range", to_string(a.range)}, {"voxels", a.voxels}};
          e["tree_id"] = i < r.assignments.size() ? Json(r.assignments[i].tree) : Json(nullptr);
          arr.push_back(e);
        }
        write_json(p, {{"schema", kSchema}, {"apples", arr}});
      });
    }
    if (r.harvest && static_cast<int>(last) >= static_cast<int>(Stage::Apples)) {
      emit("apples_overlay.ply", [&](const std::string& p) {
        write_ply(p, r.harvest->cloud.subset(hue_filter(r.harvest->cloud, c.apples)));
      });
    }
    if (r.transform) emit("transform.json", [&](const std::string& p) { write_json(p, to_json(*r.transform)); });
    if (!r.assignments.empty() || (r.transform && r.apples.empty())) {
      emit("assignments.csv", [&](const std::string& p) {
        std::vector<Vec3> locs;
        for (const auto& a : r.apples) locs.push_back(a.location);
        write_text(p, assignments_csv(locs, r.assignments));
      });
    }
    if (c.emit_debug && r.segment) {
      const auto& s = *r.segment;
      emit("debug_yz_projection.pgm", [&](const std::string& p) {
        write_pgm(p, s.lines.projection.width, s.lines.projection.height, detail::to_values(s.lines.projection));
      });
      const auto& acc = s.lines.accumulator;
      if (!acc.votes.empty())
        emit("debug_hough.pgm", [&](const std::string& p) {
          write_pgm(p, acc.n_rho, acc.n_phi, {acc.votes.begin(), acc.votes.end()});
        });
      const auto h = ground_histogram(s.aligned.points, c.segment);
      if (!h.counts.empty())
        emit("debug_ground.pgm", [&](const std::string& p) { write_pgm(p, h.nj, h.ni, h.counts); });
    }
  } catch (const Error& e) {
    status = "error";
    error_code = to_string(e.code());
    error_msg = e.what();
    rep.exit_code = 1;
    logger().error("{}", e.what());
  } catch (const std::exception& e) {
    status = "error";
    error_code = "Internal";
    error_msg = e.what();
    rep.exit_code = 3;
    logger().error("{}", e.what());
  }

  Json timings = Json::object();
  for (const auto& [name, sec] : r.timings) timings[name] = sec;
  timings["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.json = {{"schema", kSchema}, {"status", status}};
  if (status != "ok") rep.json["error"] = {{"code", error_code}, {"message", error_msg}};
  rep.json["comparable"] = comparable_json(r, c);
  rep.json["timings_s"] = timings;
  try {
    write_text(path("report.md"), report_markdown(r));
    rep.artifacts.push_back("report.md");
    rep.artifacts.push_back("report.json");
    rep.json["artifacts"] = rep.artifacts;
    write_json(path("report.json"), rep.json);
  } catch (const Error& e) {
    logger().error("{}", e.what());
    if (rep.exit_code == 0) rep.exit_code = 1;
  }
  return rep;
}

/// Runs one config file per scene, at most `workers` at a time. Returns the
/// number of failed scenes.
inline int run_batch(const std::vector<PipelineConfig>& scenes, int workers) {
  std::atomic<std::size_t> next{0};
  std::atomic<int> failed{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < scenes.size(); i = next++)
      if (run_pipeline_files(scenes[i]).exit_code != 0) ++failed;
  };
  std::vector<std::thread> pool;
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(scenes.size())));
  for (int k = 0; k < n; ++k) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  return failed.load();
}

/// In-memory equivalent of the files write_synthetic_scene produces.
inline PipelineInputs inputs_from_scene(const SyntheticScene& s, bool with_harvest = true) {
  PipelineInputs in;
  in.winter = s.winter.raw;
  in.winter_calib = s.winter.markers;
  if (with_harvest) {
    in.harvest = s.harvest.raw;
    in.harvest_calib = s.harvest.markers;
    std::vector<ApplePoint> apples;
    for (const auto& a : s.apples) apples.push_back({a.position, a.tree_id});
    in.gt_apples = std::move(apples);
  }
  in.gt_semlabel = s.winter.semlabel;
  in.gt_treeid = s.winter.treeid;
  return in;
}

/// Writes a synthetic scene in the pipeline's input formats and a config
/// that points at them. Returns the config path.
inline std::string write_synthetic_scene(const SyntheticScene& s, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root = fs::absolute(dir);
  const auto p = [&](const char* n) { return (root / n).string(); };
  PlyWriteOptions w;
  w.semlabel = &s.winter.semlabel;
  w.treeid = &s.winter.treeid;
  write_ply(p("winter.ply"), s.winter.raw, w);
  PlyWriteOptions h;
  h.semlabel = &s.harvest.semlabel;
  h.treeid = &s.harvest.treeid;
  write_ply(p("harvest.ply"), s.harvest.raw, h);
  write_json(p("winter_calib.json"), to_json(s.winter.markers));
  write_json(p("harvest_calib.json"), to_json(s.harvest.markers));
  std::vector<ApplePoint> apples;
  for (const auto& a : s.apples) apples.push_back({a.position, a.tree_id});
  write_json(p("gt_apples.json"), apples_to_json(apples));
  std::ostringstream cfg;
  cfg << "# synthetic scene, seed " << s.spec.seed << "\n"
      << "winter = " << p("winter.ply") << "\n"
      << "harvest = " << p("harvest.ply") << "\n"
      << "calib = " << p("winter_calib.json") << "," << p("harvest_calib.json") << "\n"
      << "gt_labels = " << p("winter.ply") << "\n"
      << "gt_apples = " << p("gt_apples.json") << "\n"
      << "out = " << (root / "out").string() << "\n";
  write_text(p("scene.cfg"), cfg.str());
  return p("scene.cfg");
}

}  // namespace orchard
