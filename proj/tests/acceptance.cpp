// Acceptance suite: one PASS/FAIL line per criterion, exit code 1 when any
// criterion fails. Scenes are synthetic with fixed seeds.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "orchard/orchard.hpp"

using namespace orchard;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt3(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3f", v);
  return b;
}

double angle_deg(const Mat3& r) {
  return std::acos(std::clamp((r.trace() - 1) / 2, -1.0, 1.0)) * 180 / std::numbers::pi;
}

// IoU = F1 / (2 - F1) on every segmentation entry of a report
bool report_identity_holds(const Json& comparable, std::size_t& checked) {
  if (!comparable.contains("evaluation") || !comparable["evaluation"].contains("segmentation")) return true;
  for (const auto& item : comparable["evaluation"]["segmentation"].items()) {
    const auto& m = item.value();
    if (!m["f1"].is_number()) continue;
    const double f1 = m["f1"].get<double>(), iou = m["iou"].get<double>();
    ++checked;
    if (std::abs(iou - f1 / (2 - f1)) > 1e-12 || iou > f1 + 1e-15 || f1 > 1.0) return false;
  }
  return true;
}

bool cross_tree_adjacent(const std::vector<SplitPiece>& pieces) {
  std::map<Voxel, int> owner;
  for (const auto& p : pieces)
    for (const auto& v : p.voxels) owner[v] = p.tree;
  for (const auto& [v, t] : owner)
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          const auto it = owner.find(v + Voxel{dx, dy, dz});
          if (it != owner.end() && it->second != t) return true;
        }
  return false;
}

std::vector<int> gt_semantic(const PipelineResult& r, const SyntheticScene& s) {
  std::vector<int> out(r.winter->cloud.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s.winter.semlabel[r.winter->kept[i]];
  return out;
}

struct ClassStats {
  std::vector<double> recall, precision;
  void add(const SegmentationMetrics& m) {
    recall.push_back(m.recall.value_or(0.0));
    precision.push_back(m.precision.value_or(0.0));
  }
  static double mean(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  }
  static double min(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::min_element(v.begin(), v.end()); }
};

// criterion 1 scenes feed criterion 7 as well
struct TrunkRuns {
  std::size_t exact = 0, scenes = 0;
  std::string mismatches;
  ClassStats wire, pole;
  std::vector<std::vector<SplitPiece>> separations;
  std::size_t spanning = 0;
};

TrunkRuns run_trunk_scenes() {
  TrunkRuns out;
  for (std::uint64_t seed = 101; seed <= 120; ++seed) {
    SceneSpec spec;
    spec.seed = seed;
    spec.n_trees = 4 + static_cast<int>(seed % 2);
    const auto s = generate_scene(spec);
    PipelineConfig c;
    c.seed = seed;
    c.stage = "separate";
    ++out.scenes;
    try {
      const auto r = run_pipeline(inputs_from_scene(s, false), c);
      const auto n = r.segment->tree_set().size();
      if (n == static_cast<std::size_t>(spec.n_trees)) ++out.exact;
      else out.mismatches += " seed " + std::to_string(seed) + ": " + std::to_string(n) + "/" + std::to_string(spec.n_trees);
      const auto gt = gt_semantic(r, s);
      out.wire.add(segmentation_metrics(r.winter_semantic, gt, gt::kWire));
      out.pole.add(segmentation_metrics(r.winter_semantic, gt, gt::kPole));
      out.separations.push_back(r.separation->labeled);
      out.spanning += r.separation->spanning;
    } catch (const Error& e) {
      out.mismatches += " seed " + std::to_string(seed) + ": " + e.what();
    }
  }
  return out;
}

Outcome million_point_runtime() {
  SceneSpec spec;
  spec.seed = 150;
  spec.point_spacing = 0.0027;
  const auto s = generate_scene(spec);
  const auto dir = fs::temp_directory_path() / "orchard_acceptance_1m";
  PipelineConfig c;
  apply_config_file(c, write_synthetic_scene(s, dir.string()));
  c.seed = spec.seed;
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = run_pipeline_files(c);
  const double t = seconds_since(t0);
  const bool ok = rep.exit_code == 0 && rep.json["comparable"]["counts"]["trees"] == spec.n_trees;
  return {ok && t <= 60.0, std::to_string(s.winter.raw.size()) + " winter points, full run from files in " +
                               fmt3(t) + " s" + (ok ? "" : " (run failed or wrong tree count)")};
}

struct AssignmentRuns {
  std::vector<double> acc, acc_gt;
  std::size_t failed = 0;
  std::size_t identity_checked = 0;
  bool identity_ok = true;
  std::vector<std::vector<SplitPiece>> separations;
  std::size_t spanning = 0;
  std::string notes;
};

AssignmentRuns run_assignment_scenes() {
  AssignmentRuns out;
  for (std::uint64_t seed = 201; seed <= 220; ++seed) {
    SceneSpec spec;
    spec.seed = seed;
    spec.noise = 0.005;
    spec.droop = 0.05;
    const auto s = generate_scene(spec);
    PipelineConfig c;
    c.seed = seed;
    try {
      const auto r = run_pipeline(inputs_from_scene(s), c);
      const auto& ev = *r.evaluation;
      if (!ev.acc || !ev.acc_gt_labels) {
        ++out.failed;
        out.notes += " seed " + std::to_string(seed) + ": no matched apple";
        continue;
      }
      out.acc.push_back(*ev.acc);
      out.acc_gt.push_back(*ev.acc_gt_labels);
      out.identity_ok &= report_identity_holds(comparable_json(r, c), out.identity_checked);
      out.separations.push_back(r.separation->labeled);
      out.spanning += r.separation->spanning;
    } catch (const Error& e) {
      ++out.failed;
      out.notes += " seed " + std::to_string(seed) + ": " + e.what();
    }
  }
  return out;
}

Outcome icp_recovery() {
  SceneSpec spec;
  spec.seed = 301;
  spec.pole = false;
  const auto s = generate_scene(spec);
  const auto& src = s.winter.world.points;
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  int ok = 0;
  double worst_rot = 0, worst_tr = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 axis = Vec3(n(rng), n(rng), n(rng)).normalized();
    const Vec3 dir = Vec3(n(rng), n(rng), n(rng)).normalized();
    RigidTransform truth;
    truth.rotation = rotation_about(axis, deg2rad(10.0 * u(rng)));
    truth.translation = 0.20 * u(rng) * dir;
    std::vector<Vec3> dst;
    dst.reserve(src.size());
    for (const auto& p : src) dst.push_back(truth.apply(p) + 0.005 * Vec3(n(rng), n(rng), n(rng)));
    try {
      const auto t = icp_align(src, dst);
      const double rot = angle_deg(t.rotation * truth.rotation.transpose());
      const double tr = (t.translation - truth.translation).norm();
      worst_rot = std::max(worst_rot, rot);
      worst_tr = std::max(worst_tr, tr);
      ok += rot <= 0.5 && tr <= 0.01;
    } catch (const Error&) {
    }
  }
  return {ok >= 48, std::to_string(ok) + "/50 within 0.5 deg and 1 cm (worst " + fmt3(worst_rot) + " deg, " +
                        fmt3(100 * worst_tr) + " cm)"};
}

std::vector<Voxel> random_blob(std::mt19937_64& rng, int n, int dim) {
  std::uniform_int_distribution<int> uc(0, dim - 1), ur(1, 4);
  std::set<Voxel> s;
  for (int b = 0; b < n; ++b) {
    const Voxel c{uc(rng), uc(rng), uc(rng)};
    const int r = ur(rng);
    for (int dx = -r; dx <= r; ++dx)
      for (int dy = -r; dy <= r; ++dy)
        for (int dz = -r; dz <= r; ++dz) {
          const Voxel v{c.x + dx, c.y + dy, c.z + dz};
          if (dx * dx + dy * dy + dz * dz <= r * r && std::min({v.x, v.y, v.z}) >= 0 && std::max({v.x, v.y, v.z}) < dim)
            s.insert(v);
        }
  }
  return {s.begin(), s.end()};
}

Outcome oracle_suites() {
  std::mt19937_64 rng(5150);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::string> failed;
  std::vector<std::string> summary;
  auto suite = [&](const std::string& name, int cases, int agree) {
    summary.push_back(name + " " + std::to_string(agree) + "/" + std::to_string(cases));
    if (cases < 100 || agree != cases) failed.push_back(name);
  };

  int agree = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<Vec3> pts(300);
    for (auto& p : pts) p = Vec3(u(rng), u(rng), 0.3 * u(rng));
    const auto g = voxelize(pts, 0.01 + 0.02 * u(rng));
    const auto want = oracle::rebin(pts, g.geometry().edge);
    agree += g.geometry().dims == want.dims &&
             std::vector<std::uint8_t>(g.occupancy().begin(), g.occupancy().end()) == want.occupancy;
  }
  suite("voxelize", 100, agree);

  agree = 0;
  for (int t = 0; t < 100; ++t) {
    std::uniform_int_distribution<int> c(0, 11);
    std::set<Voxel> s;
    for (int i = 0; i < 150; ++i) s.insert({c(rng), c(rng), c(rng)});
    const std::vector<Voxel> v(s.begin(), s.end());
    std::set<std::set<Voxel>> a, b;
    for (const auto& comp : connected_components(v)) a.insert({comp.begin(), comp.end()});
    for (const auto& comp : oracle::union_find_partition(v)) b.insert({comp.begin(), comp.end()});
    agree += a == b;
  }
  suite("components", 100, agree);

  int cases = 0;
  agree = 0;
  while (cases < 100) {
    std::uniform_int_distribution<int> c(0, 9);
    std::set<Voxel> s;
    for (int i = 0; i < 350; ++i) s.insert({c(rng), c(rng), c(rng)});
    const std::vector<Voxel> v(s.begin(), s.end());
    std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
    const Voxel a = v[pick(rng)], b = v[pick(rng)];
    const int d = oracle::dijkstra_hops(v, a, b);
    const auto p = shortest_path(v, a, b);
    ++cases;
    agree += d < 0 ? !p.has_value() : (p && static_cast<int>(p->size()) - 1 == d);
  }
  suite("bfs_hops", cases, agree);

  agree = 0;
  for (int t = 0; t < 100; ++t) {
    const Vec3 p1(4 * u(rng) - 2, 4 * u(rng) - 2, 4 * u(rng) - 2);
    const Vec3 p2 = p1 + Vec3(u(rng) + 0.1, 4 * u(rng) - 2, 4 * u(rng) - 2);
    const Vec3 p(4 * u(rng) - 2, 4 * u(rng) - 2, 4 * u(rng) - 2);
    agree += std::abs(point_line_distance(p, Line3::through(p1, p2)) -
                      oracle::line_distance_by_minimization(p, p1, p2)) <= 1e-9;
  }
  suite("point_line", 100, agree);

  agree = 0;
  {
    std::vector<Vec3> pts(5000);
    for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
    const KdTree index(pts);
    for (int t = 0; t < 100; ++t) {
      const Vec3 q(u(rng), u(rng), u(rng));
      const auto got = index.nearest(q);
      const auto want = oracle::linear_nearest(pts, q);
      agree += got.index == want.first && got.distance == want.second;
    }
  }
  suite("nearest", 100, agree);

  agree = 0;
  {
    std::uniform_int_distribution<int> c(0, 255);
    for (int t = 0; t < 10000; ++t) {
      const Rgb col{static_cast<std::uint8_t>(c(rng)), static_cast<std::uint8_t>(c(rng)),
                    static_cast<std::uint8_t>(c(rng))};
      const auto cls = classify_hue(col);
      const int code = cls == HueRange::Red ? 1 : cls == HueRange::GreenYellow ? 2 : 0;
      agree += code == oracle::hue_class_rational(col.r, col.g, col.b, {3, 20}, {1, 5}, {1, 20}, {19, 20});
    }
  }
  suite("hue", 10000, agree);

  // exhaustive optimal matching on separated truth, where it coincides with
  // the mutual-nearest rule, and the rule itself on arbitrary layouts
  agree = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<Vec3> gt, det;
    for (int k = 0; k < 5; ++k) gt.emplace_back(0, 0.25 * k, 1.0);
    const int nd = static_cast<int>(9 * u(rng));
    for (int i = 0; i < nd; ++i) {
      const Vec3 d(u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5);
      det.push_back(gt[i % 5] + 0.12 * u(rng) * d.normalized());
    }
    agree += match_apples(det, gt).pairs == oracle::exhaustive_matching(det, gt, 0.10);
  }
  suite("matching_exhaustive", 100, agree);
  agree = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<Vec3> gt, det;
    const int nd = static_cast<int>(12 * u(rng)), ng = static_cast<int>(12 * u(rng));
    for (int i = 0; i < nd; ++i) det.emplace_back(0.4 * u(rng), 0.8 * u(rng), 0.4 * u(rng));
    for (int i = 0; i < ng; ++i) gt.emplace_back(0.4 * u(rng), 0.8 * u(rng), 0.4 * u(rng));
    agree += match_apples(det, gt).pairs == oracle::mutual_nearest_scan(det, gt, 0.10);
  }
  suite("matching_rule", 100, agree);

  std::string detail;
  for (const auto& s : summary) detail += (detail.empty() ? "" : ", ") + s;
  if (!failed.empty()) detail += " | failing:" + std::accumulate(failed.begin(), failed.end(), std::string{},
                                                                [](std::string a, const std::string& b) { return a + " " + b; });
  return {failed.empty(), detail};
}

Outcome topology(const std::vector<std::vector<SplitPiece>>& scene_pieces, std::size_t spanning) {
  std::mt19937_64 rng(77);
  int preserved = 0;
  for (int t = 0; t < 50; ++t) {
    const auto blob = random_blob(rng, 1 + t % 6, 20);
    GridGeometry geo;
    geo.dims = {20, 20, 20};
    VoxelGrid g(geo);
    for (const auto& v : blob) g.set(v);
    const auto s = skeletonize(g);
    const std::set<Voxel> in(blob.begin(), blob.end());
    const bool subset = std::all_of(s.voxels.begin(), s.voxels.end(), [&](const Voxel& v) { return in.count(v) > 0; });
    preserved += subset && oracle::union_find_components(s.voxels) == oracle::union_find_components(blob);
  }
  std::size_t clean = 0;
  for (const auto& pieces : scene_pieces) clean += !cross_tree_adjacent(pieces);
  return {preserved == 50 && clean == scene_pieces.size(),
          "skeleton topology " + std::to_string(preserved) + "/50 blobs, no cross-tree adjacency in " +
              std::to_string(clean) + "/" + std::to_string(scene_pieces.size()) + " separated scenes (" +
              std::to_string(spanning) + " spanning components split)"};
}

Outcome determinism() {
  SceneSpec spec;
  spec.seed = 401;
  const auto dir = fs::temp_directory_path() / "orchard_acceptance_det";
  const auto cfg_path = write_synthetic_scene(generate_scene(spec), dir.string());
  std::string dumps[2];
  int codes[2];
  for (int k = 0; k < 2; ++k) {
    PipelineConfig c;
    apply_config_file(c, cfg_path);
    c.seed = spec.seed;
    c.out = (dir / ("out" + std::to_string(k))).string();
    const auto rep = run_pipeline_files(c);
    codes[k] = rep.exit_code;
    dumps[k] = read_json((fs::path(c.out) / "report.json").string())["comparable"].dump();
  }
  const bool same = dumps[0] == dumps[1];
  return {same && codes[0] == 0 && codes[1] == 0,
          std::string(same ? "identical" : "different") + " comparable sections (" + std::to_string(dumps[0].size()) +
              " bytes), exit codes " + std::to_string(codes[0]) + "," + std::to_string(codes[1])};
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, Outcome>> results;
  const auto t0 = std::chrono::steady_clock::now();

  const auto trunks = run_trunk_scenes();
  const auto big = million_point_runtime();
  results.emplace_back("1 trunk count", Outcome{trunks.exact == 20 && trunks.scenes == 20 && big.pass,
                                                std::to_string(trunks.exact) + "/" + std::to_string(trunks.scenes) +
                                                    " scenes exact" + trunks.mismatches + "; " + big.detail});

  const auto asg = run_assignment_scenes();
  {
    const double acc = ClassStats::mean(asg.acc), acc_gt = ClassStats::mean(asg.acc_gt);
    const double drop = acc_gt - acc;
    const bool pass = asg.acc.size() == 20 && acc >= 0.95 && drop <= 0.03;
    results.emplace_back("2 apple assignment",
                         Outcome{pass, "mean ACC " + fmt3(acc) + " over " + std::to_string(asg.acc.size()) +
                                           " scenes, with truth tree labels " + fmt3(acc_gt) + ", drop " +
                                           fmt3(100 * drop) + " pp, min ACC " + fmt3(ClassStats::min(asg.acc)) +
                                           asg.notes});
  }

  {
    const auto f1 = f1_score(0.8498, 0.8161);
    const auto iou = iou_from_f1(f1);
    const bool formula = std::abs(100 * *f1 - 83.26) <= 0.01 && std::abs(100 * *iou - 71.32) <= 0.01;
    results.emplace_back("3 metric formulas",
                         Outcome{formula && asg.identity_ok && asg.identity_checked > 0,
                                 "F1 " + fmt3(100 * *f1) + ", IoU " + fmt3(100 * *iou) + ", IoU identity on " +
                                     std::to_string(asg.identity_checked) + " report entries " +
                                     (asg.identity_ok ? "holds" : "violated")});
  }

  results.emplace_back("4 icp recovery", icp_recovery());
  results.emplace_back("5 oracle suites", oracle_suites());

  auto pieces = trunks.separations;
  pieces.insert(pieces.end(), asg.separations.begin(), asg.separations.end());
  results.emplace_back("6 topology", topology(pieces, trunks.spanning + asg.spanning));

  {
    const double wr = ClassStats::mean(trunks.wire.recall), wp = ClassStats::mean(trunks.wire.precision);
    const double pr = ClassStats::mean(trunks.pole.recall), pp = ClassStats::mean(trunks.pole.precision);
    const bool pass = trunks.wire.recall.size() == 20 && wr >= 0.85 && wp >= 0.90 && pr >= 0.90 && pp >= 0.90;
    results.emplace_back("7 wire and pole", Outcome{pass, "wire Re " + fmt3(wr) + " Pr " + fmt3(wp) + ", pole Re " +
                                                              fmt3(pr) + " Pr " + fmt3(pp) + " (mean of " +
                                                              std::to_string(trunks.wire.recall.size()) +
                                                              " scenes; min wire Re " +
                                                              fmt3(ClassStats::min(trunks.wire.recall)) +
                                                              ", min pole Re " +
                                                              fmt3(ClassStats::min(trunks.pole.recall)) + ")"});
  }

  results.emplace_back("8 determinism", determinism());

  bool all = true;
  for (const auto& [name, o] : results) {
    std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    all &= o.pass;
  }
  std::printf("acceptance %s in %.1f s\n", all ? "passed" : "FAILED", seconds_since(t0));
  return all ? 0 : 1;
}
