#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "orchard/orchard.hpp"
#include "test_helpers.hpp"

using namespace orchard;
namespace fs = std::filesystem;

namespace {

bool same_cloud(const ColorPointCloud& a, const ColorPointCloud& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.points[i] != b.points[i] || !(a.colors[i] == b.colors[i])) return false;
  return true;
}

std::size_t count_sem(const SeasonCloud& s, int code) {
  return static_cast<std::size_t>(std::count(s.semlabel.begin(), s.semlabel.end(), code));
}

const SyntheticScene& scene(std::uint64_t seed) {
  static std::map<std::uint64_t, SyntheticScene> cache;
  auto it = cache.find(seed);
  if (it == cache.end()) {
    SceneSpec spec;
    spec.seed = seed;
    it = cache.emplace(seed, generate_scene(spec)).first;
  }
  return it->second;
}

/// Scene files plus a config pointing at them, written once per seed.
PipelineConfig scene_config(std::uint64_t seed) {
  const auto dir = fs::temp_directory_path() / ("orchard_test_scene_" + std::to_string(seed));
  const auto cfg = dir / "scene.cfg";
  if (!fs::exists(cfg)) write_synthetic_scene(scene(seed), dir.string());
  PipelineConfig c;
  apply_config_file(c, cfg.string());
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Synth, Deterministic) {
  SceneSpec spec;
  spec.seed = 3;
  const auto a = generate_scene(spec), b = generate_scene(spec);
  EXPECT_TRUE(same_cloud(a.winter.raw, b.winter.raw));
  EXPECT_TRUE(same_cloud(a.harvest.raw, b.harvest.raw));
  EXPECT_EQ(a.winter.semlabel, b.winter.semlabel);
  EXPECT_EQ(a.apples.size(), b.apples.size());
  spec.seed = 4;
  EXPECT_FALSE(same_cloud(a.winter.raw, generate_scene(spec).winter.raw));
}

TEST(Synth, TreeIdsAndBases) {
  const auto& s = scene(1);
  std::set<int> ids;
  for (std::size_t i = 0; i < s.winter.treeid.size(); ++i)
    if (s.winter.semlabel[i] == gt::kTrunk || s.winter.semlabel[i] == gt::kBranch) ids.insert(s.winter.treeid[i]);
  EXPECT_EQ(ids, (std::set<int>{1, 2, 3, 4, 5}));
  ASSERT_EQ(s.tree_y.size(), 5u);
  for (int j = 1; j <= 5; ++j) {
    double y = 0;
    int n = 0;
    for (std::size_t i = 0; i < s.winter.world.size(); ++i) {
      const auto& p = s.winter.world.points[i];
      if (s.winter.semlabel[i] == gt::kTrunk && s.winter.treeid[i] == j && p.z() < 0.05) {
        y += p.y();
        ++n;
      }
    }
    ASSERT_GT(n, 0);
    EXPECT_NEAR(y / n, s.tree_y[j - 1], 0.02) << j;
  }
  for (std::size_t j = 1; j < s.tree_y.size(); ++j) EXPECT_GE(s.tree_y[j] - s.tree_y[j - 1], s.spec.min_spacing);
}

TEST(Synth, NoApples) {
  SceneSpec spec;
  spec.apples_per_tree = 0;
  const auto s = generate_scene(spec);
  EXPECT_TRUE(s.apples.empty());
  EXPECT_EQ(count_sem(s.harvest, gt::kApple), 0u);
}

TEST(Synth, EveryEnabledClassPresent) {
  const auto& s = scene(1);
  for (int code : {gt::kTrunk, gt::kBranch, gt::kWire, gt::kPole}) EXPECT_GT(count_sem(s.winter, code), 0u) << code;
  for (int code : {gt::kApple, gt::kLeaf}) {
    EXPECT_EQ(count_sem(s.winter, code), 0u);
    EXPECT_GT(count_sem(s.harvest, code), 0u);
  }
  SceneSpec spec;
  spec.pole = false;
  EXPECT_EQ(count_sem(generate_scene(spec).winter, gt::kPole), 0u);
}

TEST(Synth, ApplesCarryGeneratingTree) {
  const auto& s = scene(2);
  ASSERT_FALSE(s.apples.empty());
  for (const auto& a : s.apples) {
    EXPECT_GE(a.tree_id, 1);
    EXPECT_LE(a.tree_id, s.spec.n_trees);
    EXPECT_GE(a.radius, 0.03);
    EXPECT_LE(a.radius, 0.04);
  }
  // every apple point is in a detection hue range, every structure point outside
  for (std::size_t i = 0; i < s.harvest.world.size(); ++i) {
    const int sem = s.harvest.semlabel[i];
    const auto cls = classify_hue(s.harvest.world.colors[i]);
    if (sem == gt::kApple) EXPECT_NE(cls, HueRange::None);
    if (sem == gt::kTrunk || sem == gt::kBranch) EXPECT_EQ(cls, HueRange::None);
  }
}

TEST(Synth, BranchHuesInBand) {
  const auto& s = scene(1);
  for (std::size_t i = 0; i < s.winter.world.size(); ++i) {
    const int sem = s.winter.semlabel[i];
    if (sem != gt::kTrunk && sem != gt::kBranch) continue;
    const double h = rgb_to_hsv(s.winter.world.colors[i]).h;
    EXPECT_GE(h, 0.065);
    EXPECT_LE(h, 0.125);
  }
}

TEST(Synth, DensityWithinTwentyPercent) {
  const auto& s = scene(1);
  const auto& sp = s.spec;
  const double h = sp.point_spacing, pi = std::numbers::pi;
  // trunks fill their cross-section at one point per h^3
  double trunk = 0;
  for (double H : s.tree_height) {
    const double rb = sp.trunk_radius_base, rt = sp.trunk_radius_top;
    trunk += H * pi * (rb * rb + rb * rt + rt * rt) / 3 / (h * h * h);
  }
  EXPECT_NEAR(double(count_sem(s.winter, gt::kTrunk)) / trunk, 1.0, 0.2);
  // wires are thinner than h: six points per h of length
  const double row = s.tree_y.back() - s.tree_y.front() + 2 * sp.row_padding;
  const double wire = double(sp.wire_heights.size()) * 6 * row / h + pi * sp.pipe_radius * sp.pipe_radius * row / (h * h * h);
  EXPECT_NEAR(double(count_sem(s.winter, gt::kWire)) / wire, 1.0, 0.2);
  // the pole shell at one point per h^2 over its visible arc
  const double pole = sp.pole_arc_deg * pi / 180 * sp.pole_radius * sp.pole_height / (h * h);
  EXPECT_NEAR(double(count_sem(s.winter, gt::kPole)) / pole, 1.0, 0.2);
}

TEST(Synth, HarvestDiffersByDeclaredMotionOnly) {
  const auto& s = scene(1);
  const double bound = s.spec.droop + 10 * s.spec.noise;
  for (std::size_t i = 0; i < s.shared_points; i += 7) {
    ASSERT_EQ(s.winter.semlabel[i], s.harvest.semlabel[i]);
    const Vec3 undo = s.harvest_rotation.transpose() * (s.harvest.world.points[i] - s.harvest_translation);
    EXPECT_LT((undo - s.winter.world.points[i]).norm(), bound) << i;
  }
}

TEST(Synth, InvalidSpec) {
  SceneSpec spec;
  spec.n_trees = 0;
  EXPECT_ERROR_CODE(generate_scene(spec), ErrorCode::SpecError);
  spec = {};
  spec.noise = -1;
  EXPECT_ERROR_CODE(generate_scene(spec), ErrorCode::SpecError);
  spec = {};
  spec.wire_heights.clear();
  EXPECT_ERROR_CODE(generate_scene(spec), ErrorCode::SpecError);
}

TEST(Pipeline, StageNames) {
  EXPECT_EQ(parse_stage("segment"), Stage::Segment);
  EXPECT_EQ(parse_stage("run"), Stage::Eval);
  EXPECT_ERROR_CODE(parse_stage("paint"), ErrorCode::ConfigError);
}

TEST(Pipeline, EndToEndFromFiles) {
  auto c = scene_config(1);
  c.out = scratch_dir("e2e").string();
  c.emit_debug = true;
  const auto rep = run_pipeline_files(c);
  ASSERT_EQ(rep.exit_code, 0) << rep.json.dump(2);
  EXPECT_EQ(rep.json["status"], "ok");
  EXPECT_EQ(rep.json["schema"], "v1");
  const auto& cmp = rep.json["comparable"];
  EXPECT_EQ(cmp["counts"]["trees"], 5);
  ASSERT_TRUE(cmp["evaluation"]["apples"]["acc"].is_number());
  EXPECT_GE(cmp["evaluation"]["apples"]["acc"].get<double>(), 0.9);
  for (const auto& a : rep.artifacts) EXPECT_TRUE(fs::exists(fs::path(c.out) / a)) << a;
  for (const char* name : {"trees.json", "winter_labeled.ply", "apples.json", "apples_overlay.ply", "transform.json",
                           "assignments.csv", "report.md", "report.json", "debug_yz_projection.pgm"})
    EXPECT_TRUE(std::count(rep.artifacts.begin(), rep.artifacts.end(), name)) << name;
  // every emitted report obeys the IoU identity
  for (const auto& [cls, m] : cmp["evaluation"]["segmentation"].items()) {
    if (!m["f1"].is_number()) continue;
    const double f1 = m["f1"], iou = m["iou"];
    EXPECT_NEAR(iou, f1 / (2 - f1), 1e-12) << cls;
    EXPECT_LE(iou, f1);
  }
  const auto labeled = read_ply((fs::path(c.out) / "winter_labeled.ply").string());
  ASSERT_TRUE(labeled.treeid);
  std::set<int> ids(labeled.treeid->begin(), labeled.treeid->end());
  EXPECT_EQ(ids, (std::set<int>{0, 1, 2, 3, 4, 5}));
  const auto tr = transform_from_json(read_json((fs::path(c.out) / "transform.json").string()));
  EXPECT_TRUE(is_rotation(tr.rotation, 1e-6));
}

TEST(Pipeline, ComparableSectionIsReproducible) {
  auto c = scene_config(2);
  c.out = scratch_dir("repro_a").string();
  const auto a = run_pipeline_files(c);
  c.out = scratch_dir("repro_b").string();
  const auto b = run_pipeline_files(c);
  ASSERT_EQ(a.exit_code, 0);
  EXPECT_EQ(a.json["comparable"].dump(), b.json["comparable"].dump());
  std::ifstream fa(fs::path(c.out) / "report.json");
  EXPECT_TRUE(fa.good());
}

TEST(Pipeline, MissingHarvestIsAnIoError) {
  auto c = scene_config(1);
  c.harvest = "/nonexistent/harvest.ply";
  c.out = scratch_dir("missing").string();
  const auto rep = run_pipeline_files(c);
  EXPECT_NE(rep.exit_code, 0);
  EXPECT_EQ(rep.json["status"], "error");
  EXPECT_EQ(rep.json["error"]["code"], "IoError");
  EXPECT_TRUE(fs::exists(fs::path(c.out) / "report.json"));
}

TEST(Pipeline, WinterOnlyStopsAfterSeparation) {
  auto c = scene_config(1);
  c.winter_only = true;
  c.out = scratch_dir("winter_only").string();
  const auto rep = run_pipeline_files(c);
  ASSERT_EQ(rep.exit_code, 0) << rep.json.dump(2);
  EXPECT_TRUE(fs::exists(fs::path(c.out) / "winter_labeled.ply"));
  EXPECT_TRUE(fs::exists(fs::path(c.out) / "trees.json"));
  EXPECT_FALSE(fs::exists(fs::path(c.out) / "apples.json"));
  EXPECT_FALSE(fs::exists(fs::path(c.out) / "transform.json"));
  EXPECT_EQ(rep.json["comparable"]["last_stage"], "separate");
  const auto trees = read_json((fs::path(c.out) / "trees.json").string());
  EXPECT_EQ(trees["trees"].size(), 5u);
  EXPECT_TRUE(trees["trees"][0].contains("points"));
}

TEST(Pipeline, StageGating) {
  const auto in = inputs_from_scene(scene(1));
  PipelineConfig c;
  c.stage = "segment";
  const auto r = run_pipeline(in, c);
  EXPECT_TRUE(r.segment);
  EXPECT_FALSE(r.separation);
  EXPECT_TRUE(r.apples.empty());
  EXPECT_FALSE(r.transform);
  EXPECT_FALSE(r.evaluation);
}

TEST(Pipeline, TruthTreeLabelsNeedGroundTruth) {
  auto in = inputs_from_scene(scene(1));
  in.gt_semlabel.reset();
  in.gt_treeid.reset();
  PipelineConfig c;
  c.tree_labels = "truth";
  EXPECT_ERROR_CODE(run_pipeline(in, c), ErrorCode::ConfigError);
}

TEST(Pipeline, BadConfigReported) {
  auto c = scene_config(1);
  c.out = scratch_dir("bad_cfg").string();
  c.segment.voxel_edge = -1;
  const auto rep = run_pipeline_files(c);
  EXPECT_EQ(rep.exit_code, 1);
  EXPECT_EQ(rep.json["error"]["code"], "ConfigError");
}

TEST(Pipeline, BatchRunsEveryScene) {
  auto a = scene_config(1), b = scene_config(1);
  a.winter_only = b.winter_only = true;
  a.out = scratch_dir("batch_a").string();
  b.out = scratch_dir("batch_b").string();
  b.winter = "/nonexistent.ply";
  EXPECT_EQ(run_batch({a, b}, 2), 1);
  EXPECT_TRUE(fs::exists(fs::path(a.out) / "report.json"));
  EXPECT_TRUE(fs::exists(fs::path(b.out) / "report.json"));
}
