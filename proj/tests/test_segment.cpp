#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "orchard/connectivity.hpp"
#include "orchard/segment.hpp"
#include "orchard/synth.hpp"
#include "scene_cache.hpp"
#include "test_helpers.hpp"

using namespace orchard;

namespace {

std::mt19937_64& rng() {
  static std::mt19937_64 r(77);
  return r;
}

double uni(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng()); }

void add_tube(std::vector<Vec3>& out, const Vec3& a, const Vec3& b, double r, double h = 0.004) {
  const Vec3 d = (b - a).normalized();
  const Vec3 u = d.unitOrthogonal(), v = d.cross(u);
  const double len = (b - a).norm();
  for (double s = 0; s <= len; s += h) {
    const int n = std::max(6, static_cast<int>(2 * std::numbers::pi * r / h));
    for (int k = 0; k < n; ++k) {
      const double th = 2 * std::numbers::pi * (k + uni(0, 1)) / n;
      out.push_back(a + s * d + r * (std::cos(th) * u + std::sin(th) * v));
    }
  }
}

std::vector<Vec3> shell_cylinder(double radius, double height, double y, double h = 0.004) {
  std::vector<Vec3> out;
  add_tube(out, Vec3(0, y, 0), Vec3(0, y, height), radius, h);
  return out;
}

std::vector<double> heights_of(const SegmentResult& s) { return s.frame().heights; }

}  // namespace

TEST(MergeTrellisLines, HandExample) {
  const auto g = merge_trellis_lines(std::vector<double>{1.00, 0.52, 0.50}, 0.30);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_NEAR(g[0], 0.51, 1e-12);
  EXPECT_NEAR(g[1], 1.00, 1e-12);
}

TEST(MergeTrellisLines, SingleLine) {
  const auto g = merge_trellis_lines(std::vector<double>{1.7}, 0.30);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0], 1.7);
}

TEST(MergeTrellisLines, RunningMeanJoin) {
  // 0.0 and 0.28 merge (mean 0.14); 0.43 is within 0.30 of 0.14 and joins too
  const auto g = merge_trellis_lines(std::vector<double>{0.0, 0.28, 0.43, 0.9}, 0.30);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_NEAR(g[0], (0.0 + 0.28 + 0.43) / 3, 1e-12);
  EXPECT_NEAR(g[1], 0.9, 1e-12);
}

TEST(HorizontalLines, SyntheticWireHeights) {
  SceneSpec spec;
  spec.seed = 11;
  spec.water_pipe = false;
  const auto s = generate_scene(spec);
  const auto cal = apply_calibration(s.winter.raw, derive_calibration(s.winter.markers), {});
  const SegmentParams p;
  const auto lines = detect_horizontal_lines(cal.cloud.points, p, 1);
  EXPECT_GE(lines.lines.size(), 4u);
  const auto est = estimate_trellis_frame(cal.cloud.points, lines.lines, p, 2);
  const auto h = merge_trellis_lines(lines.lines, est.frame, p.wire_merge);
  ASSERT_EQ(h.size(), 4u);
  for (std::size_t q = 0; q < 4; ++q) EXPECT_NEAR(h[q], spec.wire_heights[q], 0.02) << q;
}

TEST(HorizontalLines, PipeJoinsLowestLevel) {
  const auto& r = scene_run(1);
  const auto h = heights_of(r.seg);
  const auto& spec = r.scene.spec;
  ASSERT_EQ(h.size(), 4u);
  EXPECT_GT(h[0], spec.wire_heights[0] - spec.pipe_drop - 0.01);
  EXPECT_LT(h[0], spec.wire_heights[0] + 0.01);
  for (std::size_t q = 1; q < 4; ++q) EXPECT_NEAR(h[q], spec.wire_heights[q], 0.02) << q;
}

TEST(HorizontalLines, RotatedInYZ) {
  const auto& r = scene_run(2);
  const Mat3 rot = rotation_about(Vec3::UnitX(), deg2rad(5));
  std::vector<Vec3> pts;
  for (const auto& p : r.winter.cloud.points) pts.push_back(rot * p);
  const auto lines = detect_horizontal_lines(pts, {}, 3);
  EXPECT_GE(lines.lines.size(), 4u);
  for (const auto& l : lines.lines) {
    const Vec3 d = l.direction();
    EXPECT_LT(std::abs(std::atan2(d.z(), d.y())) * 180 / std::numbers::pi, 10.0);
  }
}

TEST(HorizontalLines, NoWiresThrows) {
  std::vector<Vec3> tree;
  add_tube(tree, Vec3(0, 0, 0), Vec3(0, 0, 2), 0.02);
  add_tube(tree, Vec3(0, 0, 1), Vec3(0.3, 0.1, 1.6), 0.01);
  EXPECT_ERROR_CODE(detect_horizontal_lines(tree, {}, 1), ErrorCode::NoTrellisFound);
}

TEST(TrellisFrame, WiresOnPlaneGiveIdentity) {
  std::vector<Vec3> pts;
  for (double z : {0.5, 1.0, 1.5}) add_tube(pts, Vec3(0, -1.5, z), Vec3(0, 1.5, z), 0.002);
  std::vector<Line3> lines;
  for (double z : {0.5, 1.0, 1.5}) lines.push_back(Line3::through(Vec3(0, -1.5, z), Vec3(0, 1.5, z)));
  const auto est = estimate_trellis_frame(pts, lines, {}, 1);
  EXPECT_NEAR(std::abs(est.frame.plane.normal.x()), 1.0, 1e-6);
  EXPECT_LT((est.frame.rotation - Mat3::Identity()).norm(), 1e-3);
}

TEST(TrellisFrame, RecoversKnownRotation) {
  const Mat3 r0 = rotation_about(Vec3(0.2, 0.1, 1).normalized(), deg2rad(7));
  std::vector<Vec3> pts;
  std::vector<Line3> lines;
  for (double z : {0.5, 1.0, 1.5, 2.0}) {
    std::vector<Vec3> w;
    add_tube(w, Vec3(0, -1.5, z), Vec3(0, 1.5, z), 0.002);
    for (auto& p : w) pts.push_back(r0 * p);
    lines.push_back(Line3::through(r0 * Vec3(0, -1.5, z), r0 * Vec3(0, 1.5, z)));
  }
  add_tube(pts, r0 * Vec3(0, 0.3, 0), r0 * Vec3(0, 0.3, 2), 0.02);
  const auto est = estimate_trellis_frame(pts, lines, {}, 5);
  const Mat3 err = est.frame.rotation * r0;
  const double ang = std::acos(std::clamp((err.trace() - 1) / 2, -1.0, 1.0)) * 180 / std::numbers::pi;
  EXPECT_LT(ang, 0.5);
  EXPECT_TRUE(is_rotation(est.frame.rotation, 1e-9));
}

TEST(TrellisFrame, TubeMatchesLinearScan) {
  for (int t = 0; t < 100; ++t) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 300; ++i) pts.emplace_back(uni(-0.3, 0.3), uni(-2, 2), uni(0, 2));
    std::vector<Line3> lines;
    std::vector<std::pair<Vec3, Vec3>> raw;
    for (int k = 0; k < 3; ++k) {
      const Vec3 a(uni(-0.1, 0.1), uni(-2, -1), uni(0, 2)), b(uni(-0.1, 0.1), uni(1, 2), uni(0, 2));
      lines.push_back(Line3::through(a, b));
      raw.emplace_back(a, b);
    }
    EXPECT_EQ(points_near_lines(pts, lines, 0.1), oracle::tube_scan(pts, raw, 0.1)) << t;
  }
}

TEST(TrellisFrame, PlaneInliersOnXZero) {
  const auto& r = scene_run(1);
  const SegmentParams p;
  for (auto i : r.seg.trellis.plane_inliers) EXPECT_LE(std::abs(r.seg.aligned.points[i].x()), 2 * p.plane_tol);
}

TEST(TrunkCandidates, FiveTrunksWithinTwoCm) {
  const auto& r = scene_run(3, false);
  const auto& c = r.seg.candidates;
  ASSERT_EQ(c.size(), r.scene.tree_y.size());
  for (std::size_t s = 0; s < c.size(); ++s) EXPECT_NEAR(c[s].y, r.scene.tree_y[s], 0.02);
  for (std::size_t s = 1; s < c.size(); ++s) EXPECT_LT(c[s - 1].y, c[s].y);
}

TEST(TrunkCandidates, PoleAlsoACandidate) {
  const auto& r = scene_run(1);
  ASSERT_TRUE(r.scene.pole_y);
  const SegmentParams p;
  std::size_t near_pole = 0;
  // the hollow shell can peak on both of its sides
  for (const auto& c : r.seg.candidates) near_pole += std::abs(c.y - *r.scene.pole_y) < p.pole_radius + 0.02;
  EXPECT_GE(near_pole, 1u);
  EXPECT_EQ(r.seg.candidates.size(), r.scene.tree_y.size() + near_pole);
}

TEST(TrunkCandidates, EmptySlabThrows) {
  std::vector<Vec3> off{Vec3(0.5, 0, 0.1), Vec3(0.6, 0.2, 0.3)};
  EXPECT_ERROR_CODE(locate_trunk_candidates(off, {}), ErrorCode::NoTrunkCandidates);
}

TEST(TrunkCandidates, BackProjectionHitsPeakBin) {
  const auto& r = scene_run(1);
  const auto h = ground_histogram(r.seg.aligned.points, {});
  for (const auto& c : r.seg.candidates)
    EXPECT_EQ(static_cast<int>(std::floor((c.y - h.y_min) / h.cell + 1e-9)), c.bin_j);
}

TEST(TrunkCandidates, RecallOverSeeds) {
  for (std::uint64_t seed : {4, 5, 6}) {
    const auto& r = scene_run(seed);
    for (double y : r.scene.tree_y) {
      bool hit = false;
      for (const auto& c : r.seg.candidates) hit |= std::abs(c.y - y) < 0.02;
      EXPECT_TRUE(hit) << "seed " << seed << " y " << y;
    }
  }
}

TEST(VerifyTrunks, TallTrunkVerifiedStubDiscarded) {
  std::vector<Vec3> pts;
  add_tube(pts, Vec3(0, 0, 0), Vec3(0, 0, 1.8), 0.02);
  add_tube(pts, Vec3(0, 1, 0), Vec3(0, 1, 0.5), 0.02);
  const std::vector<TrunkCandidate> cand{{0.0, 0, 0, 10}, {1.0, 0, 100, 10}};
  const auto v = verify_trunks(pts, cand, {}, 1);
  ASSERT_EQ(v.trees.size(), 1u);
  EXPECT_EQ(v.trees.trees[0].id, 1);
  EXPECT_GE(v.trees.trees[0].top().z() - v.trees.trees[0].bottom().z(), 0.9 * 1.8);
  EXPECT_LT(v.path_lengths[1], 1.0);
}

TEST(VerifyTrunks, PoleRoutedAway) {
  const auto& r = scene_run(1);
  const auto& trees = r.seg.tree_set().trees;
  ASSERT_EQ(trees.size(), r.scene.tree_y.size());
  for (const auto& t : trees) EXPECT_GT(std::abs(t.base.y() - *r.scene.pole_y), 0.1);
  for (const auto& p : r.seg.verification.poles)
    if (p.is_pole) EXPECT_LT(std::abs(p.y - *r.scene.pole_y), 0.07);
}

TEST(VerifyTrunks, MainAxesAreConnectedPaths) {
  const auto& r = scene_run(1);
  const SegmentParams p;
  for (const auto& t : r.seg.tree_set().trees) {
    EXPECT_GT(t.axis_length, p.min_trunk_path);
    for (std::size_t k = 1; k < t.main_axis.size(); ++k) {
      const Vec3 d = (t.main_axis[k] - t.main_axis[k - 1]) / p.voxel_edge;
      EXPECT_LE(d.cwiseAbs().maxCoeff(), 1.0 + 1e-6);
      EXPECT_GT(d.norm(), 0.5);
    }
  }
}

TEST(SupportPole, HollowCylinder) {
  const auto pts = shell_cylinder(0.045, 2.3, 0.0);
  const auto cyl = cylinder_points(pts, 0.0, 0.15);
  const auto d = detect_support_pole(pts, cyl, 0.0, {}, 1);
  EXPECT_TRUE(d.is_pole);
  EXPECT_GT(d.ratio, 0.95);
}

TEST(SupportPole, BranchingTrunkIsNot) {
  std::vector<Vec3> pts;
  add_tube(pts, Vec3(0, 0, 0), Vec3(0, 0, 2.2), 0.02);
  for (double z = 0.4; z < 2.0; z += 0.15) add_tube(pts, Vec3(0, 0, z), Vec3(0.14 * std::cos(z * 7), 0.14 * std::sin(z * 7), z + 0.1), 0.01);
  const auto cyl = cylinder_points(pts, 0.0, 0.15);
  EXPECT_FALSE(detect_support_pole(pts, cyl, 0.0, {}, 1).is_pole);
}

TEST(SupportPole, WrongRadius) {
  const auto pts = shell_cylinder(0.08, 2.3, 0.0);
  const auto cyl = cylinder_points(pts, 0.0, 0.15);
  EXPECT_FALSE(detect_support_pole(pts, cyl, 0.0, {}, 1).is_pole);
}

TEST(TrunkLabels, NearAndFar) {
  Tree t;
  t.main_axis = {Vec3(0, 0, 0), Vec3(0, 0, 0.005)};
  TreeSet trees{{t}};
  const std::vector<Vec3> pts{Vec3(0.01, 0, 0), Vec3(0.1, 0, 0)};
  std::vector<SemanticLabel> labels(2, SemanticLabel::Branch);
  label_trunk_points(KdTree(pts), trees, 0.03, labels);
  EXPECT_EQ(labels[0], SemanticLabel::TreeTrunk);
  EXPECT_EQ(labels[1], SemanticLabel::Branch);
}

TEST(TrunkLabels, MatchesDoubleMinScan) {
  for (int c = 0; c < 100; ++c) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 200; ++i) pts.emplace_back(uni(-0.2, 0.2), uni(-1, 1), uni(0, 2));
    TreeSet trees;
    std::vector<std::vector<Vec3>> axes;
    for (int j = 0; j < 2; ++j) {
      Tree t;
      const double y = uni(-1, 1);
      for (double z = 0; z < 2; z += 0.005) t.main_axis.emplace_back(uni(-0.01, 0.01), y, z);
      axes.push_back(t.main_axis);
      trees.trees.push_back(t);
    }
    std::vector<SemanticLabel> labels(pts.size(), SemanticLabel::Branch);
    label_trunk_points(KdTree(pts), trees, 0.03, labels);
    const auto want = oracle::trunk_labels_scan(pts, axes, 0.03);
    for (std::size_t i = 0; i < pts.size(); ++i)
      ASSERT_EQ(labels[i] == SemanticLabel::TreeTrunk, want[i]) << "case " << c << " point " << i;
  }
}

namespace {

struct WireScene {
  std::vector<Vec3> pts;
  std::vector<int> truth;  // 0 trunk, 1 branch, 2 wire
  TreeSet trees;
};

WireScene wire_scene() {
  WireScene s;
  auto add = [&](const std::vector<Vec3>& p, int label) {
    s.pts.insert(s.pts.end(), p.begin(), p.end());
    s.truth.insert(s.truth.end(), p.size(), label);
  };
  for (double y : {0.0, 1.0}) {
    std::vector<Vec3> trunk;
    add_tube(trunk, Vec3(0, y, 0), Vec3(0, y, 1.8), 0.02);
    add(trunk, 0);
    Tree t;
    t.id = static_cast<int>(s.trees.size()) + 1;
    t.base = Vec3(0, y, 0);
    for (double z = 0; z < 1.8; z += 0.005) t.main_axis.emplace_back(0, y, z);
    s.trees.trees.push_back(t);
  }
  std::vector<Vec3> w;
  add_tube(w, Vec3(0, -0.5, 0.5), Vec3(0, 1.5, 0.5), 0.002);
  add_tube(w, Vec3(0, -0.5, 0.44), Vec3(0, 1.5, 0.44), 0.01);
  add_tube(w, Vec3(0, -0.5, 1.0), Vec3(0, 1.5, 1.0), 0.002);
  add(w, 2);
  std::vector<Vec3> b;
  add_tube(b, Vec3(0, 0, 0.8), Vec3(0.25, 0.35, 1.2), 0.008);
  add_tube(b, Vec3(0, 1, 0.7), Vec3(-0.3, 0.7, 1.1), 0.008);
  add(b, 1);
  return s;
}

}  // namespace

TEST(WireLabels, WireBetweenTrunks) {
  const auto s = wire_scene();
  const KdTree index(s.pts);
  std::vector<SemanticLabel> labels(s.pts.size(), SemanticLabel::Branch);
  const SegmentParams p;
  label_trunk_points(index, s.trees, p.trunk_label_dist, labels);
  std::vector<Line3> lines{Line3::through(Vec3(0, -0.5, 0.5), Vec3(0, 1.5, 0.5)),
                           Line3::through(Vec3(0, -0.5, 1.0), Vec3(0, 1.5, 1.0))};
  const auto tube = points_near_lines(s.pts, lines, p.line_tube);
  const std::vector<double> heights{0.47, 1.0};
  label_wire_points(s.pts, index, tube, heights, s.trees, p, 9, labels);
  std::size_t wire = 0, wire_hit = 0, branch = 0, branch_hit = 0;
  for (std::size_t i = 0; i < s.pts.size(); ++i) {
    const bool l = labels[i] == SemanticLabel::TrellisWireWaterPipe;
    if (s.truth[i] == 2 && labels[i] != SemanticLabel::TreeTrunk) {
      ++wire;
      wire_hit += l;
    } else if (s.truth[i] == 1) {
      ++branch;
      branch_hit += l;
    }
  }
  // wire points inside the trunk label radius stay trunk and are not counted
  EXPECT_GE(static_cast<double>(wire_hit) / wire, 0.95);
  EXPECT_LE(static_cast<double>(branch_hit) / branch, 0.01);
}

TEST(WireLabels, LowestLevelCapturesWireAndPipe) {
  const auto s = wire_scene();
  const KdTree index(s.pts);
  std::vector<SemanticLabel> labels(s.pts.size(), SemanticLabel::Branch);
  const std::vector<double> heights{0.47};
  std::vector<std::size_t> tube;
  label_wire_points(s.pts, index, tube, heights, s.trees, {}, 9, labels);
  std::size_t wire = 0, pipe = 0, wire_n = 0, pipe_n = 0;
  for (std::size_t i = 0; i < s.pts.size(); ++i) {
    if (s.truth[i] != 2 || std::abs(s.pts[i].y()) < 0.05 || std::abs(s.pts[i].y() - 1) < 0.05) continue;
    const bool l = labels[i] == SemanticLabel::TrellisWireWaterPipe;
    if (std::abs(s.pts[i].z() - 0.5) < 0.005) {
      ++wire_n;
      wire += l;
    } else if (std::abs(s.pts[i].z() - 0.44) < 0.015) {
      ++pipe_n;
      pipe += l;
    }
  }
  EXPECT_GE(static_cast<double>(wire) / wire_n, 0.95);
  EXPECT_GE(static_cast<double>(pipe) / pipe_n, 0.95);
}

TEST(WireLabels, AirSegmentSkipped) {
  std::vector<Vec3> pts{Vec3(0, -1, 2.9), Vec3(0, 1, 2.9)};
  Tree t;
  t.base = Vec3(0, 0, 0);
  t.main_axis = {Vec3(0, 0, 0)};
  TreeSet trees{{t}};
  std::vector<SemanticLabel> labels(pts.size(), SemanticLabel::Branch);
  const std::vector<double> heights{1.0};
  const auto log = label_wire_points(pts, KdTree(pts), {}, heights, trees, {}, 1, labels);
  for (const auto& e : log) EXPECT_TRUE(e.skipped);
  for (auto l : labels) EXPECT_EQ(l, SemanticLabel::Branch);
}

TEST(StripToTrees, IdentityAndEmpty) {
  ColorPointCloud c;
  c.push_back({0, 0, 0}, {});
  c.push_back({1, 0, 0}, {});
  const std::vector<SemanticLabel> all_branch(2, SemanticLabel::Branch);
  const auto out = strip_to_trees(c, all_branch);
  EXPECT_EQ(out.cloud.size(), 2u);
  EXPECT_EQ(out.index, (std::vector<std::size_t>{0, 1}));
  const std::vector<SemanticLabel> all_wire(2, SemanticLabel::TrellisWireWaterPipe);
  EXPECT_ERROR_CODE(strip_to_trees(c, all_wire), ErrorCode::EmptyTrees);
}

TEST(StripToTrees, CountNearTruth) {
  const auto& r = scene_run(1);
  std::size_t truth = 0;
  for (std::size_t i = 0; i < r.winter.cloud.size(); ++i) truth += r.gt_sem(i) == gt::kTrunk || r.gt_sem(i) == gt::kBranch;
  const double n = static_cast<double>(r.seg.trees.cloud.size());
  EXPECT_NEAR(n / truth, 1.0, 0.05);
}

TEST(Segment, RerunOnOwnOutputKeepsTrunks) {
  const auto& r = scene_run(2);
  // wires removed, in the calibrated frame
  ColorPointCloud kept;
  for (std::size_t i = 0; i < r.winter.cloud.size(); ++i)
    if (r.seg.labels[i] != SemanticLabel::TrellisWireWaterPipe) kept.push_back(r.winter.cloud.points[i], r.winter.cloud.colors[i]);
  // the stripped cloud has no wires left to find, so reuse the frame
  const auto aligned = align_to_frame(kept, r.seg.frame());
  const auto cand = locate_trunk_candidates(aligned.points, {});
  const auto v = verify_trunks(aligned.points, cand, {}, 2);
  ASSERT_EQ(v.trees.size(), r.seg.tree_set().size());
  for (std::size_t j = 0; j < v.trees.size(); ++j)
    EXPECT_NEAR(v.trees.trees[j].base.y(), r.seg.tree_set().trees[j].base.y(), 0.01);
}

TEST(Segment, LabelsCoverCloudAndDeterministic) {
  const auto& r = scene_run(1);
  EXPECT_EQ(r.seg.labels.size(), r.winter.cloud.size());
  const auto again = segment_winter(r.winter.cloud, {}, 1);
  EXPECT_EQ(again.labels, r.seg.labels);
}
