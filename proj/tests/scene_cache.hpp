#pragma once

// Synthetic scenes shared by the tests of one binary; each is generated,
// calibrated and segmented once.

#include <map>
#include <memory>
#include <tuple>

#include "orchard/calibrate.hpp"
#include "orchard/segment.hpp"
#include "orchard/synth.hpp"

struct SceneRun {
  orchard::SyntheticScene scene;
  orchard::CalibratedCloud winter;
  orchard::SegmentResult seg;

  /// Ground-truth semantic code of calibrated winter point i.
  int gt_sem(std::size_t i) const { return scene.winter.semlabel[winter.kept[i]]; }
  int gt_tree(std::size_t i) const { return scene.winter.treeid[winter.kept[i]]; }
};

inline const SceneRun& scene_run(std::uint64_t seed, bool pole = true, double noise = 0.002) {
  static std::map<std::tuple<std::uint64_t, bool, double>, std::unique_ptr<SceneRun>> cache;
  auto& slot = cache[{seed, pole, noise}];
  if (!slot) {
    slot = std::make_unique<SceneRun>();
    orchard::SceneSpec spec;
    spec.seed = seed;
    spec.pole = pole;
    spec.noise = noise;
    slot->scene = orchard::generate_scene(spec);
    slot->winter = orchard::apply_calibration(slot->scene.winter.raw,
                                              orchard::derive_calibration(slot->scene.winter.markers), {});
    slot->seg = orchard::segment_winter(slot->winter.cloud, {}, seed);
  }
  return *slot;
}
