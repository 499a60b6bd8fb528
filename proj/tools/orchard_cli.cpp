// orchard: command-line front end of the pipeline.
//
//   orchard run --winter w.ply --harvest h.ply --calib wc.json,hc.json --out dir
//   orchard synth --seed 3 --out scene/
//
// Every subcommand except synth runs the pipeline up to its own stage.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "orchard/orchard.hpp"

using namespace orchard;

namespace {

struct Flags {
  std::string config, winter, harvest, gt_labels, gt_apples, out, stage, tree_labels;
  std::vector<std::string> calib, set;
  std::uint64_t seed = 0;
  int workers = 1;
  bool emit_debug = false, winter_only = false, dump_config = false;
};

struct SynthFlags {
  int trees = 5;
  double noise = -1.0, droop = -1.0;
  int apples_per_tree = -1;
  bool no_pole = false;
};

PipelineConfig build_config(const CLI::App& app, const Flags& f) {
  PipelineConfig c;
  if (!f.config.empty()) apply_config_file(c, f.config);
  const auto given = [&](const char* name) { return app.count(name) > 0; };
  if (given("--winter")) c.winter = f.winter;
  if (given("--harvest")) c.harvest = f.harvest;
  if (given("--calib")) c.calib = f.calib;
  if (given("--gt-labels")) c.gt_labels = f.gt_labels;
  if (given("--gt-apples")) c.gt_apples = f.gt_apples;
  if (given("--out")) c.out = f.out;
  if (given("--seed")) c.seed = f.seed;
  if (given("--stage")) c.stage = f.stage;
  if (given("--workers")) c.workers = f.workers;
  if (given("--emit-debug")) c.emit_debug = true;
  if (given("--winter-only")) c.winter_only = true;
  if (given("--tree-labels")) c.tree_labels = f.tree_labels;
  for (const auto& kv : f.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "--set expects key=value, got '" + kv + "'");
    set_config_value(c, detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
  }
  return c;
}

void dump_config(PipelineConfig& c) {
  for (auto& e : config_entries(c)) {
    std::string value;
    std::visit(
        [&](auto* t) {
          using T = std::remove_pointer_t<decltype(t)>;
          if constexpr (std::is_same_v<T, std::string>) value = *t;
          else if constexpr (std::is_same_v<T, bool>) value = *t ? "true" : "false";
          else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
            for (std::size_t i = 0; i < t->size(); ++i) value += (i ? "," : "") + (*t)[i];
          } else value = Json(*t).dump();
        },
        e.target);
    std::cout << "# " << e.doc << "\n" << e.key << " = " << value << "\n";
  }
}

int run_stage(const CLI::App& app, const Flags& f, const std::string& stage) {
  PipelineConfig c = build_config(app, f);
  if (!app.count("--stage")) c.stage = stage;
  if (f.dump_config) {
    dump_config(c);
    return 0;
  }
  if (!c.batch.empty()) {
    std::vector<PipelineConfig> scenes;
    for (const auto& path : c.batch) {
      PipelineConfig s;
      apply_config_file(s, path);
      s.stage = c.stage;
      scenes.push_back(std::move(s));
    }
    const int failed = run_batch(scenes, c.workers);
    std::printf("%zu scenes, %d failed\n", scenes.size(), failed);
    return failed ? 1 : 0;
  }
  const RunReport rep = run_pipeline_files(c);
  const std::string status = rep.json.value("status", "error");
  std::printf("%s: %s/report.json\n", status.c_str(), c.out.c_str());
  return rep.exit_code;
}

int run_synth(const CLI::App& app, const Flags& f, const SynthFlags& sf) {
  SceneSpec spec;
  spec.seed = app.count("--seed") ? f.seed : 1;
  spec.n_trees = sf.trees;
  if (sf.noise >= 0) spec.noise = sf.noise;
  if (sf.droop >= 0) spec.droop = sf.droop;
  if (sf.apples_per_tree >= 0) spec.apples_per_tree = sf.apples_per_tree;
  if (sf.no_pole) spec.pole = false;
  const std::string dir = app.count("--out") ? f.out : "synthetic_scene";
  const auto scene = generate_scene(spec);
  const auto cfg = write_synthetic_scene(scene, dir);
  std::printf("%s\n", cfg.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Apple-to-tree assignment from winter and harvest point clouds"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  SynthFlags sf;
  app.add_option("--config", f.config, "key = value config file");
  app.add_option("--winter", f.winter, "winter cloud (PLY)");
  app.add_option("--harvest", f.harvest, "harvest cloud (PLY)");
  app.add_option("--calib", f.calib, "calibration JSON: winter [harvest]")->expected(1, 2)->delimiter(',');
  app.add_option("--gt-labels", f.gt_labels, "winter PLY carrying semlabel/treeid");
  app.add_option("--gt-apples", f.gt_apples, "ground-truth apples JSON");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--seed", f.seed, "seed of every randomized step");
  app.add_option("--stage", f.stage, "last stage to run");
  app.add_option("--workers", f.workers, "concurrent scenes in batch mode");
  app.add_flag("--emit-debug", f.emit_debug, "write debug images");
  app.add_flag("--winter-only", f.winter_only, "stop after tree separation");
  app.add_option("--tree-labels", f.tree_labels, "auto | truth");
  app.add_option("--set", f.set, "override any config key: key=value");
  app.add_flag("--dump-config", f.dump_config, "print the effective config and exit");

  int code = 0;
  for (const char* stage : kStageNames) {
    auto* sub = app.add_subcommand(stage, std::string("run the pipeline up to ") + stage);
    sub->callback([&, s = std::string(stage)] { code = run_stage(app, f, s); });
  }
  app.add_subcommand("run", "run every stage")->callback([&] { code = run_stage(app, f, "run"); });
  auto* synth = app.add_subcommand("synth", "write a synthetic scene pair with ground truth");
  synth->add_option("--trees", sf.trees, "number of trees");
  synth->add_option("--noise", sf.noise, "point noise sigma (m)");
  synth->add_option("--droop", sf.droop, "harvest branch droop (m)");
  synth->add_option("--apples-per-tree", sf.apples_per_tree, "apples per tree");
  synth->add_flag("--no-pole", sf.no_pole, "omit the support pole");
  synth->callback([&] { code = run_synth(app, f, sf); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return code;
}
