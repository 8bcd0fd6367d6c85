// atx: command-line front end for trajectory transfer between scenes.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "atx/config.hpp"
#include "atx/metrics.hpp"
#include "atx/pipeline.hpp"
#include "atx/plot.hpp"
#include "atx/report.hpp"
#include "atx/scene_io.hpp"
#include "atx/synth.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0, kInputError = 2, kPipelineError = 3, kPlanError = 4;

int exit_code(const atx::Error& e) {
  switch (e.stage()) {
    case atx::Stage::Input: return kInputError;
    case atx::Stage::Plan: return kPlanError;
    default: return kPipelineError;
  }
}

atx::Config build_config(const std::string& path, const std::vector<std::string>& overrides) {
  atx::Config cfg = path.empty() ? atx::Config{} : atx::load_config(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw atx::Error(atx::Stage::Input, "--set expects key=value, got '" + kv + "'");
    atx::set_config_value(cfg, atx::detail::trim(kv.substr(0, eq)), atx::detail::trim(kv.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw atx::Error(atx::Stage::Input, "cannot write " + path);
  out << text;
  if (!out) throw atx::Error(atx::Stage::Input, "write failed: " + path);
}

std::string alternative_path(const std::string& out, std::size_t rank) {
  fs::path p(out);
  const std::string stem = p.stem().string();
  return (p.parent_path() / (stem + ".alt" + std::to_string(rank) + p.extension().string())).string();
}

struct TransferArgs {
  std::string target, reference, trajectory, mode = "dense", config, out, report;
  std::vector<std::string> overrides, gt;
  int top = 0;
};

int cmd_transfer(const TransferArgs& a) {
  const atx::Config cfg = build_config(a.config, a.overrides);
  const atx::TransferMode mode = atx::parse_mode(a.mode);
  const atx::Scene tgt = atx::load_scene(a.target);
  const atx::Scene ref = atx::load_scene(a.reference);
  const atx::Trajectory traj = atx::load_trajectory(a.trajectory);
  std::vector<atx::Trajectory> gts;
  for (const auto& g : a.gt) gts.push_back(atx::load_trajectory(g));

  const atx::TransferResult res = atx::transfer(tgt, ref, traj, cfg, mode, a.top);
  atx::save_trajectory(a.out, res.best.trajectory);
  for (std::size_t r = 0; r < res.alternatives.size(); ++r)
    atx::save_trajectory(alternative_path(a.out, r + 1), res.alternatives[r].trajectory);

  if (!a.report.empty()) {
    atx::MetricReport m;
    const bool with_metrics = !gts.empty();
    if (with_metrics) m = atx::compute_metrics(res.best.trajectory, gts, cfg, &ref, &tgt, &traj);
    write_text(a.report, atx::transfer_report(res, cfg, with_metrics ? &m : nullptr).dump(2) + "\n");
  }
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  return kOk;
}

int cmd_synth(const std::string& spec_path, const std::vector<std::string>& spec_overrides, const std::string& out_dir,
              const std::string& config, const std::vector<std::string>& overrides) {
  atx::SynthSpec spec;
  if (!spec_path.empty()) {
    std::ifstream in(spec_path);
    if (!in) throw atx::Error(atx::Stage::Input, "cannot open spec " + spec_path);
    spec = atx::parse_synth_spec(in);
  }
  for (const auto& kv : spec_overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw atx::Error(atx::Stage::Input, "--spec-set expects key=value, got '" + kv + "'");
    const std::string key = atx::detail::trim(kv.substr(0, eq)), value = atx::detail::trim(kv.substr(eq + 1));
    if (key == "family") spec = atx::random_spec(atx::detail::parse_number<std::uint64_t>(key, value));
    else atx::set_spec_value(spec, key, value);
  }
  const atx::Config cfg = build_config(config, overrides);
  const atx::SynthPair pair = atx::generate_pair(spec, cfg);
  fs::create_directories(out_dir);
  const fs::path d(out_dir);
  atx::save_scene((d / "target.atts").string(), pair.target);
  atx::save_scene((d / "reference.atts").string(), pair.reference);
  atx::save_trajectory((d / "source.attt").string(), pair.src_trajectory);
  atx::save_trajectory((d / "gt.attt").string(), pair.gt_trajectory);
  write_text((d / "groundtruth.txt").string(), atx::sidecar_text(pair));
  return kOk;
}

int cmd_eval(const std::string& pred_path, const std::vector<std::string>& gt_paths, const std::string& target,
             const std::string& reference, const std::string& source, const std::string& config,
             const std::vector<std::string>& overrides, const std::string& out) {
  const atx::Config cfg = build_config(config, overrides);
  const atx::Trajectory pred = atx::load_trajectory(pred_path);
  std::vector<atx::Trajectory> gts;
  for (const auto& g : gt_paths) gts.push_back(atx::load_trajectory(g));
  std::optional<atx::Scene> tgt, ref;
  std::optional<atx::Trajectory> src;
  if (!target.empty()) tgt = atx::load_scene(target);
  if (!reference.empty()) ref = atx::load_scene(reference);
  if (!source.empty()) src = atx::load_trajectory(source);
  const atx::MetricReport m = atx::compute_metrics(pred, gts, cfg, ref ? &*ref : nullptr, tgt ? &*tgt : nullptr,
                                                   src ? &*src : nullptr);
  atx::Json j;
  j["metrics"] = atx::to_json(m);
  j["ground_truths"] = gts.size();
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) std::cout << text;
  else write_text(out, text);
  return kOk;
}

int cmd_plot(const std::vector<std::string>& scenes, const std::vector<std::string>& trajectories,
             const std::string& out, int width) {
  std::vector<atx::Scene> sc;
  std::vector<atx::Trajectory> tr;
  for (const auto& s : scenes) sc.push_back(atx::load_scene(s));
  for (const auto& t : trajectories) tr.push_back(atx::load_trajectory(t));
  atx::PlotInput in;
  for (const auto& s : sc) in.scenes.push_back(&s);
  for (const auto& t : tr) in.trajectories.push_back(&t);
  atx::write_plot(out, in, width);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analogical trajectory transfer between instance-labeled point-cloud scenes"};
  app.require_subcommand(1);

  TransferArgs ta;
  auto* transfer = app.add_subcommand("transfer", "Transfer a trajectory from a target scene into a reference scene");
  transfer->add_option("--target", ta.target, "Target scene (.atts) the trajectory was recorded in")->required();
  transfer->add_option("--reference", ta.reference, "Reference scene (.atts) to transfer into")->required();
  transfer->add_option("--trajectory", ta.trajectory, "Source trajectory (.attt)")->required();
  transfer->add_option("--mode", ta.mode, "dense or waypoint")->check(CLI::IsMember({"dense", "waypoint"}));
  transfer->add_option("--config", ta.config, "key = value config file");
  transfer->add_option("--set", ta.overrides, "Config override key=value (repeatable)");
  transfer->add_option("--out", ta.out, "Output trajectory (.attt)")->required();
  transfer->add_option("--report", ta.report, "Structured report output");
  transfer->add_option("--top", ta.top, "Also write N alternative trajectories from the next-best assignments")
      ->check(CLI::NonNegativeNumber);
  transfer->add_option("--gt", ta.gt, "Ground-truth trajectories for metrics in the report");

  std::string spec_path, synth_out, synth_config;
  std::vector<std::string> spec_set, synth_set;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene pair with ground truth");
  synth->add_option("--spec", spec_path, "key = value synth spec file");
  synth->add_option("--spec-set", spec_set, "Spec override key=value (repeatable)");
  synth->add_option("--out-dir", synth_out, "Output directory")->required();
  synth->add_option("--config", synth_config, "Config file (planner settings)");
  synth->add_option("--set", synth_set, "Config override key=value (repeatable)");

  std::string pred, eval_target, eval_reference, eval_source, eval_config, eval_out;
  std::vector<std::string> gts, eval_set;
  auto* eval = app.add_subcommand("eval", "Compute metrics of a predicted trajectory");
  eval->add_option("--pred", pred, "Predicted trajectory (.attt)")->required();
  eval->add_option("--gt", gts, "Ground-truth trajectories (best value is reported)")->required();
  eval->add_option("--target", eval_target, "Target scene, for feature distance");
  eval->add_option("--reference", eval_reference, "Reference scene, for collision ratio and feature distance");
  eval->add_option("--source", eval_source, "Source trajectory, for feature distance and length distortion");
  eval->add_option("--config", eval_config, "Config file");
  eval->add_option("--set", eval_set, "Config override key=value (repeatable)");
  eval->add_option("--out", eval_out, "Report path (stdout when omitted)");

  std::vector<std::string> plot_scenes, plot_trajs;
  std::string plot_out;
  int plot_width = 800;
  auto* plot = app.add_subcommand("plot", "Top-down plot of scenes and trajectories (.ppm or .svg)");
  plot->add_option("--scene", plot_scenes, "Scene files (repeatable)")->required();
  plot->add_option("--trajectory", plot_trajs, "Trajectory files (repeatable)");
  plot->add_option("--out", plot_out, "Output image (.ppm or .svg)")->required();
  plot->add_option("--width", plot_width, "Image width in pixels")->check(CLI::Range(64, 8192));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kInputError;
  }

  try {
    if (*transfer) return cmd_transfer(ta);
    if (*synth) return cmd_synth(spec_path, spec_set, synth_out, synth_config, synth_set);
    if (*eval) return cmd_eval(pred, gts, eval_target, eval_reference, eval_source, eval_config, eval_set, eval_out);
    if (*plot) return cmd_plot(plot_scenes, plot_trajs, plot_out, plot_width);
  } catch (const atx::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPipelineError;
  }
  return kOk;
}
