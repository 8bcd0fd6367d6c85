#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "atx/common.hpp"

namespace atx {

/// Every pipeline hyperparameter with its default. Lengths are meters.
struct Config {
  // preprocessing
  double voxel_size = 0.02;

  // graph / matching
  int cluster_target_size = 4;
  int top_k = 1;
  double affinity_eps = 0.05;        // relative to the mean edge length when normalized
  bool affinity_normalize = true;
  int power_iterations = 200;
  double power_tolerance = 1e-9;
  int sinkhorn_sweeps = 10;
  double merge_threshold_ratio = 0.3;

  // smooth maps
  int n_rotations = 4;
  int top_m = 5;
  int seed_cap = 128;
  int candidate_controls = 64;
  int feature_eval_points = 512;
  double tps_lambda_scale = 1e-3;

  // assembly
  int beam_width = 5;
  double assembly_lambda_feat = 1.0;
  double assembly_lambda_distort = 1.0;
  double assembly_lambda_nav = 1.0;
  int distort_pairs = 64;
  double nav_delta = 0.25;
  int merge_samples = 100;

  // refinement
  double refine_lambda_shape = 1.0;
  double refine_lambda_anchor = 0.1;
  double refine_lambda_nav = 1.0;
  double refine_lambda_feat = 1.0;
  double kde_bandwidth = 0.2;
  double kde_cutoff_sigmas = 3.0;
  double feat_search_radius = 1.0;
  int sparse_count = 50;
  int feat_interp_k = 8;
  int refine_steps = 200;
  double refine_lr = 0.02;
  double refine_knot_spacing = 1.0;  // 0: every point is a free variable

  // planning
  double grid_resolution = 0.1;
  double grid_inflation = 0.2;
  double snap_radius = 1.0;

  // metrics
  int metric_samples = 256;
  double collision_threshold = 0.1;
  std::vector<double> inlier_thresholds{0.75, 1.0, 1.25, 1.5, 2.0};

  // run control
  std::uint64_t seed = 0;
  int workers = 1;
  bool report_timings = false;

  void validate() const;
};

namespace detail {

using FieldRef = std::variant<double*, int*, std::uint64_t*, bool*, std::vector<double>*>;

template <class Cfg, class Fn>
void visit_fields(Cfg& c, Fn&& fn) {
  fn("voxel_size", &c.voxel_size);
  fn("cluster_target_size", &c.cluster_target_size);
  fn("top_k", &c.top_k);
  fn("affinity_eps", &c.affinity_eps);
  fn("affinity_normalize", &c.affinity_normalize);
  fn("power_iterations", &c.power_iterations);
  fn("power_tolerance", &c.power_tolerance);
  fn("sinkhorn_sweeps", &c.sinkhorn_sweeps);
  fn("merge_threshold_ratio", &c.merge_threshold_ratio);
  fn("n_rotations", &c.n_rotations);
  fn("top_m", &c.top_m);
  fn("seed_cap", &c.seed_cap);
  fn("candidate_controls", &c.candidate_controls);
  fn("feature_eval_points", &c.feature_eval_points);
  fn("tps_lambda_scale", &c.tps_lambda_scale);
  fn("beam_width", &c.beam_width);
  fn("assembly_lambda_feat", &c.assembly_lambda_feat);
  fn("assembly_lambda_distort", &c.assembly_lambda_distort);
  fn("assembly_lambda_nav", &c.assembly_lambda_nav);
  fn("distort_pairs", &c.distort_pairs);
  fn("nav_delta", &c.nav_delta);
  fn("merge_samples", &c.merge_samples);
  fn("refine_lambda_shape", &c.refine_lambda_shape);
  fn("refine_lambda_anchor", &c.refine_lambda_anchor);
  fn("refine_lambda_nav", &c.refine_lambda_nav);
  fn("refine_lambda_feat", &c.refine_lambda_feat);
  fn("kde_bandwidth", &c.kde_bandwidth);
  fn("kde_cutoff_sigmas", &c.kde_cutoff_sigmas);
  fn("feat_search_radius", &c.feat_search_radius);
  fn("sparse_count", &c.sparse_count);
  fn("feat_interp_k", &c.feat_interp_k);
  fn("refine_steps", &c.refine_steps);
  fn("refine_lr", &c.refine_lr);
  fn("refine_knot_spacing", &c.refine_knot_spacing);
  fn("grid_resolution", &c.grid_resolution);
  fn("grid_inflation", &c.grid_inflation);
  fn("snap_radius", &c.snap_radius);
  fn("metric_samples", &c.metric_samples);
  fn("collision_threshold", &c.collision_threshold);
  fn("inlier_thresholds", &c.inlier_thresholds);
  fn("seed", &c.seed);
  fn("workers", &c.workers);
  fn("report_timings", &c.report_timings);
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Shortest round-trip decimal form; stable across runs.
inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

template <class T>
T parse_number(const std::string& key, const std::string& s) {
  T v{};
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw Error(Stage::Input, "config key '" + key + "': cannot parse '" + s + "'");
  return v;
}

}  // namespace detail

/// Sets one key from its textual value. Unknown keys are an error.
inline void set_config_value(Config& cfg, const std::string& key, const std::string& value) {
  bool found = false;
  detail::visit_fields(cfg, [&](const char* name, auto* field) {
    if (key != name) return;
    found = true;
    using T = std::remove_pointer_t<decltype(field)>;
    if constexpr (std::is_same_v<T, bool>) {
      if (value == "true" || value == "1") *field = true;
      else if (value == "false" || value == "0") *field = false;
      else throw Error(Stage::Input, "config key '" + key + "': expected true/false");
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      field->clear();
      std::stringstream ss(value);
      std::string tok;
      while (std::getline(ss, tok, ',')) field->push_back(detail::parse_number<double>(key, detail::trim(tok)));
    } else {
      *field = detail::parse_number<T>(key, value);
    }
  });
  if (!found) throw Error(Stage::Input, "unknown config key '" + key + "'");
}

/// Parses flat `key = value` text; `#` starts a comment.
inline Config parse_config(std::istream& in, Config cfg = {}) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error(Stage::Input, "config line " + std::to_string(lineno) + ": expected key = value");
    set_config_value(cfg, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

inline Config load_config(const std::string& path, Config cfg = {}) {
  std::ifstream f(path);
  if (!f) throw Error(Stage::Input, "cannot open config " + path);
  return parse_config(f, std::move(cfg));
}

/// Ordered (key, value) pairs of the effective configuration.
inline std::vector<std::pair<std::string, std::string>> config_entries(const Config& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  detail::visit_fields(cfg, [&](const char* name, const auto* field) {
    using T = std::remove_cvref_t<decltype(*field)>;
    std::string v;
    if constexpr (std::is_same_v<T, bool>) {
      v = *field ? "true" : "false";
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      for (std::size_t i = 0; i < field->size(); ++i) v += (i ? "," : "") + detail::format_double((*field)[i]);
    } else if constexpr (std::is_floating_point_v<T>) {
      v = detail::format_double(*field);
    } else {
      v = std::to_string(*field);
    }
    out.emplace_back(name, v);
  });
  return out;
}

inline void Config::validate() const {
  auto fail = [](const std::string& m) { throw Error(Stage::Input, "invalid config: " + m); };
  for (double len : {voxel_size, nav_delta, kde_bandwidth, feat_search_radius, grid_resolution, snap_radius,
                     affinity_eps, collision_threshold, refine_lr, kde_cutoff_sigmas})
    if (!(len > 0)) fail("lengths and rates must be > 0");
  if (grid_inflation < 0) fail("grid_inflation must be >= 0");
  if (refine_knot_spacing < 0) fail("refine_knot_spacing must be >= 0");
  for (double w : {assembly_lambda_feat, assembly_lambda_distort, assembly_lambda_nav, refine_lambda_shape,
                   refine_lambda_anchor, refine_lambda_nav, refine_lambda_feat, tps_lambda_scale, merge_threshold_ratio})
    if (!(w >= 0)) fail("weights must be >= 0");
  for (int n : {cluster_target_size, top_k, n_rotations, top_m, beam_width, seed_cap, candidate_controls,
                feature_eval_points, distort_pairs, merge_samples, sparse_count, feat_interp_k,
                refine_steps, power_iterations, metric_samples, workers})
    if (n < 1) fail("counts must be >= 1");
  if (sinkhorn_sweeps < 0) fail("sinkhorn_sweeps must be >= 0");
  if (metric_samples < 2) fail("metric_samples must be >= 2");
}

}  // namespace atx
