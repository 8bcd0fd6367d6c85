#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "atx/config.hpp"
#include "atx/metrics.hpp"
#include "atx/pipeline.hpp"

namespace atx {

using Json = nlohmann::ordered_json;

inline Json to_json(const CostBreakdown& c) {
  return Json{{"feat", c.feat}, {"distort", c.distort}, {"nav", c.nav}, {"total", c.total}};
}

inline Json to_json(const EnergyTerms& e) {
  return Json{{"shape", e.shape}, {"anchor", e.anchor}, {"nav", e.nav}, {"feat", e.feat}, {"total", e.total}};
}

inline Json to_json(const MetricReport& m) {
  Json j;
  j["trajectory_aed"] = m.trajectory_aed;
  if (m.has_waypoint_aed) j["waypoint_aed"] = m.waypoint_aed;
  Json inl = Json::object();
  for (const auto& [th, v] : m.inlier_ratio) inl[detail::format_double(th)] = v;
  j["inlier_ratio"] = inl;
  j["collision_ratio"] = m.collision_ratio;
  if (m.has_feature_distance) j["feature_distance"] = m.feature_distance;
  if (m.has_length_distortion) j["length_distortion"] = m.length_distortion;
  return j;
}

/// Every result-determining config value. `workers` only changes how work is
/// scheduled, so it is left out and reports compare equal across worker counts.
inline Json config_json(const Config& cfg) {
  Json j = Json::object();
  for (const auto& [k, v] : config_entries(cfg))
    if (k != "workers") j[k] = v;
  return j;
}

inline Json refinement_json(const TransferOutcome& o) {
  const auto& r = o.refinement;
  Json j;
  j["initial"] = to_json(r.initial);
  j["final"] = to_json(r.final);
  j["best_step"] = r.best_step;
  j["failed"] = r.failed;
  j["sparse_targets"] = o.sparse_targets;
  Json trace = Json::object();
  std::vector<double> shape, anchor, nav, feat, total;
  for (const auto& e : r.trace) {
    shape.push_back(e.shape);
    anchor.push_back(e.anchor);
    nav.push_back(e.nav);
    feat.push_back(e.feat);
    total.push_back(e.total);
  }
  trace["shape"] = shape;
  trace["anchor"] = anchor;
  trace["nav"] = nav;
  trace["feat"] = feat;
  trace["total"] = total;
  j["trace"] = trace;
  return j;
}

inline Json assignment_json(const TransferResult& res, const Assignment& a) {
  Json j;
  j["beam_rank"] = a.beam_rank;
  Json choices = Json::array();
  for (std::size_t s = 0; s < a.choice.size(); ++s) {
    if (a.choice[s] < 0) continue;
    const auto& c = res.candidates[s][static_cast<std::size_t>(a.choice[s])];
    choices.push_back(Json{{"target_cluster", res.problem_clusters[s]},
                           {"candidate", a.choice[s]},
                           {"reference_cluster", c.ref_cluster},
                           {"match_rank", c.match_rank},
                           {"rotation", c.seed.rotation},
                           {"reflection", c.seed.reflection},
                           {"scaled", c.seed.scaled},
                           {"affine_fallback", c.map.affine_fallback},
                           {"feat_cost", c.feat_cost}});
  }
  j["choices"] = choices;
  j["cost"] = to_json(a.cost);
  return j;
}

/// Structured run report; key order is fixed. Timings are included only
/// when cfg.report_timings is set.
inline Json transfer_report(const TransferResult& res, const Config& cfg, const MetricReport* metrics = nullptr) {
  Json j;
  j["config"] = config_json(cfg);
  j["mode"] = mode_name(res.mode);
  j["inputs"] = Json{{"target_points", res.target_points}, {"reference_points", res.reference_points}};
  if (cfg.report_timings) {
    Json t = Json::array();
    for (const auto& [stage, ms] : res.timings_ms) t.push_back(Json{{"stage", stage}, {"ms", ms}});
    j["timings_ms"] = t;
  }
  Json clusters;
  clusters["target"] = res.target_clusters.count();
  clusters["reference"] = res.reference_clusters.count();
  Json merged = Json::array();
  for (const auto& [from, into] : res.matches.merged) merged.push_back(Json{{"cluster", from}, {"into", into}});
  clusters["merged"] = merged;
  j["clusters"] = clusters;

  Json table = Json::array();
  for (const auto& m : res.matches.matches)
    table.push_back(Json{{"target", m.target}, {"reference", m.reference}, {"score", m.score}, {"rank", m.rank}});
  j["cluster_matches"] = table;

  Json cands = Json::array();
  for (std::size_t s = 0; s < res.problem_clusters.size(); ++s)
    cands.push_back(Json{{"target_cluster", res.problem_clusters[s]},
                         {"points", res.cluster_sizes[s]},
                         {"candidates", res.candidates[s].size()}});
  j["candidates"] = cands;

  j["assignment"] = assignment_json(res, res.assignments.front());
  Json alts = Json::array();
  for (std::size_t r = 1; r < res.assignments.size(); ++r) alts.push_back(assignment_json(res, res.assignments[r]));
  j["alternative_assignments"] = alts;
  j["refinement"] = refinement_json(res.best);
  j["output"] = Json{{"points", res.best.trajectory.points.size()}, {"waypoints", res.best.trajectory.waypoints.size()}};
  if (metrics) j["metrics"] = to_json(*metrics);
  j["warnings"] = res.warnings;
  return j;
}

}  // namespace atx
