#pragma once

#include <chrono>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "atx/assembly.hpp"
#include "atx/common.hpp"
#include "atx/config.hpp"
#include "atx/graph.hpp"
#include "atx/maps.hpp"
#include "atx/matching.hpp"
#include "atx/plan.hpp"
#include "atx/refine.hpp"
#include "atx/scene_io.hpp"

namespace atx {

enum class TransferMode { Dense, Waypoint };

inline const char* mode_name(TransferMode m) { return m == TransferMode::Dense ? "dense" : "waypoint"; }

inline TransferMode parse_mode(const std::string& s) {
  if (s == "dense") return TransferMode::Dense;
  if (s == "waypoint") return TransferMode::Waypoint;
  throw Error(Stage::Input, "unknown mode '" + s + "' (expected dense or waypoint)");
}

/// One transferred trajectory for a given assignment.
struct TransferOutcome {
  Trajectory trajectory;
  Points initial;  // phi_global applied to the refined variables' sources
  RefineResult refinement;
  std::size_t sparse_targets = 0;
};

struct TransferResult {
  TransferMode mode = TransferMode::Dense;
  std::size_t target_points = 0, reference_points = 0;
  Clustering target_clusters, reference_clusters;
  Eigen::MatrixXd inter;
  ClusterMatchSet matches;
  std::vector<int> problem_clusters;                  // target cluster id per problem slot
  std::vector<std::vector<MapCandidate>> candidates;  // per problem slot
  std::vector<std::size_t> cluster_sizes;             // points per problem slot
  std::vector<Assignment> assignments;
  TransferOutcome best;
  std::vector<TransferOutcome> alternatives;
  std::vector<std::string> warnings;
  std::vector<std::pair<std::string, double>> timings_ms;
};

namespace detail {

/// Rounds to f32 and drops consecutive duplicates, remapping waypoints.
inline Trajectory finalize_trajectory(const Points& pts, const std::vector<std::uint64_t>& waypoints) {
  Trajectory q;
  q.points = pts;
  q = quantized(std::move(q));
  Trajectory out;
  std::vector<std::uint64_t> remap(q.points.size());
  for (std::size_t i = 0; i < q.points.size(); ++i) {
    if (out.points.empty() || q.points[i] != out.points.back()) out.points.push_back(q.points[i]);
    remap[i] = out.points.size() - 1;
  }
  for (auto w : waypoints) {
    const auto r = remap[w];
    if (out.waypoints.empty() || out.waypoints.back() != r) out.waypoints.push_back(r);
  }
  if (!out.waypoints.empty()) {
    out.waypoints.front() = 0;
    if (out.waypoints.back() != out.points.size() - 1) out.waypoints.push_back(out.points.size() - 1);
  }
  if (out.points.size() < 2) throw Error(Stage::Refine, "transferred trajectory collapsed to a single point");
  return out;
}

template <class Fn>
auto timed(std::vector<std::pair<std::string, double>>& log, Stage stage, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  auto record = [&] {
    const std::chrono::duration<double, std::milli> dt = std::chrono::steady_clock::now() - t0;
    log.emplace_back(stage_name(stage), dt.count());
  };
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      record();
    } else {
      auto r = fn();
      record();
      return r;
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(stage, e.what());
  }
}

}  // namespace detail

/// Shared per-run scene data reused across assignments.
struct TransferContext {
  const Scene* target = nullptr;
  const Scene* reference = nullptr;
  const Config* cfg = nullptr;
  KdTree3 target_tree;
  KdTree2 reference_xz;
  NavigableDensity density;
  std::shared_ptr<OccupancyGrid> reference_grid;
};

/// Warps `traj` through `phi` and refines (dense) or refines the warped
/// waypoints and re-plans between them (waypoint).
inline TransferOutcome transfer_with_map(const TransferContext& ctx, const SmoothMap& phi, const Trajectory& traj,
                                         TransferMode mode) {
  const Config& cfg = *ctx.cfg;
  Points src;
  if (mode == TransferMode::Dense) {
    src = traj.points;
  } else {
    if (traj.waypoints.empty())
      throw Error(Stage::Input, "trajectory has no waypoint_indices; waypoint mode needs them");
    for (auto w : traj.waypoints) src.push_back(traj.points[w]);
  }
  TransferOutcome out;
  out.initial = phi.apply(src);
  const auto targets = sparse_feature_targets(src, out.initial, *ctx.target, ctx.target_tree, *ctx.reference,
                                              ctx.reference_xz, cfg.feat_search_radius, cfg.sparse_count,
                                              cfg.feat_interp_k);
  out.sparse_targets = targets.size();
  RefineWeights w{cfg.refine_lambda_shape, cfg.refine_lambda_anchor, cfg.refine_lambda_nav, cfg.refine_lambda_feat};
  const RefinementState state = make_state(src, out.initial, w, ctx.density, targets);
  out.refinement = refine(state, cfg.refine_steps, cfg.refine_lr, cfg.workers, cfg.refine_knot_spacing);

  if (mode == TransferMode::Dense) {
    out.trajectory = detail::finalize_trajectory(out.refinement.points, traj.waypoints);
  } else {
    Trajectory planned = plan_through(*ctx.reference_grid, out.refinement.points, cfg.snap_radius);
    out.trajectory = detail::finalize_trajectory(planned.points, planned.waypoints);
  }
  return out;
}

/// End-to-end transfer of `traj` from `target_in` into `reference_in`.
/// `alternatives` extra outcomes are produced from the next-best assignments.
inline TransferResult transfer(const Scene& target_in, const Scene& reference_in, const Trajectory& traj,
                               const Config& cfg, TransferMode mode, int alternatives = 0) {
  cfg.validate();
  validate(traj);
  if (mode == TransferMode::Waypoint && traj.waypoints.empty())
    throw Error(Stage::Input, "trajectory has no waypoint_indices; waypoint mode needs them");

  TransferResult res;
  res.mode = mode;
  auto& log = res.timings_ms;

  Scene tgt, ref;
  detail::timed(log, Stage::Input, [&] {
    tgt = cfg.voxel_size > 0 ? voxel_downsample(target_in, cfg.voxel_size) : target_in;
    ref = cfg.voxel_size > 0 ? voxel_downsample(reference_in, cfg.voxel_size) : reference_in;
  });
  res.target_points = tgt.size();
  res.reference_points = ref.size();
  const Points ref_nav = navigable_points(ref);

  ObjectGraph tg, rg;
  detail::timed(log, Stage::Graph, [&] {
    tg = build_object_graph(tgt);
    rg = build_object_graph(ref);
    res.target_clusters = cluster_objects(tg, cfg.cluster_target_size);
    res.reference_clusters = cluster_objects(rg, cfg.cluster_target_size);
  });

  detail::timed(log, Stage::Matching, [&] {
    const AffinityMatrix aff = build_affinity(tg, rg, cfg.affinity_eps, cfg.affinity_normalize);
    const SoftAssignment sa = match_graphs(aff, cfg.power_iterations, cfg.power_tolerance, cfg.sinkhorn_sweeps);
    if (!sa.converged) res.warnings.push_back("graph matching power iteration did not converge");
    res.inter = aggregate_clusters(sa.x, res.target_clusters, res.reference_clusters);
    const double threshold = cfg.merge_threshold_ratio * (res.inter.size() ? res.inter.maxCoeff() : 0.0);
    res.matches = select_top_k(res.inter, cfg.top_k, threshold, res.target_clusters.centroids);
    for (const auto& w : res.matches.warnings) res.warnings.push_back(w);
    apply_merges(tg, res.matches, res.target_clusters);
    propagate_regions(tgt, tg, res.target_clusters);
    propagate_regions(ref, rg, res.reference_clusters);
  });

  TransferContext ctx;
  ctx.target = &tgt;
  ctx.reference = &ref;
  ctx.cfg = &cfg;
  ctx.target_tree = KdTree3(tgt.points);
  {
    std::vector<Vec2> all_xz;
    all_xz.reserve(ref.size());
    for (const auto& p : ref.points) all_xz.push_back(xz(p));
    ctx.reference_xz = KdTree2(std::move(all_xz));
  }

  const auto tmembers = cluster_members(res.target_clusters);
  const auto rmembers = cluster_members(res.reference_clusters);

  // Candidate maps per unmerged target cluster with at least one match.
  detail::timed(log, Stage::Maps, [&] {
    const KdTree3 ref_scene(ref.points);
    std::map<int, PointSet> ref_sets;
    auto points_of = [](const Scene& s, const std::vector<std::size_t>& idx, bool objects_only) {
      Points out;
      for (auto i : idx)
        if (!objects_only || !s.is_open(i)) out.push_back(s.points[i]);
      return out;
    };
    auto nodes_of = [](const ObjectGraph& g, const Clustering& cl, int c) {
      std::vector<Vec3> out;
      for (std::size_t n = 0; n < g.size(); ++n)
        if (cl.node_cluster[n] == c) out.push_back(g.nodes[n].centroid);
      return out;
    };
    for (int k = 0; k < res.target_clusters.count(); ++k) {
      if (res.matches.merged.count(k) || tmembers[k].empty()) continue;
      const auto matches = res.matches.for_target(k);
      if (matches.empty()) continue;
      const Points tpts = points_of(tgt, tmembers[k], false);
      const Points tobj = points_of(tgt, tmembers[k], true);
      if (tobj.empty()) continue;
      Points controls;
      for (auto i : farthest_point_sample(tpts, iota_indices(tpts.size()), static_cast<std::size_t>(cfg.candidate_controls)))
        controls.push_back(tpts[i]);
      std::vector<std::size_t> eval_idx;
      for (auto i : farthest_point_sample(tpts, iota_indices(tpts.size()), static_cast<std::size_t>(cfg.feature_eval_points)))
        eval_idx.push_back(tmembers[k][i]);
      const PointSet eval(tgt, eval_idx);

      std::vector<MapCandidate> all;
      for (const auto& m : matches) {
        if (rmembers[m.reference].empty()) continue;
        auto it = ref_sets.find(m.reference);
        if (it == ref_sets.end()) it = ref_sets.emplace(m.reference, PointSet(ref, rmembers[m.reference])).first;
        ClusterPairData d;
        d.tgt_cluster = k;
        d.ref_cluster = m.reference;
        d.match_rank = m.rank;
        d.tgt_object_points = tobj;
        d.ref_object_points = points_of(ref, rmembers[m.reference], true);
        d.tgt_nodes = nodes_of(tg, res.target_clusters, k);
        d.ref_nodes = nodes_of(rg, res.reference_clusters, m.reference);
        d.tgt_controls = controls;
        d.tgt_eval = &eval;
        d.ref_cluster_set = &it->second;
        d.ref_scene = &ref_scene;
        d.lambda = cfg.tps_lambda_scale * bbox_diagonal(controls);
        if (d.ref_object_points.empty() || d.ref_nodes.empty()) continue;
        auto c = fit_cluster_candidates(d, cfg);
        all.insert(all.end(), std::make_move_iterator(c.begin()), std::make_move_iterator(c.end()));
      }
      if (all.empty()) {
        res.warnings.push_back("target cluster " + std::to_string(k) + " has no map candidates; skipped");
        continue;
      }
      res.problem_clusters.push_back(k);
      res.candidates.push_back(std::move(all));
      res.cluster_sizes.push_back(tmembers[k].size());
    }
  });
  if (res.problem_clusters.empty()) throw Error(Stage::Maps, "no target cluster produced a map candidate");

  // Assembly.
  std::vector<Points> cluster_points(res.problem_clusters.size());
  for (std::size_t s = 0; s < res.problem_clusters.size(); ++s)
    for (auto i : tmembers[res.problem_clusters[s]]) cluster_points[s].push_back(tgt.points[i]);

  detail::timed(log, Stage::Assembly, [&] {
    const std::size_t n = res.problem_clusters.size();
    std::map<int, std::size_t> slot_of;
    for (std::size_t s = 0; s < n; ++s) slot_of[res.problem_clusters[s]] = s;
    std::vector<Points> traj_by_slot(n);
    for (const auto& t : traj.points) {
      const int c = res.target_clusters.point_cluster[ctx.target_tree.nearest(t).first];
      if (auto it = slot_of.find(c); it != slot_of.end()) traj_by_slot[it->second].push_back(t);
    }
    std::vector<Vec2> nav_xz;
    for (const auto& p : ref_nav) nav_xz.push_back(xz(p));
    const KdTree2 nav_tree(std::move(nav_xz));

    AssemblyProblem prob;
    prob.resize(n);
    prob.lambda_feat = cfg.assembly_lambda_feat;
    prob.lambda_distort = cfg.assembly_lambda_distort;
    prob.lambda_nav = cfg.assembly_lambda_nav;
    for (std::size_t s = 0; s < n; ++s) {
      for (const auto& c : res.candidates[s]) {
        prob.feat[s].push_back(c.feat_cost);
        prob.nav[s].push_back(navigability_cost(c.map, traj_by_slot[s], nav_tree, cfg.nav_delta));
      }
    }
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        const auto seed = split_seed(cfg.seed, {static_cast<std::uint64_t>(Stage::Assembly),
                                                static_cast<std::uint64_t>(res.problem_clusters[a]),
                                                static_cast<std::uint64_t>(res.problem_clusters[b])});
        const PairSample pairs = sample_pairs(cluster_points[a].size(), cluster_points[b].size(), cfg.distort_pairs, seed);
        const auto& ca = res.candidates[a];
        const auto& cb = res.candidates[b];
        auto& table = prob.distort[a][b];
        table.assign(ca.size() * cb.size(), 0.0);
        parallel_for(ca.size(), cfg.workers, [&](std::size_t i) {
          for (std::size_t j = 0; j < cb.size(); ++j)
            table[i * cb.size() + j] = distortion_cost(ca[i].map, cb[j].map, cluster_points[a], cluster_points[b], pairs);
        });
      }
    }
    for (std::size_t s = 0; s < n; ++s) prob.order.push_back(static_cast<int>(s));
    std::stable_sort(prob.order.begin(), prob.order.end(), [&](int x, int y) {
      return res.cluster_sizes[x] > res.cluster_sizes[y];
    });
    res.assignments = beam_search(prob, cfg.beam_width);
  });
  if (res.assignments.empty()) throw Error(Stage::Assembly, "beam search produced no assignment");

  Points all_tgt;
  for (const auto& pts : cluster_points) all_tgt.insert(all_tgt.end(), pts.begin(), pts.end());
  const double global_lambda = cfg.tps_lambda_scale * bbox_diagonal(all_tgt);
  auto global_map = [&](const Assignment& a) {
    std::vector<const SmoothMap*> maps(res.problem_clusters.size(), nullptr);
    for (std::size_t s = 0; s < maps.size(); ++s)
      if (a.choice[s] >= 0) maps[s] = &res.candidates[s][a.choice[s]].map;
    return merge_global_map(maps, cluster_points, cfg.merge_samples, global_lambda);
  };

  detail::timed(log, Stage::Refine, [&] {
    ctx.density = NavigableDensity(ref_nav, cfg.kde_bandwidth, cfg.kde_cutoff_sigmas);
    if (mode == TransferMode::Waypoint)
      ctx.reference_grid = std::make_shared<OccupancyGrid>(build_grid(ref, cfg.grid_resolution, cfg.grid_inflation));
  });

  auto run = [&](const Assignment& a) {
    SmoothMap phi;
    detail::timed(log, Stage::Assembly, [&] { phi = global_map(a); });
    const Stage st = mode == TransferMode::Dense ? Stage::Refine : Stage::Plan;
    return detail::timed(log, st, [&] { return transfer_with_map(ctx, phi, traj, mode); });
  };
  res.best = run(res.assignments.front());
  if (res.best.refinement.failed) res.warnings.push_back("refinement hit a non-finite energy; returned the initial transfer");
  for (int r = 1; r <= alternatives && static_cast<std::size_t>(r) < res.assignments.size(); ++r)
    res.alternatives.push_back(run(res.assignments[static_cast<std::size_t>(r)]));
  if (alternatives >= static_cast<int>(res.assignments.size()))
    res.warnings.push_back("requested " + std::to_string(alternatives) + " alternatives; only " +
                           std::to_string(res.assignments.size() - 1) + " available");
  return res;
}

}  // namespace atx
