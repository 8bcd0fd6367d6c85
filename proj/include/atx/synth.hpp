#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "atx/common.hpp"
#include "atx/config.hpp"
#include "atx/maps.hpp"
#include "atx/plan.hpp"
#include "atx/sampling.hpp"
#include "atx/scene_io.hpp"

namespace atx {

/// Parameters of a synthetic scene pair. The reference scene is the target
/// scene with each object group moved by (global similarity + group jitter).
struct SynthSpec {
  double room_width = 9.0;  // x extent
  double room_depth = 9.0;  // z extent
  int groups = 3;
  int objects_per_group = 4;
  double group_radius = 1.6;
  double min_size = 0.4, max_size = 0.8;      // footprint edge lengths
  double min_height = 0.4, max_height = 1.2;
  double min_gap = 1.0;                        // corridor width between footprints / walls
  int feature_dim = 32;
  double surface_spacing = 0.1;
  double floor_spacing = 0.1;
  std::uint64_t seed = 0;
  int waypoints = 4;  // source trajectory waypoints
  double waypoint_margin = 0.75;  // waypoint clearance from the room walls

  // perturbation
  int quarter_turns = 0;  // global y-rotation in multiples of 90 degrees
  bool flip_x = false;
  double scale = 1.0;
  double jitter_sigma = 0.0;
  double point_noise = 0.0;
};

/// Footprint-aligned box object.
struct SynthObject {
  int group = 0;
  int identity = 0;  // index of the one-hot identity feature dimension
  Vec2 center = Vec2::Zero();  // XZ
  Vec2 half = Vec2::Zero();    // half extents (x, z)
  double height = 1.0;
};

/// Exact target -> reference correspondence. Object points use their group's
/// transform; open space blends group jitters by a Gaussian of the distance
/// to each group center.
struct GroundTruthMap {
  Mat3 linear = Mat3::Identity();
  std::vector<Vec3> group_centers;  // target frame
  std::vector<Vec3> jitters;        // reference-frame translations per group
  double blend_sigma = 1.5;

  Vec3 operator()(const Vec3& x, int group = -1) const {
    if (group >= 0) return linear * x + jitters[group];
    Vec3 j = Vec3::Zero();
    double wsum = 0.0;
    for (std::size_t g = 0; g < group_centers.size(); ++g) {
      Vec2 d = xz(x) - xz(group_centers[g]);
      const double w = std::exp(-d.squaredNorm() / (2 * blend_sigma * blend_sigma));
      j += w * jitters[g];
      wsum += w;
    }
    if (wsum > 1e-300) j /= wsum;
    else j = jitters.empty() ? Vec3::Zero() : jitters.front();
    return linear * x + j;
  }
};

struct SynthPair {
  SynthSpec spec;
  Scene target, reference;
  std::vector<SynthObject> target_objects, reference_objects;
  GroundTruthMap gt_map;
  std::vector<std::pair<std::size_t, std::size_t>> object_point_pairs;  // target index -> reference index
  std::size_t target_free_count = 0, reference_free_count = 0;
  Trajectory src_trajectory;
  Trajectory gt_trajectory;
};

namespace synth_detail {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline double normal(std::mt19937_64& rng) {
  // Box-Muller; portable across standard libraries.
  const double u1 = std::max(uniform(rng, 0.0, 1.0), 1e-300), u2 = uniform(rng, 0.0, 1.0);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double footprint_gap(const SynthObject& a, const SynthObject& b) {
  const Vec2 d = ((a.center - b.center).cwiseAbs() - a.half - b.half).cwiseMax(0.0);
  const Vec2 sep = (a.center - b.center).cwiseAbs() - a.half - b.half;
  if (sep.x() < 0 && sep.y() < 0) return std::max(sep.x(), sep.y());  // overlap: negative
  return d.norm();
}

inline double distance_to_footprint(const Vec2& p, const SynthObject& o) {
  const Vec2 d = ((p - o.center).cwiseAbs() - o.half).cwiseMax(0.0);
  return d.norm();
}

inline bool inside_footprint(const Vec2& p, const SynthObject& o) {
  const Vec2 d = (p - o.center).cwiseAbs() - o.half;
  return d.x() <= 0 && d.y() <= 0;
}

struct Layout {
  Vec2 lo, hi;  // room bounds (XZ)
};

inline bool fits(const SynthObject& o, const std::vector<SynthObject>& placed, const Layout& room, double gap) {
  if ((o.center - o.half - room.lo).minCoeff() < gap) return false;
  if ((room.hi - o.center - o.half).minCoeff() < gap) return false;
  for (const auto& p : placed)
    if (footprint_gap(o, p) < gap) return false;
  return true;
}

/// Feature layout: [instance identities | floor | 8 context dims | 4 profile dims | padding].
struct FeatureLayout {
  int identities = 0;
  int dim = 0;
  int floor() const { return identities; }
  int context() const { return identities + 1; }
  int profile() const { return identities + 9; }
  int required() const { return identities + 13; }
};

inline Eigen::VectorXd context_vector(const Vec2& local) {
  Eigen::VectorXd c(8);
  int k = 0;
  for (double period : {2.5, 6.0}) {
    const double w = 2.0 * std::numbers::pi / period;
    c[k++] = std::cos(w * local.x());
    c[k++] = std::sin(w * local.x());
    c[k++] = std::cos(w * local.y());
    c[k++] = std::sin(w * local.y());
  }
  return c / 2.0;  // unit norm
}

inline Eigen::VectorXf object_feature(const FeatureLayout& fl, int identity, const Vec2& local) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(fl.dim);
  f[identity] = 0.7;
  f.segment(fl.context(), 8) = 0.3 * context_vector(local);
  return (f / f.norm()).cast<float>();
}

inline Eigen::VectorXf open_feature(const FeatureLayout& fl, int near_identity, double dist, double near_size,
                                    const Vec2& local) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(fl.dim);
  f[fl.floor()] = 0.5;
  f[near_identity] = 0.5 * std::exp(-dist / 0.5);
  const double u = dist / std::max(near_size, 1e-6);
  const double centers[4] = {0.0, 1.0, 2.0, 4.0};
  for (int k = 0; k < 4; ++k) f[fl.profile() + k] = 0.3 * std::exp(-(u - centers[k]) * (u - centers[k]) / 0.5);
  f.segment(fl.context(), 8) = 0.3 * context_vector(local);
  return (f / f.norm()).cast<float>();
}

}  // namespace synth_detail

/// Builds one scene from object boxes: surface samples on top and sides,
/// a floor grid outside the footprints. `local_of(x, group)` gives the
/// group-frame coordinates used for the context features; `noise` perturbs
/// object points.
template <class LocalFn>
Scene build_synth_scene(const std::vector<SynthObject>& objects, const synth_detail::Layout& room,
                        const std::vector<Vec2>& group_centers_here, const synth_detail::FeatureLayout& fl,
                        double surface_spacing, double floor_spacing, LocalFn&& local_of, std::size_t* free_count,
                        std::vector<std::vector<Vec3>>* object_samples = nullptr) {
  using namespace synth_detail;
  Points pts;
  std::vector<std::int32_t> ids;
  std::vector<Eigen::VectorXf> feats;

  for (std::size_t o = 0; o < objects.size(); ++o) {
    const auto& ob = objects[o];
    std::vector<Vec3> samples;
    if (object_samples) {
      samples = (*object_samples)[o];
    } else {
      const Vec2 lo = ob.center - ob.half, hi = ob.center + ob.half;
      const int nx = std::max(2, static_cast<int>(std::ceil((hi.x() - lo.x()) / surface_spacing)) + 1);
      const int nz = std::max(2, static_cast<int>(std::ceil((hi.y() - lo.y()) / surface_spacing)) + 1);
      const int ny = std::max(2, static_cast<int>(std::ceil(ob.height / surface_spacing)) + 1);
      for (int i = 0; i < nx; ++i)
        for (int k = 0; k < nz; ++k)
          samples.emplace_back(lo.x() + (hi.x() - lo.x()) * i / (nx - 1), ob.height,
                               lo.y() + (hi.y() - lo.y()) * k / (nz - 1));
      for (int j = 0; j + 1 < ny; ++j) {
        const double y = ob.height * j / (ny - 1);
        for (int i = 0; i < nx; ++i) {
          const double x = lo.x() + (hi.x() - lo.x()) * i / (nx - 1);
          samples.emplace_back(x, y, lo.y());
          samples.emplace_back(x, y, hi.y());
        }
        for (int k = 1; k + 1 < nz; ++k) {
          const double z = lo.y() + (hi.y() - lo.y()) * k / (nz - 1);
          samples.emplace_back(lo.x(), y, z);
          samples.emplace_back(hi.x(), y, z);
        }
      }
    }
    for (const auto& s : samples) {
      pts.push_back(s);
      ids.push_back(static_cast<std::int32_t>(o));
      feats.push_back(object_feature(fl, ob.identity, local_of(s, ob.group)));
    }
  }

  std::size_t nfree = 0;
  const int fx = static_cast<int>(std::floor((room.hi.x() - room.lo.x()) / floor_spacing));
  const int fz = static_cast<int>(std::floor((room.hi.y() - room.lo.y()) / floor_spacing));
  for (int k = 0; k < fz; ++k) {
    for (int i = 0; i < fx; ++i) {
      const Vec2 p(room.lo.x() + (i + 0.5) * floor_spacing, room.lo.y() + (k + 0.5) * floor_spacing);
      double best = std::numeric_limits<double>::infinity();
      std::size_t near = 0;
      bool blocked = false;
      for (std::size_t o = 0; o < objects.size(); ++o) {
        if (inside_footprint(p, objects[o])) blocked = true;
        const double d = distance_to_footprint(p, objects[o]);
        if (d < best) best = d, near = o;
      }
      if (blocked) continue;
      std::size_t g = 0;
      double gd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < group_centers_here.size(); ++c) {
        const double d = (p - group_centers_here[c]).squaredNorm();
        if (d < gd) gd = d, g = c;
      }
      const Vec3 x(p.x(), 0.0, p.y());
      pts.push_back(x);
      ids.push_back(-1);
      feats.push_back(open_feature(fl, objects[near].identity, best, objects[near].half.maxCoeff(),
                                   local_of(x, static_cast<int>(g))));
      ++nfree;
    }
  }
  if (free_count) *free_count = nfree;

  Scene s;
  s.points = std::move(pts);
  s.instance_id = std::move(ids);
  s.features.resize(fl.dim, static_cast<Eigen::Index>(feats.size()));
  for (std::size_t i = 0; i < feats.size(); ++i) s.features.col(static_cast<Eigen::Index>(i)) = feats[i];
  canonicalize(s);
  return s;
}

/// Waypoints by farthest-point sampling over the navigable points at least
/// `margin` inside the scene's XZ bounds (seeded start, then the point
/// farthest from it), joined by A*.
inline Trajectory generate_trajectory(const Scene& scene, int n_waypoints, std::uint64_t seed, const Config& cfg = {},
                                      double margin = 0.0) {
  if (n_waypoints < 2) throw Error(Stage::Synth, "need at least 2 waypoints");
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
  for (const auto& p : scene.points) lo = lo.cwiseMin(xz(p)), hi = hi.cwiseMax(xz(p));
  Points nav;
  for (const auto& p : navigable_points(scene)) {
    const Vec2 q = xz(p);
    if ((q - lo).minCoeff() >= margin && (hi - q).minCoeff() >= margin) nav.push_back(p);
  }
  if (nav.size() < static_cast<std::size_t>(n_waypoints)) throw Error(Stage::Synth, "too few navigable waypoint candidates");
  std::mt19937_64 rng(seed);
  const std::size_t r0 = rng() % nav.size();
  std::size_t start = 0;
  double far = -1;
  for (std::size_t i = 0; i < nav.size(); ++i) {
    const double d = (nav[i] - nav[r0]).squaredNorm();
    if (d > far) far = d, start = i;
  }
  const auto idx = farthest_point_sample(nav, iota_indices(nav.size()), static_cast<std::size_t>(n_waypoints), start);
  Points wps;
  for (auto i : idx) wps.push_back(nav[i]);
  const OccupancyGrid grid = build_grid(scene, cfg.grid_resolution, cfg.grid_inflation);
  return plan_through(grid, wps, cfg.snap_radius);
}

/// Generates a target scene, its perturbed reference twin, the ground-truth
/// map and a source / ground-truth trajectory pair.
inline SynthPair generate_pair(const SynthSpec& spec, const Config& cfg = {}) {
  using namespace synth_detail;
  if (spec.groups < 1 || spec.objects_per_group < 1) throw Error(Stage::Synth, "need at least one group and object");
  if (!(spec.scale > 0)) throw Error(Stage::Synth, "scale must be > 0");
  std::mt19937_64 rng(split_seed(spec.seed, {1}));
  SynthPair out;
  out.spec = spec;

  Layout room{{-spec.room_width / 2, -spec.room_depth / 2}, {spec.room_width / 2, spec.room_depth / 2}};
  FeatureLayout fl;
  fl.identities = spec.groups * spec.objects_per_group;
  fl.dim = spec.feature_dim;
  if (fl.dim < fl.required())
    throw Error(Stage::Synth, "feature_dim must be >= " + std::to_string(fl.required()));

  // Layout by whole-layout rejection sampling: group centers, then objects
  // around them; any failure restarts the layout.
  std::vector<Vec2> centers;
  const double inset = spec.group_radius + spec.min_gap;
  bool placed_layout = false;
  for (int attempt = 0; attempt < 1000 && !placed_layout; ++attempt) {
    centers.clear();
    out.target_objects.clear();
    bool ok = true;
    for (int g = 0; g < spec.groups && ok; ++g) {
      ok = false;
      for (int t = 0; t < 100 && !ok; ++t) {
        Vec2 c(uniform(rng, room.lo.x() + inset, room.hi.x() - inset), uniform(rng, room.lo.y() + inset, room.hi.y() - inset));
        ok = std::all_of(centers.begin(), centers.end(), [&](const Vec2& o) {
          return (o - c).norm() >= 2 * spec.group_radius + spec.min_gap;
        });
        if (ok) centers.push_back(c);
      }
    }
    for (int g = 0; g < spec.groups && ok; ++g) {
      for (int k = 0; k < spec.objects_per_group && ok; ++k) {
        SynthObject o;
        o.group = g;
        o.identity = g * spec.objects_per_group + k;
        ok = false;
        for (int t = 0; t < 1000 && !ok; ++t) {
          o.half = Vec2(uniform(rng, spec.min_size, spec.max_size), uniform(rng, spec.min_size, spec.max_size)) / 2;
          o.height = uniform(rng, spec.min_height, spec.max_height);
          const double r = spec.group_radius * std::sqrt(uniform(rng, 0, 1)), a = uniform(rng, 0, 2 * std::numbers::pi);
          o.center = centers[g] + r * Vec2(std::cos(a), std::sin(a));
          ok = fits(o, out.target_objects, room, spec.min_gap);
        }
        if (ok) out.target_objects.push_back(o);
      }
    }
    placed_layout = ok;
  }
  if (!placed_layout) throw Error(Stage::Synth, "could not place the layout after 1000 attempts");

  // Global similarity about the room center (origin).
  const Mat3 lin = spec.scale * rotation_y(spec.quarter_turns * std::numbers::pi / 2) *
                   reflection_matrix(spec.flip_x ? 1 : 0);
  out.gt_map.linear = lin;
  for (auto& c : centers) out.gt_map.group_centers.emplace_back(c.x(), 0.0, c.y());

  // Reference room: image of the target room.
  Layout ref_room;
  {
    Vec3 a = lin * Vec3(room.lo.x(), 0, room.lo.y()), b = lin * Vec3(room.hi.x(), 0, room.hi.y());
    ref_room.lo = xz(a).cwiseMin(xz(b));
    ref_room.hi = xz(a).cwiseMax(xz(b));
  }
  auto map_object = [&](const SynthObject& o, const Vec3& jit) {
    SynthObject r = o;
    r.center = xz(lin * Vec3(o.center.x(), 0, o.center.y()) + jit);
    const Vec3 h = (lin * Vec3(o.half.x(), 0, o.half.y())).cwiseAbs();
    r.half = xz(h);
    r.height = o.height * spec.scale;
    return r;
  };

  // Group jitter, rejection-sampled so the reference stays valid.
  const double ref_gap = 0.6 * std::min(1.0, spec.scale);
  std::vector<Vec3> jit(spec.groups, Vec3::Zero());
  bool placed = false;
  for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
    for (auto& j : jit)
      j = spec.jitter_sigma > 0 ? Vec3(spec.jitter_sigma * normal(rng), 0, spec.jitter_sigma * normal(rng)) : Vec3::Zero();
    std::vector<SynthObject> ref;
    placed = true;
    for (const auto& o : out.target_objects) {
      SynthObject r = map_object(o, jit[o.group]);
      if (!fits(r, ref, ref_room, ref_gap)) {
        placed = false;
        break;
      }
      ref.push_back(r);
    }
    if (placed) out.reference_objects = std::move(ref);
  }
  if (!placed) throw Error(Stage::Synth, "could not place jittered reference groups after 1000 attempts");
  out.gt_map.jitters = jit;

  // Target scene; group-local frame is the target frame minus the group center.
  auto tgt_local = [&](const Vec3& x, int g) { return Vec2(xz(x) - centers[g]); };
  out.target = build_synth_scene(out.target_objects, room, centers, fl, spec.surface_spacing, spec.floor_spacing,
                                 tgt_local, &out.target_free_count);

  // Reference object samples: mapped target samples plus noise.
  std::vector<std::vector<Vec3>> ref_samples(out.target_objects.size());
  std::vector<std::vector<std::size_t>> tgt_index(out.target_objects.size());
  for (std::size_t i = 0; i < out.target.size(); ++i) {
    const auto id = out.target.instance_id[i];
    if (id < 0) continue;
    const int g = out.target_objects[id].group;
    Vec3 p = out.gt_map(out.target.points[i], g);
    if (spec.point_noise > 0) p += spec.point_noise * Vec3(normal(rng), normal(rng), normal(rng));
    ref_samples[id].push_back(p);
    tgt_index[id].push_back(i);
  }
  std::vector<Vec2> ref_centers;
  for (int g = 0; g < spec.groups; ++g) ref_centers.push_back(xz(out.gt_map(out.gt_map.group_centers[g], g)));
  const Mat3 inv = lin.inverse();
  auto ref_local = [&](const Vec3& x, int g) {
    const Vec3 pre = inv * (x - jit[g]);
    return Vec2(xz(pre) - centers[g]);
  };
  out.reference = build_synth_scene(out.reference_objects, ref_room, ref_centers, fl, spec.surface_spacing,
                                    spec.floor_spacing, ref_local, &out.reference_free_count, &ref_samples);
  // Object features are copied from their target twins.
  {
    std::size_t r = 0;
    for (std::size_t id = 0; id < tgt_index.size(); ++id) {
      for (auto t : tgt_index[id]) {
        out.reference.features.col(static_cast<Eigen::Index>(r)) = out.target.features.col(static_cast<Eigen::Index>(t));
        out.object_point_pairs.emplace_back(t, r);
        ++r;
      }
    }
  }

  out.src_trajectory = generate_trajectory(out.target, spec.waypoints, split_seed(spec.seed, {2}), cfg, spec.waypoint_margin);
  Points gt_wps;
  for (auto w : out.src_trajectory.waypoints) gt_wps.push_back(out.gt_map(out.src_trajectory.points[w]));
  const OccupancyGrid ref_grid = build_grid(out.reference, cfg.grid_resolution, cfg.grid_inflation);
  out.gt_trajectory = plan_through(ref_grid, gt_wps, cfg.snap_radius);
  return out;
}

/// Draws a perturbation from the seed family: quarter-turn rotation,
/// optional x-flip, scale in [0.8, 1.25].
inline SynthSpec random_spec(std::uint64_t seed, double jitter_sigma = 0.3, double point_noise = 0.005) {
  std::mt19937_64 rng(split_seed(seed, {0}));
  SynthSpec s;
  s.seed = seed;
  s.groups = 2 + static_cast<int>(rng() % 3);  // 2..4
  s.objects_per_group = 4;
  s.room_width = s.room_depth = s.groups <= 2 ? 9.0 : (s.groups == 3 ? 11.0 : 12.0);
  s.quarter_turns = static_cast<int>(rng() % 4);
  s.flip_x = (rng() & 1) != 0;
  s.scale = std::exp(synth_detail::uniform(rng, std::log(0.8), std::log(1.25)));
  s.jitter_sigma = jitter_sigma;
  s.point_noise = point_noise;
  return s;
}

namespace synth_detail {

template <class Fn>
void visit_spec(SynthSpec& s, Fn&& fn) {
  fn("room_width", &s.room_width);
  fn("room_depth", &s.room_depth);
  fn("groups", &s.groups);
  fn("objects_per_group", &s.objects_per_group);
  fn("group_radius", &s.group_radius);
  fn("min_size", &s.min_size);
  fn("max_size", &s.max_size);
  fn("min_height", &s.min_height);
  fn("max_height", &s.max_height);
  fn("min_gap", &s.min_gap);
  fn("feature_dim", &s.feature_dim);
  fn("surface_spacing", &s.surface_spacing);
  fn("floor_spacing", &s.floor_spacing);
  fn("seed", &s.seed);
  fn("waypoints", &s.waypoints);
  fn("waypoint_margin", &s.waypoint_margin);
  fn("quarter_turns", &s.quarter_turns);
  fn("flip_x", &s.flip_x);
  fn("scale", &s.scale);
  fn("jitter_sigma", &s.jitter_sigma);
  fn("point_noise", &s.point_noise);
}

}  // namespace synth_detail

inline void set_spec_value(SynthSpec& spec, const std::string& key, const std::string& value) {
  bool found = false;
  synth_detail::visit_spec(spec, [&](const char* name, auto* field) {
    if (key != name) return;
    found = true;
    using T = std::remove_pointer_t<decltype(field)>;
    if constexpr (std::is_same_v<T, bool>) {
      if (value == "true" || value == "1") *field = true;
      else if (value == "false" || value == "0") *field = false;
      else throw Error(Stage::Input, "spec key '" + key + "': expected true/false");
    } else {
      *field = detail::parse_number<T>(key, value);
    }
  });
  if (!found) throw Error(Stage::Input, "unknown spec key '" + key + "'");
}

/// Flat `key = value` spec text. `family = <seed>` first draws a random
/// perturbation from the seed family; later keys override it.
inline SynthSpec parse_synth_spec(std::istream& in) {
  SynthSpec spec;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw Error(Stage::Input, "spec line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(std::string_view(t).substr(0, eq));
    const std::string value = detail::trim(std::string_view(t).substr(eq + 1));
    if (key == "family") spec = random_spec(detail::parse_number<std::uint64_t>(key, value));
    else set_spec_value(spec, key, value);
  }
  return spec;
}

/// Ground-truth sidecar: transform parameters and waypoint correspondences.
inline std::string sidecar_text(const SynthPair& p) {
  std::ostringstream os;
  os.precision(17);
  const auto& s = p.spec;
  os << "seed = " << s.seed << "\n";
  os << "quarter_turns = " << s.quarter_turns << "\n";
  os << "flip_x = " << (s.flip_x ? "true" : "false") << "\n";
  os << "scale = " << s.scale << "\n";
  os << "jitter_sigma = " << s.jitter_sigma << "\n";
  os << "point_noise = " << s.point_noise << "\n";
  os << "groups = " << s.groups << "\n";
  for (std::size_t g = 0; g < p.gt_map.jitters.size(); ++g) {
    const auto& c = p.gt_map.group_centers[g];
    const auto& j = p.gt_map.jitters[g];
    os << "group." << g << ".center = " << c.x() << "," << c.y() << "," << c.z() << "\n";
    os << "group." << g << ".jitter = " << j.x() << "," << j.y() << "," << j.z() << "\n";
  }
  os << "target_free_count = " << p.target_free_count << "\n";
  os << "reference_free_count = " << p.reference_free_count << "\n";
  const auto& src = p.src_trajectory;
  const auto& gt = p.gt_trajectory;
  os << "waypoints = " << src.waypoints.size() << "\n";
  for (std::size_t k = 0; k < src.waypoints.size(); ++k) {
    const Vec3& a = src.points[src.waypoints[k]];
    os << "waypoint." << k << ".target = " << a.x() << "," << a.y() << "," << a.z() << "\n";
    if (k < gt.waypoints.size()) {
      const Vec3& b = gt.points[gt.waypoints[k]];
      os << "waypoint." << k << ".reference = " << b.x() << "," << b.y() << "," << b.z() << "\n";
    }
  }
  return os.str();
}

}  // namespace atx
