#include <sstream>

#include <gtest/gtest.h>

#include "atx/metrics.hpp"
#include "atx/synth.hpp"

using namespace atx;

namespace {

SynthSpec small_spec(std::uint64_t seed) {
  SynthSpec s;
  s.groups = 2;
  s.seed = seed;
  return s;
}

float cosine(const Scene& a, std::size_t i, const Scene& b, std::size_t j) {
  const auto fa = a.features.col(static_cast<Eigen::Index>(i)), fb = b.features.col(static_cast<Eigen::Index>(j));
  return fa.dot(fb) / (fa.norm() * fb.norm());
}

}  // namespace

TEST(Synth, IdentityPerturbationCopiesObjects) {
  const SynthPair p = generate_pair(small_spec(1));
  ASSERT_FALSE(p.object_point_pairs.empty());
  for (const auto& [t, r] : p.object_point_pairs) {
    EXPECT_LT((p.target.points[t] - p.reference.points[r]).norm(), 1e-6);
    EXPECT_EQ(p.target.features.col(static_cast<Eigen::Index>(t)), p.reference.features.col(static_cast<Eigen::Index>(r)));
  }
  EXPECT_EQ(p.target.size(), p.reference.size());
  EXPECT_LT(trajectory_aed(p.src_trajectory.points, p.gt_trajectory.points), 1e-6);
}

TEST(Synth, GroupJitterIsATranslation) {
  SynthSpec s = small_spec(2);
  s.jitter_sigma = 0.3;
  const SynthPair p = generate_pair(s);
  for (const auto& [t, r] : p.object_point_pairs) {
    const int g = p.target_objects[static_cast<std::size_t>(p.target.instance_id[t])].group;
    const Vec3 d = p.reference.points[r] - p.target.points[t];
    EXPECT_LT((d - p.gt_map.jitters[static_cast<std::size_t>(g)]).norm(), 1e-5);
    EXPECT_NEAR(d.y(), 0.0, 1e-6);
  }
}

TEST(Synth, ObjectPointsFollowGroundTruthMap) {
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    SynthSpec s = random_spec(seed, 0.3, 0.0);
    const SynthPair p = generate_pair(s);
    for (const auto& [t, r] : p.object_point_pairs) {
      const int g = p.target_objects[static_cast<std::size_t>(p.target.instance_id[t])].group;
      EXPECT_LT((p.gt_map(p.target.points[t], g) - p.reference.points[r]).norm(), 1e-5);
    }
  }
}

TEST(Synth, TwinFeaturesAgreeAndIdentitiesDiffer) {
  const SynthPair p = generate_pair(random_spec(6));
  for (const auto& [t, r] : p.object_point_pairs) EXPECT_GT(cosine(p.target, t, p.reference, r), 0.95f);
  // One representative point per object; distinct identities are far apart.
  std::vector<std::size_t> rep(p.target_objects.size(), SIZE_MAX);
  for (std::size_t i = 0; i < p.target.size(); ++i) {
    const auto id = p.target.instance_id[i];
    if (id >= 0 && rep[static_cast<std::size_t>(id)] == SIZE_MAX) rep[static_cast<std::size_t>(id)] = i;
  }
  for (std::size_t a = 0; a < rep.size(); ++a)
    for (std::size_t b = a + 1; b < rep.size(); ++b) EXPECT_LT(cosine(p.target, rep[a], p.target, rep[b]), 0.5f);
}

TEST(Synth, TrajectoriesAreCollisionFree) {
  const Config cfg;
  for (std::uint64_t seed : {7u, 8u, 9u, 10u}) {
    const SynthPair p = generate_pair(random_spec(seed), cfg);
    EXPECT_DOUBLE_EQ(collision_ratio(p.src_trajectory.points, p.target, cfg.collision_threshold), 0.0);
    EXPECT_DOUBLE_EQ(collision_ratio(p.gt_trajectory.points, p.reference, cfg.collision_threshold), 0.0);
    EXPECT_EQ(p.src_trajectory.waypoints.size(), static_cast<std::size_t>(p.spec.waypoints));
    EXPECT_EQ(p.gt_trajectory.waypoints.size(), p.src_trajectory.waypoints.size());
    EXPECT_NO_THROW(validate(p.src_trajectory));
    EXPECT_NO_THROW(validate(p.gt_trajectory));
  }
}

TEST(Synth, FreeCountsMatchNavigablePoints) {
  const SynthPair p = generate_pair(random_spec(11));
  EXPECT_EQ(navigable_points(p.target).size(), p.target_free_count);
  EXPECT_EQ(navigable_points(p.reference).size(), p.reference_free_count);
}

TEST(Synth, Deterministic) {
  const SynthSpec s = random_spec(12);
  const SynthPair a = generate_pair(s), b = generate_pair(s);
  EXPECT_EQ(encode_scene(a.target), encode_scene(b.target));
  EXPECT_EQ(encode_scene(a.reference), encode_scene(b.reference));
  EXPECT_EQ(encode_trajectory(a.gt_trajectory), encode_trajectory(b.gt_trajectory));
  EXPECT_EQ(sidecar_text(a), sidecar_text(b));
  EXPECT_NE(encode_scene(generate_pair(random_spec(13)).target), encode_scene(a.target));
}

TEST(Synth, ScaleAppliesToRoom) {
  SynthSpec s = small_spec(14);
  s.scale = 1.2;
  s.quarter_turns = 1;
  const SynthPair p = generate_pair(s);
  Vec2 lo = Vec2::Constant(1e9), hi = -lo;
  for (const auto& q : p.reference.points) lo = lo.cwiseMin(xz(q)), hi = hi.cwiseMax(xz(q));
  // Floor samples sit at cell centers inside the scaled room.
  for (double extent : {hi.x() - lo.x(), hi.y() - lo.y()}) {
    EXPECT_LE(extent, 9.0 * 1.2);
    EXPECT_GE(extent, 9.0 * 1.2 - 2 * s.floor_spacing - 1e-5);
  }
}

TEST(Synth, RejectsBadSpecs) {
  SynthSpec s;
  s.feature_dim = 8;
  EXPECT_THROW(generate_pair(s), Error);
  s = SynthSpec{};
  s.scale = 0;
  EXPECT_THROW(generate_pair(s), Error);
}

TEST(FarthestPointSample, EachPickIsFarthestFromPrevious) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(0, 10);
  Points pts;
  for (int i = 0; i < 200; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  const auto idx = farthest_point_sample(pts, iota_indices(pts.size()), 20, 3);
  ASSERT_EQ(idx.size(), 20u);
  EXPECT_EQ(idx[0], 3u);
  for (std::size_t k = 1; k < idx.size(); ++k) {
    auto gap = [&](std::size_t i) {
      double d = 1e300;
      for (std::size_t j = 0; j < k; ++j) d = std::min(d, (pts[i] - pts[idx[j]]).norm());
      return d;
    };
    const double chosen = gap(idx[k]);
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_LE(gap(i), chosen + 1e-12);
  }
}

TEST(SpecText, ParsesFamilyAndOverrides) {
  std::istringstream in("family = 21\nscale = 1.1 # override\njitter_sigma=0\n");
  const SynthSpec s = parse_synth_spec(in);
  const SynthSpec f = random_spec(21);
  EXPECT_EQ(s.seed, 21u);
  EXPECT_EQ(s.groups, f.groups);
  EXPECT_EQ(s.quarter_turns, f.quarter_turns);
  EXPECT_DOUBLE_EQ(s.scale, 1.1);
  EXPECT_DOUBLE_EQ(s.jitter_sigma, 0.0);
}

TEST(SpecText, RejectsUnknownKeys) {
  std::istringstream bad("colour = red\n");
  EXPECT_THROW(parse_synth_spec(bad), Error);
  std::istringstream no_eq("groups 3\n");
  EXPECT_THROW(parse_synth_spec(no_eq), Error);
  SynthSpec s;
  EXPECT_THROW(set_spec_value(s, "flip_x", "perhaps"), Error);
}

TEST(SpecText, RandomSpecStaysInFamily) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const SynthSpec s = random_spec(seed);
    EXPECT_GE(s.groups, 2);
    EXPECT_LE(s.groups, 4);
    EXPECT_GE(s.quarter_turns, 0);
    EXPECT_LT(s.quarter_turns, 4);
    EXPECT_GE(s.scale, 0.8 - 1e-12);
    EXPECT_LE(s.scale, 1.25 + 1e-12);
  }
}
