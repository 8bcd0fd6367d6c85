#include <sstream>

#include <gtest/gtest.h>

#include "atx/config.hpp"

using namespace atx;

TEST(Config, Defaults) {
  const Config c;
  EXPECT_DOUBLE_EQ(c.voxel_size, 0.02);
  EXPECT_EQ(c.cluster_target_size, 4);
  EXPECT_EQ(c.top_k, 1);
  EXPECT_EQ(c.n_rotations, 4);
  EXPECT_EQ(c.top_m, 5);
  EXPECT_EQ(c.beam_width, 5);
  EXPECT_DOUBLE_EQ(c.assembly_lambda_feat, 1.0);
  EXPECT_DOUBLE_EQ(c.assembly_lambda_distort, 1.0);
  EXPECT_DOUBLE_EQ(c.assembly_lambda_nav, 1.0);
  EXPECT_DOUBLE_EQ(c.refine_lambda_shape, 1.0);
  EXPECT_DOUBLE_EQ(c.refine_lambda_anchor, 0.1);
  EXPECT_DOUBLE_EQ(c.kde_bandwidth, 0.2);
  EXPECT_DOUBLE_EQ(c.feat_search_radius, 1.0);
  EXPECT_EQ(c.sparse_count, 50);
  EXPECT_EQ(c.refine_steps, 200);
  EXPECT_DOUBLE_EQ(c.refine_lr, 0.02);
  EXPECT_DOUBLE_EQ(c.nav_delta, 0.25);
  EXPECT_DOUBLE_EQ(c.collision_threshold, 0.1);
  EXPECT_EQ(c.metric_samples, 256);
  EXPECT_EQ(c.inlier_thresholds, (std::vector<double>{0.75, 1.0, 1.25, 1.5, 2.0}));
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ParsesKeyValueText) {
  std::istringstream in("# comment\n top_k = 3\nassembly_lambda_nav=0 # off\nreport_timings = true\n"
                        "inlier_thresholds = 0.5, 1\nseed = 42\n");
  const Config c = parse_config(in);
  EXPECT_EQ(c.top_k, 3);
  EXPECT_DOUBLE_EQ(c.assembly_lambda_nav, 0.0);
  EXPECT_TRUE(c.report_timings);
  EXPECT_EQ(c.inlier_thresholds, (std::vector<double>{0.5, 1.0}));
  EXPECT_EQ(c.seed, 42u);
}

TEST(Config, RejectsBadInput) {
  std::istringstream unknown("nonsense = 1\n");
  EXPECT_THROW(parse_config(unknown), Error);
  std::istringstream no_eq("top_k 3\n");
  EXPECT_THROW(parse_config(no_eq), Error);
  std::istringstream not_num("top_k = three\n");
  EXPECT_THROW(parse_config(not_num), Error);
  std::istringstream neg("voxel_size = -1\n");
  EXPECT_THROW(parse_config(neg), Error);
  std::istringstream zero_k("top_k = 0\n");
  EXPECT_THROW(parse_config(zero_k), Error);
  std::istringstream neg_w("assembly_lambda_feat = -0.5\n");
  EXPECT_THROW(parse_config(neg_w), Error);
  Config c;
  EXPECT_THROW(set_config_value(c, "report_timings", "maybe"), Error);
}

TEST(Config, EntriesEchoEffectiveValues) {
  Config c;
  set_config_value(c, "beam_width", "7");
  set_config_value(c, "kde_bandwidth", "0.25");
  bool saw_beam = false, saw_bw = false;
  for (const auto& [k, v] : config_entries(c)) {
    if (k == "beam_width") saw_beam = (v == "7");
    if (k == "kde_bandwidth") saw_bw = (v == "0.25");
  }
  EXPECT_TRUE(saw_beam);
  EXPECT_TRUE(saw_bw);
}

TEST(Config, EntriesRoundTripThroughParser) {
  Config c;
  set_config_value(c, "refine_lr", "0.013");
  set_config_value(c, "affinity_normalize", "false");
  std::ostringstream text;
  for (const auto& [k, v] : config_entries(c)) text << k << " = " << v << "\n";
  std::istringstream in(text.str());
  const Config d = parse_config(in);
  EXPECT_EQ(config_entries(d), config_entries(c));
}
