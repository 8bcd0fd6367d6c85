#include <gtest/gtest.h>

#include "atx/report.hpp"
#include "atx/synth.hpp"

using namespace atx;

namespace {

struct Run {
  SynthPair pair;
  Config cfg;
  TransferResult result;
};

const Run& run() {
  static const Run r = [] {
    Run x;
    SynthSpec s;
    s.groups = 2;
    s.seed = 40;
    s.jitter_sigma = 0.2;
    x.pair = generate_pair(s);
    x.cfg.beam_width = 3;
    x.result = transfer(x.pair.target, x.pair.reference, x.pair.src_trajectory, x.cfg, TransferMode::Dense, 1);
    return x;
  }();
  return r;
}

std::vector<std::string> keys(const Json& j) {
  std::vector<std::string> k;
  for (auto it = j.begin(); it != j.end(); ++it) k.push_back(it.key());
  return k;
}

}  // namespace

TEST(Report, TopLevelKeyOrder) {
  const Json j = transfer_report(run().result, run().cfg);
  EXPECT_EQ(keys(j), (std::vector<std::string>{"config", "mode", "inputs", "clusters", "cluster_matches", "candidates",
                                               "assignment", "alternative_assignments", "refinement", "output",
                                               "warnings"}));
}

TEST(Report, EchoesEffectiveConfig) {
  const Json j = transfer_report(run().result, run().cfg);
  EXPECT_EQ(j["config"]["beam_width"], "3");
  EXPECT_EQ(j["config"].size(), config_entries(run().cfg).size() - 1);
  EXPECT_FALSE(j["config"].contains("workers"));
  EXPECT_EQ(j["mode"], "dense");
}

TEST(Report, TimingsAndMetricsAreOptIn) {
  Config cfg = run().cfg;
  cfg.report_timings = true;
  const MetricReport m = compute_metrics(run().result.best.trajectory, run().pair.gt_trajectory, cfg);
  const Json j = transfer_report(run().result, cfg, &m);
  ASSERT_TRUE(j.contains("timings_ms"));
  EXPECT_FALSE(j["timings_ms"].empty());
  ASSERT_TRUE(j.contains("metrics"));
  EXPECT_DOUBLE_EQ(j["metrics"]["trajectory_aed"].get<double>(), m.trajectory_aed);
  EXPECT_TRUE(j["metrics"]["inlier_ratio"].contains("0.75"));
}

TEST(Report, RefinementTraceAndOutput) {
  const auto& res = run().result;
  const Json j = transfer_report(res, run().cfg);
  EXPECT_EQ(j["refinement"]["trace"]["total"].size(), res.best.refinement.trace.size());
  EXPECT_EQ(j["output"]["points"], res.best.trajectory.points.size());
  EXPECT_EQ(j["alternative_assignments"].size(), res.assignments.size() - 1);
  EXPECT_EQ(j["assignment"]["beam_rank"], 0);
}

TEST(Report, DumpIsStable) {
  EXPECT_EQ(transfer_report(run().result, run().cfg).dump(2), transfer_report(run().result, run().cfg).dump(2));
}
