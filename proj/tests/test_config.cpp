#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "nphsurv/config.hpp"
#include "nphsurv/error.hpp"

using namespace nphsurv;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_run_config(in);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, EmptyFileGivesDesignConstants) {
  auto c = parse("# nothing\n\n");
  EXPECT_EQ(c.design.n_per_arm, 165);
  EXPECT_EQ(c.design.accrual_duration, 17.5);
  EXPECT_EQ(c.design.max_study_duration, 25.0);
  EXPECT_EQ(c.design.target_events, 258);
  EXPECT_EQ(c.design.target_censoring, 0.22);
  EXPECT_EQ(c.design.alpha_one_sided, 0.025);
  EXPECT_EQ(c.design.analysis_mode, AnalysisMode::event_driven);
  EXPECT_EQ(c.control_median, 6.0);
  EXPECT_EQ(c.full_effect_hr, 0.667);
  EXPECT_EQ(c.crossing_post_hr, 1.5);
  EXPECT_EQ(c.decreasing_post_hr, 1.0);
  EXPECT_EQ(c.n_sims, 10000);
  EXPECT_EQ(c.seed, 12345u);
  EXPECT_EQ(c.t_star_rule.kind, TStarRule::Kind::minimax_observed);
  EXPECT_FALSE(c.dropout_rate.has_value());
  EXPECT_EQ(c.tests, default_tests());
  EXPECT_EQ(c.estimators, default_estimators());
  EXPECT_EQ(c.design, TrialDesign{});
}

TEST(Config, DefaultGridCoversAllThresholds) {
  auto cells = RunConfig().scenarios();
  ASSERT_EQ(cells.size(), 5u + 5u + 6u);
  EXPECT_EQ(cells.front().pattern, Pattern::delayed);
  EXPECT_EQ(cells.back().pattern, Pattern::decreasing);
  EXPECT_EQ(cells.back().threshold, 10.0);
  EXPECT_EQ(RunConfig().calibration_scenario().pattern, Pattern::proportional);
}

TEST(Config, ParsesValues) {
  auto c = parse(
      "n_sims = 100   # smoke\n"
      "patterns = proportional\n"
      "tests = logrank, fh(0,1)\n"
      "estimators =\n"
      "tstar_rule = fixed:12\n"
      "dropout_rate = 0.01\n"
      "analysis_mode = calendar\n"
      "cap_at_max_duration = true\n");
  EXPECT_EQ(c.n_sims, 100);
  ASSERT_EQ(c.scenarios().size(), 1u);
  ASSERT_EQ(c.tests.size(), 2u);
  EXPECT_EQ(c.tests[1].fh.gamma(), 1.0);
  EXPECT_TRUE(c.estimators.empty());
  EXPECT_EQ(c.t_star_rule.value, 12.0);
  EXPECT_EQ(c.dropout_rate, 0.01);
  EXPECT_EQ(c.design.analysis_mode, AnalysisMode::calendar);
  EXPECT_TRUE(c.design.cap_at_max_duration);
  auto spec = c.to_run_spec(0.01);
  EXPECT_EQ(spec.n_sims, 100);
  EXPECT_EQ(spec.dropout_rate, 0.01);
}

TEST(Config, CrossingOverrideReachesScenario) {
  auto c = parse("patterns = crossing\ncrossing_thresholds = 6\ncrossing_post_hr = 2\n");
  auto cells = c.scenarios();
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_EQ(cells[0].effective_post_hr(), 2.0);
}

TEST(Config, ErrorsNameKeyAndLine) {
  auto e = error_of("n_sims = 100\ntstar_rul = minimax-event\n");
  EXPECT_NE(e.find("tstar_rul"), std::string::npos) << e;
  EXPECT_NE(e.find("line 2"), std::string::npos) << e;
  e = error_of("seed = 1\nseed = 2\n");
  EXPECT_NE(e.find("duplicate key 'seed'"), std::string::npos) << e;
  e = error_of("n_sims = lots\n");
  EXPECT_NE(e.find("n_sims"), std::string::npos) << e;
  e = error_of("tests = logrank, magic\n");
  EXPECT_NE(e.find("magic"), std::string::npos) << e;
  e = error_of("just words\n");
  EXPECT_NE(e.find("key = value"), std::string::npos) << e;
  e = error_of("cap_at_max_duration = maybe\n");
  EXPECT_NE(e.find("true or false"), std::string::npos) << e;
  EXPECT_THROW(load_run_config("/nonexistent/run.cfg"), ConfigError);
}

TEST(Config, TextRoundTrip) {
  auto c = parse("n_sims = 500\npatterns = delayed, crossing\nstatistic = median\nworkers = 3\n");
  auto again = parse(c.to_text());
  EXPECT_EQ(again.to_text(), c.to_text());
  EXPECT_EQ(again.n_sims, 500);
  EXPECT_EQ(again.statistic, SummaryStatistic::median);
  EXPECT_EQ(parse(RunConfig().to_text()).to_text(), RunConfig().to_text());
}

TEST(Config, SplitList) {
  auto v = split_list(" logrank , fh(0, 1),rmst_diff ");
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0], "logrank");
  EXPECT_EQ(v[1], "fh(0, 1)");
  EXPECT_EQ(v[2], "rmst_diff");
  EXPECT_TRUE(split_list("  ").empty());
}
