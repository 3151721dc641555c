#pragma once

// Run configuration files: one `key = value` per line, `#` starts a comment.
// Lists are comma-separated; commas inside parentheses do not split, so
// `tests = logrank, fh(0,1)` is two entries. An empty value is an empty
// list. Unknown or repeated keys are rejected.
//
// Keys and defaults:
//   n_per_arm = 165                 accrual_duration = 17.5
//   max_study_duration = 25         target_events = 258
//   analysis_mode = event           cap_at_max_duration = false
//   target_censoring = 0.22         alpha = 0.025
//   control_median = 6              full_effect_hr = 0.667
//   crossing_post_hr = 1.5          decreasing_post_hr = 1
//   patterns = delayed, crossing, decreasing
//   delayed_thresholds = 0, 1, 2, 3, 4
//   crossing_thresholds = 0, 3, 6, 9, 12
//   decreasing_thresholds = 0, 2, 4, 6, 8, 10
//   tests = logrank, fh(0,1), fh(1,1), fh(1,0), rmst_diff
//   estimators = hr, whr(0,1), whr(1,1), whr(1,0), rmst_diff, rmst_ratio
//   tstar_rule = minimax-observed   statistic = mean
//   n_sims = 10000                  seed = 12345
//   null_mode = none                workers = 0
//   dropout_rate = auto             (or a rate per month)
//   calibration_seed = 1592642075   calibration_subjects = 100000
//   output_dir = out

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nphsurv/harness.hpp"

namespace nphsurv {

struct RunConfig {
  TrialDesign design;
  double control_median = 6.0;
  double full_effect_hr = 0.667;
  double crossing_post_hr = 1.5;
  double decreasing_post_hr = 1.0;
  std::vector<Pattern> patterns{Pattern::delayed, Pattern::crossing, Pattern::decreasing};
  std::vector<double> delayed_thresholds{0, 1, 2, 3, 4};
  std::vector<double> crossing_thresholds{0, 3, 6, 9, 12};
  std::vector<double> decreasing_thresholds{0, 2, 4, 6, 8, 10};
  std::vector<TestId> tests;
  std::vector<EstimatorId> estimators;
  TStarRule t_star_rule;
  SummaryStatistic statistic = SummaryStatistic::mean;
  int n_sims = 10000;
  std::uint64_t seed = 12345;
  NullMode null_mode = NullMode::none;
  unsigned workers = 0;
  std::optional<double> dropout_rate;  // empty: calibrate
  std::uint64_t calibration_seed = 0x5eed'ca1bULL;
  std::size_t calibration_subjects = 100000;
  std::filesystem::path output_dir = "out";

  RunConfig();

  // One cell per (pattern, threshold); proportional has a single cell.
  std::vector<ScenarioSpec> scenarios() const;
  ScenarioSpec calibration_scenario() const;  // proportional hazards
  RunSpec to_run_spec(double dropout) const;

  // Every key with its resolved value, in the file format.
  std::string to_text() const;
};

std::vector<TestId> default_tests();
std::vector<EstimatorId> default_estimators();

// Throws ConfigError naming the line and key.
RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::filesystem::path& path);

// Splits on commas outside parentheses and trims blanks.
std::vector<std::string> split_list(std::string_view text);

}  // namespace nphsurv
