#pragma once

// Canned runs that regenerate the study's figure and table data as CSV.
//
// All targets share one preset: the default design with event-driven looks
// at the 258th event, RMST truncation at the minimax observed time, and the
// dropout rate from calibrate_dropout under proportional hazards.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nphsurv/harness.hpp"

namespace nphsurv {

enum class ReproduceTarget {
  fig1, fig3, fig5, fig6, fig7, fig8, fig10, table1, table2, table3, releff
};

std::string_view name(ReproduceTarget t) noexcept;
ReproduceTarget parse_reproduce_target(std::string_view text);  // throws ConfigError
std::span<const ReproduceTarget> all_reproduce_targets() noexcept;

struct ReproduceOptions {
  std::uint64_t seed = 12345;
  int n_sims = 10000;
  unsigned workers = 0;
  TStarRule t_star_rule;
  AnalysisMode analysis_mode = AnalysisMode::event_driven;
  std::optional<double> dropout_rate;  // empty: calibrate
};

struct ReproduceFile {
  std::string name;     // e.g. "table1.csv"
  std::string content;
};

struct ReproduceOutput {
  std::vector<ReproduceFile> files;
  std::vector<std::string> notes;  // calibration warnings and the like
  double dropout_rate = 0.0;
};

// Threshold grid used for a pattern's figure and table.
std::vector<double> study_thresholds(Pattern p);

// The preset's design and run spec for the given options, with the dropout
// rate resolved (calibrating when not given).
TrialDesign study_design(const ReproduceOptions& options);
DropoutCalibration study_dropout(const ReproduceOptions& options);
RunSpec study_run_spec(const ReproduceOptions& options, double dropout_rate);

// Relative efficiency of the 0.90 -> 0.67 power drop at one-sided 0.025.
double study_relative_efficiency();

ReproduceOutput reproduce(ReproduceTarget target, const ReproduceOptions& options);

}  // namespace nphsurv
