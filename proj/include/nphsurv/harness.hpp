#pragma once

// Monte Carlo engine: scenario grids, power and type-I error, mean effect
// estimates. Trial i of every cell draws from RngStream(master_seed, i), so
// cells share random numbers and results do not depend on the worker count.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nphsurv/effects.hpp"
#include "nphsurv/hypothesis.hpp"
#include "nphsurv/simgen.hpp"

namespace nphsurv {

enum class NullMode { none, equal_survival, equal_threshold };
enum class SummaryStatistic { mean, median };

std::string_view name(NullMode m) noexcept;
NullMode parse_null_mode(std::string_view text);
std::string_view name(SummaryStatistic s) noexcept;
SummaryStatistic parse_summary_statistic(std::string_view text);

struct RunSpec {
  TrialDesign design;
  std::vector<ScenarioSpec> scenarios;
  std::vector<TestId> tests;
  std::vector<EstimatorId> estimators;
  TStarRule t_star_rule;
  int n_sims = 10000;
  std::uint64_t master_seed = 12345;
  NullMode null_mode = NullMode::none;
  double dropout_rate = 0.0;
  unsigned workers = 0;  // 0: hardware concurrency
  SummaryStatistic statistic = SummaryStatistic::mean;

  void validate() const;  // throws ConfigError
};

// Hazards actually simulated for a cell under the spec's null mode.
HazardPair cell_hazards(const ScenarioSpec& scenario, NullMode mode);

struct TestSummary {
  TestId test;
  std::size_t rejections = 0;
  std::size_t n_used = 0;
  std::size_t n_failed = 0;
  double rejection_rate = 0.0;
  double mc_std_err = 0.0;  // sqrt(p (1 - p) / n_used)
};

struct EstimatorSummary {
  EstimatorId estimator;
  double value = 0.0;       // mean or median of the reported estimate
  double mc_std_err = 0.0;
  std::size_t n_used = 0;
  std::size_t n_failed = 0;
  // Averages of the per-arm RMSTs behind RMST-based estimators.
  std::optional<double> rmst_control;
  std::optional<double> rmst_experimental;
};

struct CellSummary {
  ScenarioSpec scenario;
  std::vector<TestSummary> tests;
  std::vector<EstimatorSummary> estimators;
  std::size_t shortfalls = 0;
  double mean_events = 0.0;
  double mean_analysis_time = 0.0;
  double mean_t_star = 0.0;
};

struct SimulationSummary {
  std::vector<CellSummary> cells;
  int n_sims = 0;
  std::uint64_t master_seed = 0;
  NullMode null_mode = NullMode::none;
};

SimulationSummary run_grid(const RunSpec& spec);

// Sets null_mode to equal_threshold and runs one delayed-pattern cell per
// threshold, both arms sharing the delayed hazard.
SimulationSummary run_null_equal_threshold(const RunSpec& spec,
                                           std::span<const double> threshold_grid);

// Rows `pattern,threshold,method,metric,value,mc_se,n_used,n_failed`.
void write_summary_csv(std::ostream& out, const SimulationSummary& summary);
// Per-cell trial diagnostics and per-method failure counts.
void write_cell_diagnostics_csv(std::ostream& out, const SimulationSummary& summary);

struct CurvePoint {
  double x = 0.0;  // events or t*
  double power = 0.0;
  double mc_std_err = 0.0;
  std::size_t n_used = 0;
  std::size_t n_failed = 0;
  std::size_t capped = 0;  // trials whose t* was lowered to the data support
};

struct CurveOptions {
  double dropout_rate = 0.0;
  unsigned workers = 0;
  TStarRule t_star_rule;  // for RMST-based tests in power_vs_events
};

// Each trial's latent cohort is drawn once and cut at every event count.
std::vector<CurvePoint> power_vs_events(const TrialDesign& design, const ScenarioSpec& scenario,
                                        std::span<const int> event_grid, const TestId& test,
                                        int n_sims, std::uint64_t seed,
                                        const CurveOptions& options = {});

// RMST-difference power per fixed t*, capped per trial at the minimax
// observed time.
std::vector<CurvePoint> power_vs_tstar(const TrialDesign& design, const ScenarioSpec& scenario,
                                       std::span<const double> tstar_grid, int n_sims,
                                       std::uint64_t seed, const CurveOptions& options = {});

// Runs fn(i) for i in [0, n) on `workers` threads (0: hardware
// concurrency). The first exception thrown by any call is rethrown.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

}  // namespace nphsurv
