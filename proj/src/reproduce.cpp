#include "nphsurv/reproduce.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "nphsurv/config.hpp"
#include "nphsurv/dataset_io.hpp"
#include "nphsurv/error.hpp"
#include "nphsurv/numerics.hpp"

namespace nphsurv {

namespace {

constexpr std::array kTargets = {
    ReproduceTarget::fig1,   ReproduceTarget::fig3,   ReproduceTarget::fig5,
    ReproduceTarget::fig6,   ReproduceTarget::fig7,   ReproduceTarget::fig8,
    ReproduceTarget::fig10,  ReproduceTarget::table1, ReproduceTarget::table2,
    ReproduceTarget::table3, ReproduceTarget::releff,
};

std::string fmt(double x) { return std::isnan(x) ? "" : format_double(x); }

ScenarioSpec scenario(Pattern p, double threshold) {
  ScenarioSpec s;
  s.pattern = p;
  s.threshold = threshold;
  return s;
}

std::string curve_csv(const std::vector<std::pair<ScenarioSpec, std::vector<CurvePoint>>>& curves,
                      std::string_view x_name) {
  std::ostringstream o;
  o << "pattern,threshold," << x_name << ",power,mc_se,n_used,n_failed,capped\n";
  for (const auto& [s, curve] : curves) {
    for (const auto& p : curve) {
      o << name(s.pattern) << ',' << fmt(s.threshold) << ',' << fmt(p.x) << ',' << fmt(p.power)
        << ',' << fmt(p.mc_std_err) << ',' << p.n_used << ',' << p.n_failed << ',' << p.capped
        << '\n';
    }
  }
  return o.str();
}

std::string summary_csv(const SimulationSummary& s) {
  std::ostringstream o;
  write_summary_csv(o, s);
  return o.str();
}

const EstimatorSummary* find_estimator(const CellSummary& cell, EstimatorKind kind) {
  for (const auto& e : cell.estimators) {
    if (e.estimator.kind == kind) return &e;
  }
  return nullptr;
}

// Wide RMST table: one column per threshold.
std::string rmst_table_csv(const SimulationSummary& s) {
  std::ostringstream o;
  o << "quantity";
  for (const auto& cell : s.cells) o << ',' << fmt(cell.scenario.threshold);
  o << '\n';
  const auto row = [&](std::string_view label, auto value) {
    o << label;
    for (const auto& cell : s.cells) {
      const auto* e = find_estimator(cell, EstimatorKind::rmst_difference);
      o << ',' << (e ? fmt(value(*e)) : std::string());
    }
    o << '\n';
  };
  row("control_rmst", [](const EstimatorSummary& e) { return e.rmst_control.value_or(NAN); });
  row("experimental_rmst",
      [](const EstimatorSummary& e) { return e.rmst_experimental.value_or(NAN); });
  row("difference", [](const EstimatorSummary& e) { return e.value; });
  return o.str();
}

}  // namespace

std::string_view name(ReproduceTarget t) noexcept {
  switch (t) {
    case ReproduceTarget::fig1: return "fig1";
    case ReproduceTarget::fig3: return "fig3";
    case ReproduceTarget::fig5: return "fig5";
    case ReproduceTarget::fig6: return "fig6";
    case ReproduceTarget::fig7: return "fig7";
    case ReproduceTarget::fig8: return "fig8";
    case ReproduceTarget::fig10: return "fig10";
    case ReproduceTarget::table1: return "table1";
    case ReproduceTarget::table2: return "table2";
    case ReproduceTarget::table3: return "table3";
    case ReproduceTarget::releff: return "releff";
  }
  return "unknown";
}

ReproduceTarget parse_reproduce_target(std::string_view text) {
  for (auto t : kTargets) {
    if (name(t) == text) return t;
  }
  throw ConfigError("unknown reproduce target '" + std::string(text) + "'");
}

std::span<const ReproduceTarget> all_reproduce_targets() noexcept { return kTargets; }

std::vector<double> study_thresholds(Pattern p) {
  switch (p) {
    case Pattern::proportional: return {0};
    case Pattern::delayed: return {0, 1, 2, 3, 4};
    case Pattern::crossing: return {0, 3, 6, 9, 12};
    case Pattern::decreasing: return {0, 2, 4, 6, 8, 10};
  }
  return {0};
}

TrialDesign study_design(const ReproduceOptions& options) {
  TrialDesign d;
  d.analysis_mode = options.analysis_mode;
  return d;
}

DropoutCalibration study_dropout(const ReproduceOptions& options) {
  if (options.dropout_rate) {
    DropoutCalibration c;
    c.rate = *options.dropout_rate;
    return c;
  }
  return calibrate_dropout(study_design(options), scenario(Pattern::proportional, 0.0));
}

RunSpec study_run_spec(const ReproduceOptions& options, double dropout_rate) {
  RunSpec spec;
  spec.design = study_design(options);
  spec.tests = default_tests();
  spec.estimators = default_estimators();
  spec.t_star_rule = options.t_star_rule;
  spec.n_sims = options.n_sims;
  spec.master_seed = options.seed;
  spec.dropout_rate = dropout_rate;
  spec.workers = options.workers;
  return spec;
}

double study_relative_efficiency() { return relative_efficiency(0.90, 0.67, 0.025); }

ReproduceOutput reproduce(ReproduceTarget target, const ReproduceOptions& options) {
  ReproduceOutput out;
  const std::string file = std::string(name(target)) + ".csv";

  if (target == ReproduceTarget::releff) {
    std::ostringstream o;
    o << "power_reference,power_alternative,alpha_one_sided,relative_efficiency\n"
      << "0.9,0.67,0.025," << fmt(study_relative_efficiency()) << '\n';
    out.files.push_back({file, o.str()});
    return out;
  }

  const auto calibration = study_dropout(options);
  out.dropout_rate = calibration.rate;
  if (calibration.below_floor) {
    out.notes.push_back("administrative censoring alone is " +
                        fmt(calibration.administrative_floor) +
                        ", above the censoring target; dropout rate set to 0");
  }
  auto spec = study_run_spec(options, calibration.rate);

  const auto grid_for = [&](Pattern p) {
    spec.scenarios.clear();
    for (double t : study_thresholds(p)) spec.scenarios.push_back(scenario(p, t));
  };

  switch (target) {
    case ReproduceTarget::fig1: {
      std::vector<int> events;
      for (int e = 50; e <= 2 * spec.design.n_per_arm; e += 10) events.push_back(e);
      events.push_back(spec.design.target_events);
      std::sort(events.begin(), events.end());
      CurveOptions co{calibration.rate, options.workers, options.t_star_rule};
      std::vector<std::pair<ScenarioSpec, std::vector<CurvePoint>>> curves;
      for (auto s : {scenario(Pattern::proportional, 0), scenario(Pattern::delayed, 1),
                     scenario(Pattern::delayed, 2), scenario(Pattern::delayed, 3),
                     scenario(Pattern::delayed, 4)}) {
        curves.emplace_back(s, power_vs_events(spec.design, s, events, TestId{}, options.n_sims,
                                               options.seed, co));
      }
      out.files.push_back({file, curve_csv(curves, "events")});
      break;
    }
    case ReproduceTarget::fig3: {
      std::vector<double> grid;
      for (int t = 1; t <= 24; ++t) grid.push_back(t);
      CurveOptions co{calibration.rate, options.workers, options.t_star_rule};
      std::vector<std::pair<ScenarioSpec, std::vector<CurvePoint>>> curves;
      for (auto s : {scenario(Pattern::proportional, 0), scenario(Pattern::delayed, 4),
                     scenario(Pattern::crossing, 4), scenario(Pattern::decreasing, 4)}) {
        curves.emplace_back(
            s, power_vs_tstar(spec.design, s, grid, options.n_sims, options.seed, co));
      }
      out.files.push_back({file, curve_csv(curves, "t_star")});
      break;
    }
    case ReproduceTarget::fig5:
    case ReproduceTarget::fig6:
    case ReproduceTarget::fig7: {
      const Pattern p = target == ReproduceTarget::fig5   ? Pattern::delayed
                        : target == ReproduceTarget::fig6 ? Pattern::crossing
                                                          : Pattern::decreasing;
      grid_for(p);
      out.files.push_back({file, summary_csv(run_grid(spec))});
      break;
    }
    case ReproduceTarget::fig8: {
      spec.scenarios = {scenario(Pattern::proportional, 0)};
      spec.null_mode = NullMode::equal_survival;
      spec.estimators.clear();
      out.files.push_back({file, summary_csv(run_grid(spec))});
      break;
    }
    case ReproduceTarget::fig10: {
      spec.estimators.clear();
      const auto grid = study_thresholds(Pattern::delayed);
      out.files.push_back({file, summary_csv(run_null_equal_threshold(spec, grid))});
      break;
    }
    case ReproduceTarget::table1:
    case ReproduceTarget::table2:
    case ReproduceTarget::table3: {
      const Pattern p = target == ReproduceTarget::table1   ? Pattern::delayed
                        : target == ReproduceTarget::table2 ? Pattern::crossing
                                                            : Pattern::decreasing;
      grid_for(p);
      spec.tests = {TestId::parse("rmst_diff")};
      spec.estimators = {EstimatorId::parse("rmst_diff")};
      out.files.push_back({file, rmst_table_csv(run_grid(spec))});
      break;
    }
    case ReproduceTarget::releff: break;
  }
  return out;
}

}  // namespace nphsurv
