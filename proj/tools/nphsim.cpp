// nphsim: analyze survival datasets, run simulation grids and regenerate
// the study's figure and table data.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nphsurv/config.hpp"
#include "nphsurv/dataset_io.hpp"
#include "nphsurv/effects.hpp"
#include "nphsurv/error.hpp"
#include "nphsurv/harness.hpp"
#include "nphsurv/hypothesis.hpp"
#include "nphsurv/kernels.hpp"
#include "nphsurv/numerics.hpp"
#include "nphsurv/reproduce.hpp"
#include "nphsurv/rng.hpp"
#include "nphsurv/simgen.hpp"

namespace fs = std::filesystem;
using namespace nphsurv;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kNumerical = 4 };

std::string fmt(double x) { return std::isnan(x) ? "" : format_double(x); }

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

struct AnalyzeArgs {
  std::string dataset;
  std::string tests = "logrank, fh(0,1), fh(1,1), fh(1,0), rmst_diff";
  std::string estimators = "hr, whr(0,1), whr(1,1), whr(1,0), rmst_diff, rmst_ratio";
  std::string tstar_rule = "minimax-observed";
  double alpha = 0.025;
  std::string out = "out";
};

int cmd_analyze(const AnalyzeArgs& a) {
  std::vector<TestId> tests;
  for (const auto& t : split_list(a.tests)) tests.push_back(TestId::parse(t));
  std::vector<EstimatorId> estimators;
  for (const auto& e : split_list(a.estimators)) estimators.push_back(EstimatorId::parse(e));
  const auto rule = TStarRule::parse(a.tstar_rule);
  if (!(a.alpha > 0.0 && a.alpha < 0.5)) throw ConfigError("alpha must lie in (0, 0.5)");

  const auto data = read_dataset_csv(a.dataset);
  data.require_both_arms();

  std::ostringstream csv;
  csv << "section,method,quantity,value\n";
  const auto row = [&](std::string_view section, const std::string& method,
                       std::string_view quantity, const std::string& value) {
    csv << section << ",\"" << method << "\"," << quantity << ',' << value << '\n';
  };
  int method_failure = kOk;

  std::printf("dataset %s: %zu control (%zu events), %zu experimental (%zu events)\n",
              a.dataset.c_str(), data.count(Arm::control), data.events(Arm::control),
              data.count(Arm::experimental), data.events(Arm::experimental));

  const auto t_star = resolve_t_star(data, rule);
  row("t_star", rule.to_string(), "value", fmt(t_star.t_star));
  row("t_star", rule.to_string(), "capped", t_star.capped ? "1" : "0");
  std::printf("t* (%s) = %s%s\n", rule.to_string().c_str(), fmt(t_star.t_star).c_str(),
              t_star.capped ? " (capped at minimax observed time)" : "");

  const auto c0 = kaplan_meier(data.arm(Arm::control));
  const auto c1 = kaplan_meier(data.arm(Arm::experimental));
  const auto r0 = rmst(c0, t_star.t_star);
  const auto r1 = rmst(c1, t_star.t_star);
  for (const auto& [label, r] : {std::pair{"control", r0}, std::pair{"experimental", r1}}) {
    row("rmst", label, "mu", fmt(r.mu));
    row("rmst", label, "variance", fmt(r.variance));
    std::printf("RMST %-12s %10.4f  (se %.4f)\n", label, r.mu, std::sqrt(r.variance));
  }

  std::printf("\n%-12s %12s %12s %10s %12s\n", "test", "U", "Var(U)", "Z", "p (1-sided)");
  for (const auto& id : tests) {
    const auto n = id.name();
    try {
      TestResult r;
      switch (id.kind) {
        case TestKind::logrank: r = log_rank(data); break;
        case TestKind::fleming_harrington: r = weighted_log_rank(data, id.fh); break;
        case TestKind::rmst_difference: r = rmst_difference_test(c0, c1, t_star.t_star); break;
      }
      row("test", n, "u", fmt(r.statistic_u));
      row("test", n, "variance", fmt(r.variance_u));
      row("test", n, "z", fmt(r.z));
      row("test", n, "p_one_sided", fmt(r.p_one_sided));
      row("test", n, "rejects", r.rejects(a.alpha) ? "1" : "0");
      std::printf("%-12s %12.6g %12.6g %10.4f %12.6g%s\n", n.c_str(), r.statistic_u,
                  r.variance_u, r.z, r.p_one_sided, r.rejects(a.alpha) ? "  *" : "");
    } catch (const Error& e) {
      if (method_failure != kData)
        method_failure = dynamic_cast<const DataError*>(&e) ? kData : kNumerical;
      row("test", n, "error", std::string("\"") + e.what() + "\"");
      std::printf("%-12s failed: %s\n", n.c_str(), e.what());
    }
  }

  std::printf("\n%-12s %12s %12s %12s\n", "estimator", "estimate", "95% low", "95% high");
  for (const auto& id : estimators) {
    const auto n = id.name();
    try {
      EffectEstimate e;
      switch (id.kind) {
        case EstimatorKind::hazard_ratio: e = hazard_ratio(data); break;
        case EstimatorKind::weighted_hazard_ratio: e = weighted_hazard_ratio(data, id.fh); break;
        case EstimatorKind::rmst_difference: e = rmst_difference(r0, r1); break;
        case EstimatorKind::rmst_ratio: e = rmst_ratio(r0, r1); break;
      }
      row("estimate", n, "point", fmt(e.point));
      row("estimate", n, "std_err", fmt(e.std_err));
      row("estimate", n, "reported", fmt(e.reported));
      row("estimate", n, "ci_low", fmt(e.reported_ci_low()));
      row("estimate", n, "ci_high", fmt(e.reported_ci_high()));
      std::printf("%-12s %12.4f %12.4f %12.4f\n", n.c_str(), e.reported, e.reported_ci_low(),
                  e.reported_ci_high());
    } catch (const Error& e) {
      if (method_failure != kData)
        method_failure = dynamic_cast<const DataError*>(&e) ? kData : kNumerical;
      row("estimate", n, "error", std::string("\"") + e.what() + "\"");
      std::printf("%-12s failed: %s\n", n.c_str(), e.what());
    }
  }

  const fs::path report = fs::path(a.out) / "analysis.csv";
  write_file(report, csv.str());
  std::printf("\nreport written to %s\n", report.string().c_str());
  return method_failure;
}

struct CommonArgs {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned workers = 0;
  bool workers_set = false;
  std::string out;
  std::string tstar_rule;
  std::string analysis_mode;
  int n_sims = 0;
};

nlohmann::ordered_json provenance() {
  nlohmann::ordered_json j;
  j["software"] = "nphsurv";
  j["version"] = NPHSURV_VERSION;
  j["kernel_isa"] = kernels::name(kernels::active().isa);
  return j;
}

struct SimulateArgs {
  CommonArgs common;
  int export_trials = 0;
};

int cmd_simulate(const SimulateArgs& a) {
  const auto& c = a.common;
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  if (c.seed_set) cfg.seed = c.seed;
  if (c.workers_set) cfg.workers = c.workers;
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (!c.tstar_rule.empty()) cfg.t_star_rule = TStarRule::parse(c.tstar_rule);
  if (!c.analysis_mode.empty()) cfg.design.analysis_mode = parse_analysis_mode(c.analysis_mode);
  if (c.n_sims > 0) cfg.n_sims = c.n_sims;
  cfg.to_run_spec(0.0).validate();

  DropoutCalibration calibration;
  if (cfg.dropout_rate) {
    calibration.rate = *cfg.dropout_rate;
  } else {
    calibration = calibrate_dropout(cfg.design, cfg.calibration_scenario(), cfg.calibration_seed,
                                    cfg.calibration_subjects);
    std::printf("calibrated dropout rate %s/month (pilot censoring %s)\n",
                fmt(calibration.rate).c_str(), fmt(calibration.achieved_fraction).c_str());
    if (calibration.below_floor) {
      std::fprintf(stderr,
                   "warning: administrative censoring alone is %s, above target %s; "
                   "dropout rate set to 0\n",
                   fmt(calibration.administrative_floor).c_str(),
                   fmt(cfg.design.target_censoring).c_str());
    }
  }

  const auto spec = cfg.to_run_spec(calibration.rate);
  const auto summary = run_grid(spec);

  const fs::path dir = cfg.output_dir;
  std::ostringstream s, d;
  write_summary_csv(s, summary);
  write_cell_diagnostics_csv(d, summary);
  write_file(dir / "summary.csv", s.str());
  write_file(dir / "cells.csv", d.str());

  auto meta = provenance();
  meta["command"] = "simulate";
  meta["master_seed"] = cfg.seed;
  meta["dropout_rate"] = calibration.rate;
  meta["dropout_calibrated"] = !cfg.dropout_rate.has_value();
  meta["dropout_below_floor"] = calibration.below_floor;
  meta["administrative_censoring"] = calibration.administrative_floor;
  meta["config"] = cfg.to_text();
  write_file(dir / "metadata.json", meta.dump(2) + "\n");

  if (a.export_trials > 0 && !spec.scenarios.empty()) {
    const auto& scenario = spec.scenarios.front();
    const auto hazards = cell_hazards(scenario, spec.null_mode);
    for (int i = 0; i < a.export_trials; ++i) {
      RngStream stream(cfg.seed, static_cast<std::uint64_t>(i));
      const auto trial = simulate_trial(cfg.design, hazards, calibration.rate, stream);
      fs::create_directories(dir / "trials");
      export_trial(dir / "trials" / ("trial_" + std::to_string(i)), trial, scenario, cfg.design,
                   calibration.rate, cfg.seed, static_cast<std::uint64_t>(i));
    }
  }

  std::printf("%zu cells x %d trials written to %s\n", summary.cells.size(), summary.n_sims,
              dir.string().c_str());
  return kOk;
}

struct ReproduceArgs {
  CommonArgs common;
  std::vector<std::string> targets;
};

int cmd_reproduce(const ReproduceArgs& a) {
  const auto& c = a.common;
  if (!c.config.empty()) throw ConfigError("reproduce does not take a config file");
  ReproduceOptions opt;
  if (c.seed_set) opt.seed = c.seed;
  if (c.workers_set) opt.workers = c.workers;
  if (!c.tstar_rule.empty()) opt.t_star_rule = TStarRule::parse(c.tstar_rule);
  if (!c.analysis_mode.empty()) opt.analysis_mode = parse_analysis_mode(c.analysis_mode);
  if (c.n_sims > 0) opt.n_sims = c.n_sims;
  if (opt.n_sims < 100) throw ConfigError("n-sims must be at least 100");
  const fs::path dir = c.out.empty() ? fs::path("out") : fs::path(c.out);

  std::vector<ReproduceTarget> targets;
  for (const auto& t : a.targets) {
    if (t == "all") {
      const auto all = all_reproduce_targets();
      targets.insert(targets.end(), all.begin(), all.end());
    } else {
      targets.push_back(parse_reproduce_target(t));
    }
  }

  for (auto t : targets) {
    const auto out = reproduce(t, opt);
    for (const auto& note : out.notes) std::fprintf(stderr, "%s: %s\n", name(t).data(), note.c_str());
    for (const auto& f : out.files) {
      write_file(dir / f.name, f.content);
      std::printf("%s -> %s\n", name(t).data(), (dir / f.name).string().c_str());
    }
    if (t == ReproduceTarget::releff) {
      std::printf("relative efficiency %.2f\n", study_relative_efficiency());
    }
    auto meta = provenance();
    meta["command"] = "reproduce";
    meta["target"] = name(t);
    meta["master_seed"] = opt.seed;
    meta["n_sims"] = opt.n_sims;
    meta["tstar_rule"] = opt.t_star_rule.to_string();
    meta["analysis_mode"] = name(opt.analysis_mode);
    meta["dropout_rate"] = out.dropout_rate;
    meta["notes"] = out.notes;
    write_file(dir / (std::string(name(t)) + ".json"), meta.dump(2) + "\n");
  }
  return kOk;
}

int cmd_selftest() {
  int failures = 0;
  const auto check = [&](const std::string& what, bool ok) {
    std::printf("%s %s\n", ok ? "PASS" : "FAIL", what.c_str());
    failures += ok ? 0 : 1;
  };

  const RunConfig cfg;
  const auto& d = cfg.design;
  check("default design: 165 per arm, 17.5 accrual, 25 months, 258 events",
        d.n_per_arm == 165 && d.accrual_duration == 17.5 && d.max_study_duration == 25.0 &&
            d.target_events == 258);
  check("default design: 22% censoring target, one-sided alpha 0.025",
        d.target_censoring == 0.22 && d.alpha_one_sided == 0.025);
  check("default scenario: control median 6, HR 0.667, post HRs 1.5 and 1",
        cfg.control_median == 6.0 && cfg.full_effect_hr == 0.667 &&
            cfg.crossing_post_hr == 1.5 && cfg.decreasing_post_hr == 1.0);
  check("default run: 10000 trials, event-driven",
        cfg.n_sims == 10000 && d.analysis_mode == AnalysisMode::event_driven);
  {
    std::istringstream empty;
    check("empty config resolves to defaults", parse_run_config(empty).to_text() == cfg.to_text());
  }
  check("relative efficiency 0.90 -> 0.67 is 1.82",
        std::abs(study_relative_efficiency() - 1.82) < 0.005);
  {
    const TwoArmDataset toy({{1.0, true, Arm::control}, {2.0, false, Arm::experimental}});
    const auto r = log_rank(toy);
    check("log-rank toy example U=0.5 V=0.25 Z=1",
          std::abs(r.statistic_u - 0.5) < 1e-12 && std::abs(r.variance_u - 0.25) < 1e-12 &&
              std::abs(r.z - 1.0) < 1e-12);
  }
  {
    bool ok = true;
    for (double p : {1e-10, 1e-4, 0.025, 0.5, 0.9, 0.999999}) {
      ok = ok && std::abs(std_normal_cdf(std_normal_quantile(p)) - p) <= 1e-9 * std::max(p, 1e-3);
    }
    check("normal cdf/quantile round trip", ok);
  }
  {
    RngStream rng(7, 0);
    std::vector<SurvivalObservation> obs;
    for (int i = 0; i < 400; ++i) {
      obs.push_back({std::floor(rng.uniform(0, 30)), rng.uniform() < 0.7,
                     rng.uniform() < 0.5 ? Arm::control : Arm::experimental});
    }
    const auto table = build_risk_table(TwoArmDataset(obs));
    const auto cols = kernels::RiskColumns::of(table);
    const std::vector<double> w(table.size(), 0.75);
    const auto ref = kernels::table_for(kernels::Isa::scalar).logrank(cols, w);
    bool ok = true;
    for (auto isa : {kernels::Isa::scalar, kernels::Isa::avx2, kernels::Isa::neon}) {
      if (!kernels::supported(isa)) continue;
      const auto got = kernels::table_for(isa).logrank(cols, w);
      ok = ok && std::abs(got.u - ref.u) <= 1e-12 * (1 + std::abs(ref.u)) &&
           std::abs(got.v - ref.v) <= 1e-12 * (1 + std::abs(ref.v));
    }
    check(std::string("kernels agree with scalar reference (active: ") +
              std::string(kernels::name(kernels::active().isa)) + ")",
          ok);
  }
  return failures == 0 ? kOk : kFailure;
}

void add_common(CLI::App* app, CommonArgs& c, bool with_config) {
  if (with_config) app->add_option("--config", c.config, "Run configuration file");
  app->add_option("--seed", c.seed, "Master seed")->each([&c](const std::string&) {
    c.seed_set = true;
  });
  app->add_option("--workers", c.workers, "Worker threads (0: all cores)")
      ->each([&c](const std::string&) { c.workers_set = true; });
  app->add_option("--out", c.out, "Output directory");
  app->add_option("--tstar-rule", c.tstar_rule,
                  "RMST truncation: minimax-observed, minimax-event or fixed:X");
  app->add_option("--analysis-mode", c.analysis_mode, "event or calendar");
  app->add_option("--n-sims", c.n_sims, "Trials per scenario cell");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-arm survival analysis and non-proportional hazards trial simulation"};
  app.set_version_flag("--version", std::string(NPHSURV_VERSION));
  app.require_subcommand(1);

  AnalyzeArgs analyze;
  auto* an = app.add_subcommand("analyze", "Tests and effect estimates for one dataset");
  an->add_option("dataset", analyze.dataset, "CSV with header time,event,arm")->required();
  an->add_option("--tests", analyze.tests, "Comma-separated tests");
  an->add_option("--estimators", analyze.estimators, "Comma-separated estimators");
  an->add_option("--tstar-rule", analyze.tstar_rule, "minimax-observed, minimax-event, fixed:X");
  an->add_option("--alpha", analyze.alpha, "One-sided significance level");
  an->add_option("--out", analyze.out, "Directory for analysis.csv");

  SimulateArgs simulate;
  auto* sim = app.add_subcommand("simulate", "Run a scenario grid from a config file");
  add_common(sim, simulate.common, true);
  sim->add_option("--export-trials", simulate.export_trials,
                  "Also export the first K trials of the first cell as CSV + JSON");

  ReproduceArgs repro;
  auto* rep = app.add_subcommand("reproduce", "Regenerate figure/table data as CSV");
  rep->add_option("targets", repro.targets, "fig1 fig3 fig5 fig6 fig7 fig8 fig10 table1 table2 table3 releff | all")
      ->required();
  add_common(rep, repro.common, true);

  auto* self = app.add_subcommand("selftest", "Check defaults and core computations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*an) return cmd_analyze(analyze);
    if (*sim) return cmd_simulate(simulate);
    if (*rep) return cmd_reproduce(repro);
    if (*self) return cmd_selftest();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kFailure;
}
