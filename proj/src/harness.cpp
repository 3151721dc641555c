#include "nphsurv/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>
#include <thread>

#include "nphsurv/dataset_io.hpp"
#include "nphsurv/error.hpp"
#include "nphsurv/numerics.hpp"

namespace nphsurv {

std::string_view name(NullMode m) noexcept {
  switch (m) {
    case NullMode::none: return "none";
    case NullMode::equal_survival: return "equal_survival";
    case NullMode::equal_threshold: return "equal_threshold";
  }
  return "unknown";
}

NullMode parse_null_mode(std::string_view text) {
  if (text == "none") return NullMode::none;
  if (text == "equal_survival") return NullMode::equal_survival;
  if (text == "equal_threshold") return NullMode::equal_threshold;
  throw ConfigError("unknown null mode '" + std::string(text) + "'");
}

std::string_view name(SummaryStatistic s) noexcept {
  return s == SummaryStatistic::mean ? "mean" : "median";
}

SummaryStatistic parse_summary_statistic(std::string_view text) {
  if (text == "mean") return SummaryStatistic::mean;
  if (text == "median") return SummaryStatistic::median;
  throw ConfigError("unknown summary statistic '" + std::string(text) + "'");
}

void RunSpec::validate() const {
  design.validate();
  if (n_sims < 100) throw ConfigError("n_sims must be at least 100");
  if (tests.empty()) throw ConfigError("at least one test is required");
  if (scenarios.empty()) throw ConfigError("at least one scenario is required");
  if (!(dropout_rate >= 0.0) || !std::isfinite(dropout_rate)) {
    throw ConfigError("dropout rate must be finite and nonnegative");
  }
  for (const auto& s : scenarios) s.validate();
}

HazardPair cell_hazards(const ScenarioSpec& scenario, NullMode mode) {
  switch (mode) {
    case NullMode::none: return make_scenario(scenario);
    case NullMode::equal_survival: return null_equal_survival(scenario);
    case NullMode::equal_threshold: return null_equal_threshold(scenario, scenario.threshold);
  }
  return make_scenario(scenario);
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TrialOutcome {
  std::vector<signed char> rejected;  // -1 failed, 0, 1
  std::vector<double> estimate;       // NaN when failed
  double rmst0 = kNaN;
  double rmst1 = kNaN;
  double t_star = kNaN;
  double events = 0.0;
  double analysis_time = 0.0;
  bool shortfall = false;
};

bool uses_rmst(const RunSpec& spec) {
  for (const auto& t : spec.tests) {
    if (t.kind == TestKind::rmst_difference) return true;
  }
  for (const auto& e : spec.estimators) {
    if (e.kind == EstimatorKind::rmst_difference || e.kind == EstimatorKind::rmst_ratio) {
      return true;
    }
  }
  return false;
}

TrialOutcome analyse_trial(const RunSpec& spec, const SimulatedTrial& trial) {
  TrialOutcome out;
  out.rejected.assign(spec.tests.size(), -1);
  out.estimate.assign(spec.estimators.size(), kNaN);
  out.events = static_cast<double>(trial.events_at_analysis);
  out.analysis_time = trial.analysis_time;
  out.shortfall = trial.shortfall;

  const auto& data = trial.dataset;
  if (data.count(Arm::control) == 0 || data.count(Arm::experimental) == 0 || data.events() == 0) {
    return out;
  }
  const auto table = build_risk_table(data);
  const auto left = pooled_left_survival(table);

  std::optional<RmstEstimate> r0, r1;
  if (uses_rmst(spec)) {
    try {
      const double t_star = resolve_t_star(data, spec.t_star_rule).t_star;
      r0 = rmst(kaplan_meier(data.arm(Arm::control)), t_star);
      r1 = rmst(kaplan_meier(data.arm(Arm::experimental)), t_star);
      out.t_star = t_star;
      out.rmst0 = r0->mu;
      out.rmst1 = r1->mu;
    } catch (const Error&) {
      r0.reset();
      r1.reset();
    }
  }

  const double alpha = spec.design.alpha_one_sided;
  for (std::size_t k = 0; k < spec.tests.size(); ++k) {
    const auto& id = spec.tests[k];
    try {
      TestResult r;
      switch (id.kind) {
        case TestKind::logrank: r = log_rank(table); break;
        case TestKind::fleming_harrington: r = weighted_log_rank(table, left, id.fh); break;
        case TestKind::rmst_difference:
          if (!r0) continue;
          if (!(r0->variance + r1->variance > 0.0)) continue;
          r.p_one_sided = std_normal_cdf(-(r1->mu - r0->mu) /
                                         std::sqrt(r0->variance + r1->variance));
          break;
      }
      out.rejected[k] = r.rejects(alpha) ? 1 : 0;
    } catch (const Error&) {
    }
  }

  for (std::size_t k = 0; k < spec.estimators.size(); ++k) {
    const auto& id = spec.estimators[k];
    try {
      switch (id.kind) {
        case EstimatorKind::hazard_ratio: out.estimate[k] = hazard_ratio(table).reported; break;
        case EstimatorKind::weighted_hazard_ratio:
          out.estimate[k] = weighted_hazard_ratio(table, fh_weights(left, id.fh)).reported;
          break;
        case EstimatorKind::rmst_difference:
          if (r0) out.estimate[k] = rmst_difference(*r0, *r1).reported;
          break;
        case EstimatorKind::rmst_ratio:
          if (r0) out.estimate[k] = rmst_ratio(*r0, *r1).reported;
          break;
      }
    } catch (const Error&) {
    }
  }
  return out;
}

struct Moments {
  double value = 0.0;
  double std_err = 0.0;
  std::size_t n = 0;
};

// Values are visited in trial order, so the result is independent of the
// worker count.
Moments summarise(std::vector<double> v, SummaryStatistic stat) {
  Moments m;
  m.n = v.size();
  if (v.empty()) return {kNaN, kNaN, 0};
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  const double se = sd / std::sqrt(static_cast<double>(v.size()));
  if (stat == SummaryStatistic::mean) {
    m.value = mean;
    m.std_err = se;
  } else {
    const std::size_t h = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h), v.end());
    double med = v[h];
    if (v.size() % 2 == 0) {
      med = 0.5 * (med + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h)));
    }
    m.value = med;
    // Large-sample standard error of a median under approximate normality.
    m.std_err = std::sqrt(std::numbers::pi / 2.0) * se;
  }
  return m;
}

double binomial_se(std::size_t hits, std::size_t n) {
  if (n == 0) return kNaN;
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

CellSummary reduce_cell(const RunSpec& spec, const ScenarioSpec& scenario,
                        const std::vector<TrialOutcome>& outcomes) {
  CellSummary cell;
  cell.scenario = scenario;
  const double n = static_cast<double>(outcomes.size());

  for (std::size_t k = 0; k < spec.tests.size(); ++k) {
    TestSummary s;
    s.test = spec.tests[k];
    for (const auto& o : outcomes) {
      if (o.rejected[k] < 0) {
        ++s.n_failed;
      } else {
        ++s.n_used;
        s.rejections += static_cast<std::size_t>(o.rejected[k]);
      }
    }
    s.rejection_rate =
        s.n_used ? static_cast<double>(s.rejections) / static_cast<double>(s.n_used) : kNaN;
    s.mc_std_err = binomial_se(s.rejections, s.n_used);
    cell.tests.push_back(s);
  }

  std::vector<double> mu0, mu1;
  for (const auto& o : outcomes) {
    if (!std::isnan(o.rmst0)) {
      mu0.push_back(o.rmst0);
      mu1.push_back(o.rmst1);
    }
  }
  for (std::size_t k = 0; k < spec.estimators.size(); ++k) {
    EstimatorSummary s;
    s.estimator = spec.estimators[k];
    std::vector<double> values;
    values.reserve(outcomes.size());
    for (const auto& o : outcomes) {
      if (std::isnan(o.estimate[k])) {
        ++s.n_failed;
      } else {
        values.push_back(o.estimate[k]);
      }
    }
    const auto m = summarise(std::move(values), spec.statistic);
    s.value = m.value;
    s.mc_std_err = m.std_err;
    s.n_used = m.n;
    if (s.estimator.kind == EstimatorKind::rmst_difference ||
        s.estimator.kind == EstimatorKind::rmst_ratio) {
      s.rmst_control = summarise(mu0, spec.statistic).value;
      s.rmst_experimental = summarise(mu1, spec.statistic).value;
    }
    cell.estimators.push_back(s);
  }

  double events = 0.0, analysis = 0.0, t_star = 0.0;
  std::size_t t_star_n = 0;
  for (const auto& o : outcomes) {
    events += o.events;
    analysis += o.analysis_time;
    cell.shortfalls += o.shortfall ? 1 : 0;
    if (!std::isnan(o.t_star)) {
      t_star += o.t_star;
      ++t_star_n;
    }
  }
  cell.mean_events = events / n;
  cell.mean_analysis_time = analysis / n;
  cell.mean_t_star = t_star_n ? t_star / static_cast<double>(t_star_n) : kNaN;
  return cell;
}

}  // namespace

SimulationSummary run_grid(const RunSpec& spec) {
  spec.validate();
  if (spec.null_mode == NullMode::equal_threshold) {
    for (const auto& s : spec.scenarios) {
      if (s.pattern != Pattern::delayed && s.pattern != Pattern::proportional) {
        throw ConfigError("equal_threshold null needs delayed scenarios");
      }
    }
  }
  std::vector<HazardPair> hazards;
  for (const auto& s : spec.scenarios) hazards.push_back(cell_hazards(s, spec.null_mode));

  SimulationSummary summary;
  summary.n_sims = spec.n_sims;
  summary.master_seed = spec.master_seed;
  summary.null_mode = spec.null_mode;

  const auto n = static_cast<std::size_t>(spec.n_sims);
  for (std::size_t c = 0; c < spec.scenarios.size(); ++c) {
    std::vector<TrialOutcome> outcomes(n);
    parallel_for(n, spec.workers, [&](std::size_t i) {
      RngStream stream(spec.master_seed, i);
      const auto trial = simulate_trial(spec.design, hazards[c], spec.dropout_rate, stream);
      outcomes[i] = analyse_trial(spec, trial);
    });
    summary.cells.push_back(reduce_cell(spec, spec.scenarios[c], outcomes));
  }
  return summary;
}

SimulationSummary run_null_equal_threshold(const RunSpec& spec,
                                           std::span<const double> threshold_grid) {
  RunSpec s = spec;
  s.null_mode = NullMode::equal_threshold;
  ScenarioSpec base = spec.scenarios.empty() ? ScenarioSpec{} : spec.scenarios.front();
  base.pattern = Pattern::delayed;
  s.scenarios.clear();
  for (double t : threshold_grid) {
    auto cell = base;
    cell.threshold = t;
    s.scenarios.push_back(cell);
  }
  return run_grid(s);
}

namespace {

std::string fmt(double x) { return std::isnan(x) ? "" : format_double(x); }

}  // namespace

void write_summary_csv(std::ostream& out, const SimulationSummary& summary) {
  out << "pattern,threshold,method,metric,value,mc_se,n_used,n_failed\n";
  const std::string rate_metric =
      summary.null_mode == NullMode::none ? "power" : "type1_error";
  for (const auto& cell : summary.cells) {
    const std::string prefix =
        std::string(name(cell.scenario.pattern)) + "," + format_double(cell.scenario.threshold) + ",";
    for (const auto& t : cell.tests) {
      out << prefix << '"' << t.test.name() << "\"," << rate_metric << ','
          << fmt(t.rejection_rate) << ',' << fmt(t.mc_std_err) << ',' << t.n_used << ','
          << t.n_failed << '\n';
    }
    for (const auto& e : cell.estimators) {
      out << prefix << '"' << e.estimator.name() << "\",estimate," << fmt(e.value) << ','
          << fmt(e.mc_std_err) << ',' << e.n_used << ',' << e.n_failed << '\n';
      if (e.rmst_control) {
        out << prefix << '"' << e.estimator.name() << "\",rmst_control," << fmt(*e.rmst_control)
            << ",," << e.n_used << ',' << e.n_failed << '\n';
        out << prefix << '"' << e.estimator.name() << "\",rmst_experimental,"
            << fmt(*e.rmst_experimental) << ",," << e.n_used << ',' << e.n_failed << '\n';
      }
    }
  }
}

void write_cell_diagnostics_csv(std::ostream& out, const SimulationSummary& summary) {
  out << "pattern,threshold,n_sims,mean_events,mean_analysis_time,shortfalls,mean_t_star,"
         "method,n_failed\n";
  for (const auto& cell : summary.cells) {
    const std::string prefix = std::string(name(cell.scenario.pattern)) + "," +
                               format_double(cell.scenario.threshold) + "," +
                               std::to_string(summary.n_sims) + "," + fmt(cell.mean_events) +
                               "," + fmt(cell.mean_analysis_time) + "," +
                               std::to_string(cell.shortfalls) + "," + fmt(cell.mean_t_star) + ",";
    for (const auto& t : cell.tests) {
      out << prefix << '"' << t.test.name() << "\"," << t.n_failed << '\n';
    }
    for (const auto& e : cell.estimators) {
      out << prefix << '"' << e.estimator.name() << "\"," << e.n_failed << '\n';
    }
  }
}

std::vector<CurvePoint> power_vs_events(const TrialDesign& design, const ScenarioSpec& scenario,
                                        std::span<const int> event_grid, const TestId& test,
                                        int n_sims, std::uint64_t seed,
                                        const CurveOptions& options) {
  design.validate();
  for (int e : event_grid) {
    if (e < 1 || e > 2 * design.n_per_arm) {
      throw ConfigError("event grid values must lie in [1, 2*n_per_arm]");
    }
  }
  if (n_sims < 1) throw ConfigError("n_sims must be positive");
  const auto hazards = make_scenario(scenario);
  RunSpec spec;
  spec.design = design;
  spec.tests = {test};
  spec.t_star_rule = options.t_star_rule;

  const auto n = static_cast<std::size_t>(n_sims);
  const std::size_t g = event_grid.size();
  std::vector<signed char> rejected(n * g, -1);
  parallel_for(n, options.workers, [&](std::size_t i) {
    RngStream stream(seed, i);
    const auto cohort = draw_cohort(design, hazards, options.dropout_rate, stream);
    for (std::size_t k = 0; k < g; ++k) {
      const auto trial = cut_at_events(cohort, design, event_grid[k]);
      rejected[i * g + k] = analyse_trial(spec, trial).rejected[0];
    }
  });

  std::vector<CurvePoint> curve(g);
  for (std::size_t k = 0; k < g; ++k) {
    auto& p = curve[k];
    p.x = event_grid[k];
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = rejected[i * g + k];
      if (r < 0) {
        ++p.n_failed;
      } else {
        ++p.n_used;
        hits += static_cast<std::size_t>(r);
      }
    }
    p.power = p.n_used ? static_cast<double>(hits) / static_cast<double>(p.n_used) : kNaN;
    p.mc_std_err = binomial_se(hits, p.n_used);
  }
  return curve;
}

std::vector<CurvePoint> power_vs_tstar(const TrialDesign& design, const ScenarioSpec& scenario,
                                       std::span<const double> tstar_grid, int n_sims,
                                       std::uint64_t seed, const CurveOptions& options) {
  design.validate();
  for (double t : tstar_grid) {
    if (!(t > 0.0)) throw ConfigError("t* grid values must be positive");
  }
  if (n_sims < 1) throw ConfigError("n_sims must be positive");
  const auto hazards = make_scenario(scenario);
  const auto n = static_cast<std::size_t>(n_sims);
  const std::size_t g = tstar_grid.size();
  std::vector<signed char> rejected(n * g, -1);
  std::vector<unsigned char> capped(n * g, 0);
  parallel_for(n, options.workers, [&](std::size_t i) {
    RngStream stream(seed, i);
    const auto trial = simulate_trial(design, hazards, options.dropout_rate, stream);
    const auto& data = trial.dataset;
    if (data.count(Arm::control) == 0 || data.count(Arm::experimental) == 0) return;
    const auto c0 = kaplan_meier(data.arm(Arm::control));
    const auto c1 = kaplan_meier(data.arm(Arm::experimental));
    for (std::size_t k = 0; k < g; ++k) {
      const auto resolved = resolve_t_star(data, {TStarRule::Kind::fixed, tstar_grid[k]});
      capped[i * g + k] = resolved.capped ? 1 : 0;
      try {
        const auto r = rmst_difference_test(c0, c1, resolved.t_star);
        rejected[i * g + k] = r.rejects(design.alpha_one_sided) ? 1 : 0;
      } catch (const Error&) {
      }
    }
  });

  std::vector<CurvePoint> curve(g);
  for (std::size_t k = 0; k < g; ++k) {
    auto& p = curve[k];
    p.x = tstar_grid[k];
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = rejected[i * g + k];
      p.capped += capped[i * g + k];
      if (r < 0) {
        ++p.n_failed;
      } else {
        ++p.n_used;
        hits += static_cast<std::size_t>(r);
      }
    }
    p.power = p.n_used ? static_cast<double>(hits) / static_cast<double>(p.n_used) : kNaN;
    p.mc_std_err = binomial_se(hits, p.n_used);
  }
  return curve;
}

}  // namespace nphsurv
