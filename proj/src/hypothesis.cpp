#include "nphsurv/hypothesis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "nphsurv/dataset_io.hpp"
#include "nphsurv/error.hpp"
#include "nphsurv/kernels.hpp"
#include "nphsurv/numerics.hpp"

namespace nphsurv {

FlemingHarrington::FlemingHarrington(double rho, double gamma) : rho_(rho), gamma_(gamma) {
  if (!(rho >= 0.0) || !(gamma >= 0.0) || !std::isfinite(rho) || !std::isfinite(gamma)) {
    throw std::invalid_argument("Fleming-Harrington exponents must be finite and >= 0");
  }
}

std::string FlemingHarrington::label() const {
  return "fh(" + format_double(rho_) + "," + format_double(gamma_) + ")";
}

std::string TestId::name() const {
  switch (kind) {
    case TestKind::logrank: return "logrank";
    case TestKind::fleming_harrington: return fh.label();
    case TestKind::rmst_difference: return "rmst_diff";
  }
  return "unknown";
}

namespace {

double parse_number(std::string_view s, std::string_view context) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("cannot parse number in '" + std::string(context) + "'");
  }
  return v;
}

// "name(a,b)" -> (a, b)
std::pair<double, double> parse_pair(std::string_view text, std::string_view prefix) {
  if (!text.starts_with(prefix) || !text.ends_with(")")) {
    throw ConfigError("malformed '" + std::string(text) + "'");
  }
  auto inner = text.substr(prefix.size(), text.size() - prefix.size() - 1);
  const auto comma = inner.find(',');
  if (comma == std::string_view::npos) {
    throw ConfigError("expected two parameters in '" + std::string(text) + "'");
  }
  return {parse_number(inner.substr(0, comma), text), parse_number(inner.substr(comma + 1), text)};
}

TestResult finish(TestId id, double u, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DegenerateVariance();
  TestResult r;
  r.test = id;
  r.statistic_u = u;
  r.variance_u = v;
  r.z = u / std::sqrt(v);
  r.p_one_sided = std_normal_cdf(-r.z);
  return r;
}

}  // namespace

TestId TestId::parse(std::string_view text) {
  if (text == "logrank") return {TestKind::logrank, {}};
  if (text == "rmst_diff") return {TestKind::rmst_difference, {}};
  if (text.starts_with("fh(")) {
    const auto [rho, gamma] = parse_pair(text, "fh(");
    try {
      return {TestKind::fleming_harrington, FlemingHarrington(rho, gamma)};
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  throw ConfigError("unknown test '" + std::string(text) + "'");
}

TestResult log_rank(const TwoArmDataset& dataset) {
  dataset.require_both_arms();
  return log_rank(build_risk_table(dataset));
}

TestResult log_rank(const RiskTable& table) {
  const std::vector<double> ones(table.size(), 1.0);
  const auto sums = kernels::active().logrank(kernels::RiskColumns::of(table), ones);
  return finish({TestKind::logrank, {}}, sums.u, sums.v);
}

std::vector<double> fh_weights(std::span<const double> s, const FlemingHarrington& params) {
  std::vector<double> w(s.size());
  const double rho = params.rho();
  const double gamma = params.gamma();
  for (std::size_t j = 0; j < s.size(); ++j) {
    const double surv = std::clamp(s[j], 0.0, 1.0);
    const double a = rho == 0.0 ? 1.0 : std::pow(surv, rho);
    const double b = gamma == 0.0 ? 1.0 : std::pow(1.0 - surv, gamma);
    w[j] = a * b;
  }
  return w;
}

TestResult weighted_log_rank(const TwoArmDataset& dataset, const FlemingHarrington& params) {
  dataset.require_both_arms();
  const auto table = build_risk_table(dataset);
  const auto left = pooled_left_survival(table);
  return weighted_log_rank(table, left, params);
}

TestResult weighted_log_rank(const RiskTable& table, std::span<const double> pooled_left,
                             const FlemingHarrington& params) {
  const auto w = fh_weights(pooled_left, params);
  const auto sums = kernels::active().logrank(kernels::RiskColumns::of(table), w);
  return finish({TestKind::fleming_harrington, params}, sums.u, sums.v);
}

RmstEstimate rmst(const SurvivalCurve& curve, double t_star) {
  if (!(t_star > 0.0)) throw DataError("t_star must be positive");
  if (t_star > curve.support) throw DataError("t_star beyond data support");

  const auto& steps = curve.steps;
  const std::size_t k = static_cast<std::size_t>(
      std::upper_bound(steps.begin(), steps.end(), t_star,
                       [](double x, const SurvivalCurve::Step& s) { return x < s.time; }) -
      steps.begin());

  RmstEstimate out;
  out.t_star = t_star;
  out.mu = integrate_step(curve, 0.0, t_star);

  // Walk backwards accumulating tail = int_{t_i}^{t_star} S.
  double tail = 0.0;
  double next_time = t_star;
  double variance = 0.0;
  for (std::size_t i = k; i-- > 0;) {
    tail += steps[i].survival * (next_time - steps[i].time);
    next_time = steps[i].time;
    const double y = steps[i].at_risk;
    const double d = steps[i].events;
    if (y > d) variance += tail * tail * d / (y * (y - d));
  }
  out.variance = variance;
  return out;
}

TestResult rmst_difference_test(const TwoArmDataset& dataset, double t_star) {
  dataset.require_both_arms();
  const auto c0 = kaplan_meier(dataset.arm(Arm::control));
  const auto c1 = kaplan_meier(dataset.arm(Arm::experimental));
  return rmst_difference_test(c0, c1, t_star);
}

TestResult rmst_difference_test(const SurvivalCurve& control, const SurvivalCurve& experimental,
                                double t_star) {
  const auto r0 = rmst(control, t_star);
  const auto r1 = rmst(experimental, t_star);
  return finish({TestKind::rmst_difference, {}}, r1.mu - r0.mu, r1.variance + r0.variance);
}

double minimax_observed_time(const TwoArmDataset& dataset) {
  dataset.require_both_arms();
  double max_time[2] = {0.0, 0.0};
  for (const auto& o : dataset.observations()) {
    auto& m = max_time[index(o.arm)];
    m = std::max(m, o.time);
  }
  return std::min(max_time[0], max_time[1]);
}

double minimax_event_time(const TwoArmDataset& dataset) {
  if (dataset.events(Arm::control) == 0 || dataset.events(Arm::experimental) == 0) {
    throw DataError("no events in arm");
  }
  double max_time[2] = {0.0, 0.0};
  for (const auto& o : dataset.observations()) {
    if (!o.event) continue;
    auto& m = max_time[index(o.arm)];
    m = std::max(m, o.time);
  }
  return std::min(max_time[0], max_time[1]);
}

TStarRule TStarRule::parse(std::string_view text) {
  if (text == "minimax-observed") return {Kind::minimax_observed, 0.0};
  if (text == "minimax-event") return {Kind::minimax_event, 0.0};
  if (text.starts_with("fixed:")) {
    const double v = parse_number(text.substr(6), text);
    if (!(v > 0.0)) throw ConfigError("fixed t_star must be positive");
    return {Kind::fixed, v};
  }
  throw ConfigError("unknown t* rule '" + std::string(text) +
                    "' (expected minimax-observed, minimax-event or fixed:X)");
}

std::string TStarRule::to_string() const {
  switch (kind) {
    case Kind::minimax_observed: return "minimax-observed";
    case Kind::minimax_event: return "minimax-event";
    case Kind::fixed: return "fixed:" + format_double(value);
  }
  return "unknown";
}

ResolvedTStar resolve_t_star(const TwoArmDataset& dataset, const TStarRule& rule) {
  switch (rule.kind) {
    case TStarRule::Kind::minimax_observed: return {minimax_observed_time(dataset), false};
    case TStarRule::Kind::minimax_event: return {minimax_event_time(dataset), false};
    case TStarRule::Kind::fixed: {
      const double support = minimax_observed_time(dataset);
      if (rule.value > support) return {support, true};
      return {rule.value, false};
    }
  }
  return {minimax_observed_time(dataset), false};
}

}  // namespace nphsurv
