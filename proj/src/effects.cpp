#include "nphsurv/effects.hpp"

#include <cmath>

#include "nphsurv/error.hpp"
#include "nphsurv/kernels.hpp"

namespace nphsurv {

double EffectEstimate::reported_ci_low() const noexcept {
  return scale == EffectScale::rmst_difference_months ? ci_low : std::exp(ci_low);
}

double EffectEstimate::reported_ci_high() const noexcept {
  return scale == EffectScale::rmst_difference_months ? ci_high : std::exp(ci_high);
}

std::string EstimatorId::name() const {
  switch (kind) {
    case EstimatorKind::hazard_ratio: return "hr";
    case EstimatorKind::weighted_hazard_ratio:
      return "whr" + fh.label().substr(2);
    case EstimatorKind::rmst_difference: return "rmst_diff";
    case EstimatorKind::rmst_ratio: return "rmst_ratio";
  }
  return "unknown";
}

EstimatorId EstimatorId::parse(std::string_view text) {
  if (text == "hr") return {EstimatorKind::hazard_ratio, {}};
  if (text == "rmst_diff") return {EstimatorKind::rmst_difference, {}};
  if (text == "rmst_ratio") return {EstimatorKind::rmst_ratio, {}};
  if (text.starts_with("whr(")) {
    const auto as_test = TestId::parse("fh" + std::string(text.substr(3)));
    return {EstimatorKind::weighted_hazard_ratio, as_test.fh};
  }
  throw ConfigError("unknown estimator '" + std::string(text) + "'");
}

namespace {

constexpr int kMaxIterations = 50;
constexpr int kMaxHalvings = 30;
constexpr double kScoreTol = 1e-8;
constexpr double kStepTol = 1e-10;

EffectEstimate on_scale(EffectScale scale, double point, double se, double reported) {
  EffectEstimate e;
  e.scale = scale;
  e.point = point;
  e.std_err = se;
  e.ci_low = point - kZ975 * se;
  e.ci_high = point + kZ975 * se;
  e.reported = reported;
  return e;
}

// The likelihood is monotone when the score keeps one sign as beta runs off
// to either infinity: no weighted control events while experimental
// subjects are at risk, or no weighted experimental events while control
// subjects are at risk.
bool monotone_likelihood(const RiskTable& t, std::span<const double> w) {
  double score_at_plus_inf = 0.0;
  double score_at_minus_inf = 0.0;
  for (std::size_t j = 0; j < t.size(); ++j) {
    const auto r = t.row(j);
    if (r.at_risk1 > 0.0) score_at_plus_inf -= w[j] * r.events0;
    if (r.at_risk0 > 0.0) score_at_minus_inf += w[j] * r.events1;
  }
  return !(score_at_plus_inf < 0.0) || !(score_at_minus_inf > 0.0);
}

EffectEstimate fit_partial_likelihood(const RiskTable& table, std::span<const double> w) {
  if (table.size() == 0) throw DataError("no events");
  double total_events = 0.0;
  double weight_mass = 0.0;
  for (std::size_t j = 0; j < table.size(); ++j) {
    total_events += table.row(j).events();
    weight_mass += w[j];
  }
  if (total_events < 2.0) throw DataError("hazard ratio needs at least 2 events");
  if (!(weight_mass > 0.0)) throw NumericalError("weights vanish");
  if (monotone_likelihood(table, w)) throw MonotoneLikelihood();

  const auto& k = kernels::active();
  const auto rows = kernels::RiskColumns::of(table);

  double beta = 0.0;
  auto terms = k.cox_terms(rows, w, 1.0);
  for (int iter = 1; iter <= kMaxIterations; ++iter) {
    if (std::abs(terms.score) < kScoreTol) {
      auto e = on_scale(EffectScale::log_hazard_ratio, beta, 1.0 / std::sqrt(terms.information),
                        std::exp(beta));
      e.iterations = iter - 1;
      return e;
    }
    if (!(terms.information > 0.0)) {
      throw ConvergenceError("partial likelihood: nonpositive information", beta);
    }

    double step = terms.score / terms.information;
    double next = beta + step;
    auto next_terms = k.cox_terms(rows, w, std::exp(next));
    for (int h = 0; h < kMaxHalvings && !(std::abs(next_terms.score) < std::abs(terms.score));
         ++h) {
      step *= 0.5;
      next = beta + step;
      next_terms = k.cox_terms(rows, w, std::exp(next));
    }
    beta = next;
    terms = next_terms;

    if (std::abs(step) < kStepTol) {
      if (!(terms.information > 0.0)) {
        throw ConvergenceError("partial likelihood: nonpositive information", beta);
      }
      auto e = on_scale(EffectScale::log_hazard_ratio, beta, 1.0 / std::sqrt(terms.information),
                        std::exp(beta));
      e.iterations = iter;
      return e;
    }
  }
  throw ConvergenceError("partial likelihood did not converge", beta);
}

}  // namespace

EffectEstimate hazard_ratio(const TwoArmDataset& dataset) {
  dataset.require_both_arms();
  return hazard_ratio(build_risk_table(dataset));
}

EffectEstimate hazard_ratio(const RiskTable& table) {
  const std::vector<double> ones(table.size(), 1.0);
  return fit_partial_likelihood(table, ones);
}

EffectEstimate weighted_hazard_ratio(const TwoArmDataset& dataset,
                                     const FlemingHarrington& params) {
  dataset.require_both_arms();
  const auto table = build_risk_table(dataset);
  const auto w = fh_weights(pooled_left_survival(table), params);
  return weighted_hazard_ratio(table, w);
}

EffectEstimate weighted_hazard_ratio(const RiskTable& table, std::span<const double> weights) {
  return fit_partial_likelihood(table, weights);
}

EffectEstimate rmst_difference(const TwoArmDataset& dataset, double t_star) {
  dataset.require_both_arms();
  const auto r0 = rmst(kaplan_meier(dataset.arm(Arm::control)), t_star);
  const auto r1 = rmst(kaplan_meier(dataset.arm(Arm::experimental)), t_star);
  return rmst_difference(r0, r1);
}

EffectEstimate rmst_difference(const RmstEstimate& control, const RmstEstimate& experimental) {
  const double diff = experimental.mu - control.mu;
  return on_scale(EffectScale::rmst_difference_months, diff,
                  std::sqrt(control.variance + experimental.variance), diff);
}

EffectEstimate rmst_ratio(const TwoArmDataset& dataset, double t_star) {
  dataset.require_both_arms();
  const auto r0 = rmst(kaplan_meier(dataset.arm(Arm::control)), t_star);
  const auto r1 = rmst(kaplan_meier(dataset.arm(Arm::experimental)), t_star);
  return rmst_ratio(r0, r1);
}

EffectEstimate rmst_ratio(const RmstEstimate& control, const RmstEstimate& experimental) {
  if (!(control.mu > 0.0) || !(experimental.mu > 0.0)) {
    throw NumericalError("zero RMST");
  }
  const double se = std::sqrt(control.variance / (control.mu * control.mu) +
                              experimental.variance / (experimental.mu * experimental.mu));
  return on_scale(EffectScale::log_rmst_ratio, std::log(control.mu / experimental.mu), se,
                  control.mu / experimental.mu);
}

}  // namespace nphsurv
