#pragma once

// Treatment-effect estimators with normal-approximation 95% intervals.

#include <span>
#include <string>

#include "nphsurv/hypothesis.hpp"
#include "nphsurv/survival.hpp"

namespace nphsurv {

inline constexpr double kZ975 = 1.959964;

enum class EffectScale { log_hazard_ratio, rmst_difference_months, log_rmst_ratio };

struct EffectEstimate {
  EffectScale scale = EffectScale::log_hazard_ratio;
  double point = 0.0;     // on `scale`
  double std_err = 0.0;   // on `scale`
  double ci_low = 0.0;    // point -/+ kZ975 * std_err, on `scale`
  double ci_high = 0.0;
  double reported = 0.0;  // hazard ratio, months, or RMST ratio
  int iterations = 0;     // Newton iterations, partial-likelihood estimators only

  // Interval on the reported (natural) scale.
  double reported_ci_low() const noexcept;
  double reported_ci_high() const noexcept;
};

enum class EstimatorKind { hazard_ratio, weighted_hazard_ratio, rmst_difference, rmst_ratio };

struct EstimatorId {
  EstimatorKind kind = EstimatorKind::hazard_ratio;
  FlemingHarrington fh{};

  std::string name() const;
  // "hr", "whr(r,g)", "rmst_diff", "rmst_ratio"; throws ConfigError otherwise.
  static EstimatorId parse(std::string_view text);

  friend bool operator==(const EstimatorId&, const EstimatorId&) = default;
};

// Two-group Cox model, experimental = 1, Breslow ties. `reported` is
// exp(beta), the experimental-vs-control hazard ratio.
EffectEstimate hazard_ratio(const TwoArmDataset& dataset);
EffectEstimate hazard_ratio(const RiskTable& table);

// Partial likelihood with each event row's score and information terms
// multiplied by a fixed weight (pooled left-limit Fleming-Harrington weights).
EffectEstimate weighted_hazard_ratio(const TwoArmDataset& dataset, const FlemingHarrington& params);
EffectEstimate weighted_hazard_ratio(const RiskTable& table, std::span<const double> weights);

// mu_experimental - mu_control.
EffectEstimate rmst_difference(const TwoArmDataset& dataset, double t_star);
EffectEstimate rmst_difference(const RmstEstimate& control, const RmstEstimate& experimental);

// log(mu_control / mu_experimental) with a delta-method standard error;
// reported ratio < 1 favours the experimental arm.
EffectEstimate rmst_ratio(const TwoArmDataset& dataset, double t_star);
EffectEstimate rmst_ratio(const RmstEstimate& control, const RmstEstimate& experimental);

}  // namespace nphsurv
