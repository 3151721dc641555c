#pragma once

// One-sided two-arm tests: log-rank, Fleming-Harrington weighted log-rank
// and the RMST difference test.
//
// Sign convention for every test: U > 0 and z > 0 favour the experimental
// arm. For the log-rank family U is observed minus expected events on the
// control arm; for RMST it is mu_experimental - mu_control. The reported
// p-value is 1 - Phi(z).

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nphsurv/survival.hpp"

namespace nphsurv {

class FlemingHarrington {
 public:
  constexpr FlemingHarrington() = default;
  // Throws std::invalid_argument on negative exponents.
  FlemingHarrington(double rho, double gamma);

  double rho() const noexcept { return rho_; }
  double gamma() const noexcept { return gamma_; }
  std::string label() const;  // "fh(rho,gamma)"

  friend bool operator==(const FlemingHarrington&, const FlemingHarrington&) = default;

 private:
  double rho_ = 0.0;
  double gamma_ = 0.0;
};

enum class TestKind { logrank, fleming_harrington, rmst_difference };

struct TestId {
  TestKind kind = TestKind::logrank;
  FlemingHarrington fh{};

  std::string name() const;
  // Accepts "logrank", "fh(r,g)", "rmst_diff"; throws ConfigError otherwise.
  static TestId parse(std::string_view text);

  friend bool operator==(const TestId&, const TestId&) = default;
};

struct TestResult {
  TestId test;
  double statistic_u = 0.0;
  double variance_u = 0.0;
  double z = 0.0;
  double p_one_sided = 0.5;

  bool rejects(double alpha) const noexcept { return p_one_sided <= alpha; }
};

struct RmstEstimate {
  double mu = 0.0;
  double variance = 0.0;
  double t_star = 0.0;
  std::optional<Arm> arm;  // empty for pooled data
};

TestResult log_rank(const TwoArmDataset& dataset);
TestResult log_rank(const RiskTable& table);

// w_j = s_j^rho (1 - s_j)^gamma with 0^0 = 1.
std::vector<double> fh_weights(std::span<const double> pooled_left_surv,
                               const FlemingHarrington& params);

TestResult weighted_log_rank(const TwoArmDataset& dataset, const FlemingHarrington& params);
// Reuses a prebuilt table and its pooled left-limit survival.
TestResult weighted_log_rank(const RiskTable& table, std::span<const double> pooled_left,
                             const FlemingHarrington& params);

// Area under the curve on [0, t_star] and its Greenwood-type variance
//   sum_{t_i <= t_star} (int_{t_i}^{t_star} S)^2 d_i / (Y_i (Y_i - d_i)),
// with rows where Y_i == d_i contributing zero.
RmstEstimate rmst(const SurvivalCurve& curve, double t_star);

TestResult rmst_difference_test(const TwoArmDataset& dataset, double t_star);
TestResult rmst_difference_test(const SurvivalCurve& control, const SurvivalCurve& experimental,
                                double t_star);

double minimax_observed_time(const TwoArmDataset& dataset);
double minimax_event_time(const TwoArmDataset& dataset);

// Rule for choosing the RMST truncation time of a dataset.
struct TStarRule {
  enum class Kind { minimax_observed, minimax_event, fixed };
  Kind kind = Kind::minimax_observed;
  double value = 0.0;  // used by `fixed`

  // "minimax-observed", "minimax-event" or "fixed:X".
  static TStarRule parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const TStarRule&, const TStarRule&) = default;
};

struct ResolvedTStar {
  double t_star;
  bool capped;  // a fixed value was lowered to the minimax observed time
};

ResolvedTStar resolve_t_star(const TwoArmDataset& dataset, const TStarRule& rule);

}  // namespace nphsurv
