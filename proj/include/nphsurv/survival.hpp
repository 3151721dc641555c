#pragma once

// Right-censored two-arm survival data, risk tables and Kaplan-Meier curves.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace nphsurv {

enum class Arm : std::uint8_t { control = 0, experimental = 1 };

constexpr std::size_t index(Arm a) noexcept { return static_cast<std::size_t>(a); }
constexpr Arm other(Arm a) noexcept {
  return a == Arm::control ? Arm::experimental : Arm::control;
}

struct SurvivalObservation {
  double time = 0.0;  // months from randomization
  bool event = false;
  Arm arm = Arm::control;

  friend bool operator==(const SurvivalObservation&, const SurvivalObservation&) = default;
};

// Validated, immutable collection of observations. Construction throws
// DataError on negative or non-finite times.
class TwoArmDataset {
 public:
  TwoArmDataset() = default;
  explicit TwoArmDataset(std::vector<SurvivalObservation> observations);

  std::span<const SurvivalObservation> observations() const noexcept { return obs_; }
  std::size_t size() const noexcept { return obs_.size(); }
  bool empty() const noexcept { return obs_.empty(); }

  std::size_t count(Arm arm) const noexcept { return counts_[index(arm)]; }
  std::size_t events(Arm arm) const noexcept { return events_[index(arm)]; }
  std::size_t events() const noexcept { return events_[0] + events_[1]; }

  // Observations of a single arm, in input order.
  std::vector<SurvivalObservation> arm(Arm arm) const;

  // Same data with control and experimental labels exchanged.
  TwoArmDataset swapped_arms() const;

  // Throws DataError("empty arm") unless both arms have observations.
  void require_both_arms() const;

 private:
  std::vector<SurvivalObservation> obs_;
  std::array<std::size_t, 2> counts_{};
  std::array<std::size_t, 2> events_{};
};

// One row per distinct event time, stored column-wise so the reductions in
// kernels.hpp can stream over contiguous arrays. Counts are held as doubles.
class RiskTable {
 public:
  struct Row {
    double time;
    double at_risk0, at_risk1;
    double events0, events1;

    double at_risk() const noexcept { return at_risk0 + at_risk1; }
    double events() const noexcept { return events0 + events1; }
  };

  std::size_t size() const noexcept { return time_.size(); }
  bool empty() const noexcept { return time_.empty(); }
  Row row(std::size_t j) const noexcept {
    return {time_[j], at_risk0_[j], at_risk1_[j], events0_[j], events1_[j]};
  }

  std::span<const double> times() const noexcept { return time_; }
  std::span<const double> at_risk0() const noexcept { return at_risk0_; }
  std::span<const double> at_risk1() const noexcept { return at_risk1_; }
  std::span<const double> events0() const noexcept { return events0_; }
  std::span<const double> events1() const noexcept { return events1_; }

  void push_back(const Row& r);
  void reserve(std::size_t n);

 private:
  std::vector<double> time_, at_risk0_, at_risk1_, events0_, events1_;
};

// Right-continuous product-limit curve. Steps exist only at event times;
// the value is 1 on [0, first step). `support` is the largest observed time
// (event or censored) of the underlying data; the curve is defined on
// [0, support].
struct SurvivalCurve {
  struct Step {
    double time;
    double survival;
    double at_risk;
    double events;
  };
  std::vector<Step> steps;
  double support = 0.0;

  // S(t), right-continuous.
  double value(double t) const noexcept;
  // S(t-), the value just before t.
  double left_value(double t) const noexcept;
};

// Ties: an event and a censoring at the same time keep the censored subject
// in the risk set at that time. Throws DataError on empty input or no events.
RiskTable build_risk_table(const TwoArmDataset& dataset);

// Arm labels are ignored; all observations are pooled. Throws DataError on
// empty input.
SurvivalCurve kaplan_meier(std::span<const SurvivalObservation> observations);

// Pooled Kaplan-Meier value immediately before each row's time.
std::vector<double> pooled_left_survival(const RiskTable& table);

}  // namespace nphsurv
