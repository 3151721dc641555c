#include "nphsurv/survival.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "nphsurv/error.hpp"

namespace nphsurv {

TwoArmDataset::TwoArmDataset(std::vector<SurvivalObservation> observations)
    : obs_(std::move(observations)) {
  for (std::size_t i = 0; i < obs_.size(); ++i) {
    const auto& o = obs_[i];
    if (!std::isfinite(o.time) || o.time < 0.0) {
      throw DataError("observation " + std::to_string(i) +
                      ": time must be finite and nonnegative");
    }
    if (o.arm != Arm::control && o.arm != Arm::experimental) {
      throw DataError("observation " + std::to_string(i) + ": invalid arm");
    }
    ++counts_[index(o.arm)];
    if (o.event) ++events_[index(o.arm)];
  }
}

std::vector<SurvivalObservation> TwoArmDataset::arm(Arm a) const {
  std::vector<SurvivalObservation> out;
  out.reserve(count(a));
  std::copy_if(obs_.begin(), obs_.end(), std::back_inserter(out),
               [a](const SurvivalObservation& o) { return o.arm == a; });
  return out;
}

TwoArmDataset TwoArmDataset::swapped_arms() const {
  auto copy = obs_;
  for (auto& o : copy) o.arm = other(o.arm);
  return TwoArmDataset(std::move(copy));
}

void TwoArmDataset::require_both_arms() const {
  if (count(Arm::control) == 0 || count(Arm::experimental) == 0) {
    throw DataError("empty arm");
  }
}

void RiskTable::push_back(const Row& r) {
  time_.push_back(r.time);
  at_risk0_.push_back(r.at_risk0);
  at_risk1_.push_back(r.at_risk1);
  events0_.push_back(r.events0);
  events1_.push_back(r.events1);
}

void RiskTable::reserve(std::size_t n) {
  time_.reserve(n);
  at_risk0_.reserve(n);
  at_risk1_.reserve(n);
  events0_.reserve(n);
  events1_.reserve(n);
}

double SurvivalCurve::value(double t) const noexcept {
  // last step with time <= t
  auto it = std::upper_bound(steps.begin(), steps.end(), t,
                             [](double x, const Step& s) { return x < s.time; });
  return it == steps.begin() ? 1.0 : std::prev(it)->survival;
}

double SurvivalCurve::left_value(double t) const noexcept {
  auto it = std::lower_bound(steps.begin(), steps.end(), t,
                             [](const Step& s, double x) { return s.time < x; });
  return it == steps.begin() ? 1.0 : std::prev(it)->survival;
}

namespace {

std::vector<std::size_t> time_order(std::span<const SurvivalObservation> obs) {
  std::vector<std::size_t> order(obs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return obs[a].time < obs[b].time; });
  return order;
}

}  // namespace

RiskTable build_risk_table(const TwoArmDataset& dataset) {
  if (dataset.empty()) throw DataError("no observations");
  if (dataset.events() == 0) throw DataError("no events");

  const auto obs = dataset.observations();
  const auto order = time_order(obs);

  RiskTable table;
  table.reserve(dataset.events());
  double at_risk[2] = {static_cast<double>(dataset.count(Arm::control)),
                       static_cast<double>(dataset.count(Arm::experimental))};

  std::size_t i = 0;
  while (i < order.size()) {
    const double t = obs[order[i]].time;
    double events[2] = {0.0, 0.0};
    double leaving[2] = {0.0, 0.0};
    std::size_t j = i;
    for (; j < order.size() && obs[order[j]].time == t; ++j) {
      const auto& o = obs[order[j]];
      leaving[index(o.arm)] += 1.0;
      if (o.event) events[index(o.arm)] += 1.0;
    }
    if (events[0] + events[1] > 0.0) {
      table.push_back({t, at_risk[0], at_risk[1], events[0], events[1]});
    }
    at_risk[0] -= leaving[0];
    at_risk[1] -= leaving[1];
    i = j;
  }
  return table;
}

SurvivalCurve kaplan_meier(std::span<const SurvivalObservation> observations) {
  if (observations.empty()) throw DataError("no observations");

  const auto order = time_order(observations);
  SurvivalCurve curve;
  curve.support = observations[order.back()].time;

  double at_risk = static_cast<double>(observations.size());
  double s = 1.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double t = observations[order[i]].time;
    double events = 0.0;
    double leaving = 0.0;
    std::size_t j = i;
    for (; j < order.size() && observations[order[j]].time == t; ++j) {
      leaving += 1.0;
      if (observations[order[j]].event) events += 1.0;
    }
    if (events > 0.0) {
      s *= 1.0 - events / at_risk;
      curve.steps.push_back({t, s, at_risk, events});
    }
    at_risk -= leaving;
    i = j;
  }
  return curve;
}

std::vector<double> pooled_left_survival(const RiskTable& table) {
  std::vector<double> out(table.size());
  double s = 1.0;
  for (std::size_t j = 0; j < table.size(); ++j) {
    out[j] = s;
    const auto r = table.row(j);
    s *= 1.0 - r.events() / r.at_risk();
  }
  return out;
}

}  // namespace nphsurv
