#include "nphsurv/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "nphsurv/dataset_io.hpp"
#include "nphsurv/error.hpp"
#include "nphsurv/numerics.hpp"

namespace nphsurv {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

PiecewiseExponential::PiecewiseExponential(std::vector<double> cut_points,
                                           std::vector<double> rates)
    : cuts_(std::move(cut_points)), rates_(std::move(rates)) {
  if (rates_.size() != cuts_.size() + 1) {
    throw std::invalid_argument("piecewise exponential needs one more rate than cut points");
  }
  for (double r : rates_) {
    if (!(r > 0.0) || !std::isfinite(r)) {
      throw std::invalid_argument("piecewise exponential rates must be positive and finite");
    }
  }
  double prev = 0.0;
  for (double c : cuts_) {
    if (!(c > prev) || !std::isfinite(c)) {
      throw std::invalid_argument("cut points must be positive and strictly increasing");
    }
    prev = c;
  }
}

double PiecewiseExponential::hazard(double t) const noexcept {
  const auto k = std::upper_bound(cuts_.begin(), cuts_.end(), t) - cuts_.begin();
  return rates_[static_cast<std::size_t>(k)];
}

double PiecewiseExponential::cumulative_hazard(double t) const noexcept {
  if (!(t > 0.0)) return 0.0;
  double h = 0.0;
  double start = 0.0;
  for (std::size_t k = 0; k < cuts_.size(); ++k) {
    if (t <= cuts_[k]) return h + rates_[k] * (t - start);
    h += rates_[k] * (cuts_[k] - start);
    start = cuts_[k];
  }
  return h + rates_.back() * (t - start);
}

double PiecewiseExponential::survival(double t) const noexcept {
  return std::exp(-cumulative_hazard(t));
}

double PiecewiseExponential::inverse_survival(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("inverse_survival needs 0 < u < 1");
  double remaining = -std::log(u);
  double start = 0.0;
  for (std::size_t k = 0; k < cuts_.size(); ++k) {
    const double piece = rates_[k] * (cuts_[k] - start);
    if (remaining <= piece) return start + remaining / rates_[k];
    remaining -= piece;
    start = cuts_[k];
  }
  return start + remaining / rates_.back();
}

double sample_event_time(const PiecewiseExponential& pw, double u) {
  return pw.inverse_survival(u);
}

std::string_view name(Pattern p) noexcept {
  switch (p) {
    case Pattern::proportional: return "proportional";
    case Pattern::delayed: return "delayed";
    case Pattern::crossing: return "crossing";
    case Pattern::decreasing: return "decreasing";
  }
  return "unknown";
}

Pattern parse_pattern(std::string_view text) {
  if (text == "proportional" || text == "ph") return Pattern::proportional;
  if (text == "delayed") return Pattern::delayed;
  if (text == "crossing") return Pattern::crossing;
  if (text == "decreasing") return Pattern::decreasing;
  throw ConfigError("unknown pattern '" + std::string(text) + "'");
}

double ScenarioSpec::effective_post_hr() const noexcept {
  if (post_threshold_hr) return *post_threshold_hr;
  switch (pattern) {
    case Pattern::crossing: return 1.5;
    case Pattern::decreasing: return 1.0;
    case Pattern::delayed:
    case Pattern::proportional: return full_effect_hr;
  }
  return full_effect_hr;
}

double ScenarioSpec::control_rate() const noexcept { return std::log(2.0) / control_median; }

void ScenarioSpec::validate() const {
  if (!(threshold >= 0.0) || !std::isfinite(threshold)) {
    throw ConfigError("threshold must be a finite nonnegative number");
  }
  if (!(control_median > 0.0) || !std::isfinite(control_median)) {
    throw ConfigError("control_median must be positive");
  }
  if (!(full_effect_hr > 0.0) || !std::isfinite(full_effect_hr)) {
    throw ConfigError("full_effect_hr must be positive");
  }
  const double post = effective_post_hr();
  if (!(post > 0.0) || !std::isfinite(post)) {
    throw ConfigError("post_threshold_hr must be positive");
  }
}

std::string ScenarioSpec::label() const {
  return std::string(name(pattern)) + "@" + format_double(threshold);
}

namespace {

PiecewiseExponential two_piece(double cut, double before, double after) {
  if (cut <= 0.0 || before == after) return PiecewiseExponential::constant(after);
  return {{cut}, {before, after}};
}

}  // namespace

HazardPair make_scenario(const ScenarioSpec& spec) {
  spec.validate();
  const double l0 = spec.control_rate();
  const double full = spec.full_effect_hr * l0;
  const double cut = spec.threshold;
  switch (spec.pattern) {
    case Pattern::proportional:
      return {PiecewiseExponential::constant(l0), PiecewiseExponential::constant(full)};
    case Pattern::delayed:
      return {PiecewiseExponential::constant(l0), two_piece(cut, l0, full)};
    case Pattern::crossing:
      return {PiecewiseExponential::constant(l0),
              two_piece(cut, full, spec.effective_post_hr() * l0)};
    case Pattern::decreasing:
      return {two_piece(cut, l0, full / spec.effective_post_hr()),
              PiecewiseExponential::constant(full)};
  }
  throw ConfigError("unknown pattern");
}

HazardPair null_equal_survival(const ScenarioSpec& spec) {
  spec.validate();
  const auto h = PiecewiseExponential::constant(spec.control_rate());
  return {h, h};
}

HazardPair null_equal_threshold(const ScenarioSpec& spec, double threshold) {
  ScenarioSpec delayed = spec;
  delayed.pattern = Pattern::delayed;
  delayed.threshold = threshold;
  const auto h = make_scenario(delayed).experimental;
  return {h, h};
}

std::string_view name(AnalysisMode m) noexcept {
  return m == AnalysisMode::event_driven ? "event" : "calendar";
}

AnalysisMode parse_analysis_mode(std::string_view text) {
  if (text == "event" || text == "event_driven") return AnalysisMode::event_driven;
  if (text == "calendar") return AnalysisMode::calendar;
  throw ConfigError("unknown analysis mode '" + std::string(text) +
                    "' (expected event or calendar)");
}

void TrialDesign::validate() const {
  if (n_per_arm < 1) throw ConfigError("n_per_arm must be positive");
  if (!(accrual_duration > 0.0)) throw ConfigError("accrual_duration must be positive");
  if (!(max_study_duration > 0.0)) throw ConfigError("max_study_duration must be positive");
  if (accrual_duration > max_study_duration) {
    throw ConfigError("accrual_duration exceeds max_study_duration");
  }
  if (target_events < 1 || target_events > 2 * n_per_arm) {
    throw ConfigError("target_events must lie in [1, 2*n_per_arm]");
  }
  if (!(target_censoring >= 0.0 && target_censoring < 1.0)) {
    throw ConfigError("target_censoring must lie in [0, 1)");
  }
  if (!(alpha_one_sided > 0.0 && alpha_one_sided < 0.5)) {
    throw ConfigError("alpha_one_sided must lie in (0, 0.5)");
  }
}

std::vector<double> LatentCohort::event_calendar_times() const {
  std::vector<double> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    if (event_time[i] <= dropout_time[i]) out.push_back(entry[i] + event_time[i]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

LatentCohort draw_cohort(const TrialDesign& design, const HazardPair& hazards,
                         double dropout_rate, RngStream& stream) {
  if (!(dropout_rate >= 0.0) || !std::isfinite(dropout_rate)) {
    throw ConfigError("dropout rate must be finite and nonnegative");
  }
  const auto n = static_cast<std::size_t>(design.n_per_arm);
  LatentCohort c;
  c.entry.resize(2 * n);
  c.event_time.resize(2 * n);
  c.dropout_time.resize(2 * n);
  c.arm.resize(2 * n);
  for (std::size_t i = 0; i < 2 * n; ++i) {
    const Arm arm = i < n ? Arm::control : Arm::experimental;
    const auto& h = arm == Arm::control ? hazards.control : hazards.experimental;
    c.arm[i] = arm;
    c.entry[i] = stream.uniform(0.0, design.accrual_duration);
    c.event_time[i] = sample_event_time(h, stream.uniform());
    const double e = stream.exponential();
    c.dropout_time[i] = dropout_rate > 0.0 ? e / dropout_rate : kInf;
  }
  return c;
}

SimulatedTrial cut_at_time(const LatentCohort& cohort, double analysis_time) {
  std::vector<SurvivalObservation> obs;
  std::vector<double> entry;
  obs.reserve(cohort.size());
  entry.reserve(cohort.size());
  std::size_t events = 0;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const double e = cohort.entry[i];
    if (!(e < analysis_time)) continue;
    const double ev = cohort.event_time[i];
    const double drop = cohort.dropout_time[i];
    // Compare on the calendar scale so the event that defines an
    // event-driven cut is itself counted.
    const bool event = ev <= drop && e + ev <= analysis_time;
    const double time = event ? ev : std::min(drop, analysis_time - e);
    obs.push_back({time, event, cohort.arm[i]});
    entry.push_back(e);
    events += event ? 1 : 0;
  }
  SimulatedTrial t{TwoArmDataset(std::move(obs)), std::move(entry), analysis_time, events, false};
  return t;
}

SimulatedTrial cut_at_events(const LatentCohort& cohort, const TrialDesign& design,
                             int target_events) {
  if (target_events < 1) throw ConfigError("target events must be positive");
  const auto times = cohort.event_calendar_times();
  const auto k = static_cast<std::size_t>(target_events);
  double analysis = design.max_study_duration;
  bool reached = false;
  if (times.size() >= k) {
    analysis = times[k - 1];
    reached = true;
    if (design.cap_at_max_duration && analysis > design.max_study_duration) {
      analysis = design.max_study_duration;
      reached = false;
    }
  }
  auto trial = cut_at_time(cohort, analysis);
  trial.shortfall = !reached;
  return trial;
}

SimulatedTrial analyse_cohort(const LatentCohort& cohort, const TrialDesign& design) {
  if (design.analysis_mode == AnalysisMode::calendar) {
    return cut_at_time(cohort, design.max_study_duration);
  }
  return cut_at_events(cohort, design, design.target_events);
}

SimulatedTrial simulate_trial(const TrialDesign& design, const HazardPair& hazards,
                              double dropout_rate, RngStream& stream) {
  return analyse_cohort(draw_cohort(design, hazards, dropout_rate, stream), design);
}

SimulatedTrial simulate_trial(const TrialDesign& design, const ScenarioSpec& scenario,
                              double dropout_rate, RngStream& stream) {
  return simulate_trial(design, make_scenario(scenario), dropout_rate, stream);
}

namespace {

// Pilot cohort stored as unit-rate dropout draws so a candidate rate only
// rescales them.
struct Pilot {
  std::vector<double> follow_up;   // max_study_duration - entry
  std::vector<double> event_time;
  std::vector<double> unit_dropout;

  Pilot(const TrialDesign& design, const HazardPair& hazards, std::uint64_t seed,
        std::size_t subjects) {
    TrialDesign d = design;
    d.n_per_arm = static_cast<int>((subjects + 1) / 2);
    RngStream stream(seed, 0);
    const auto c = draw_cohort(d, hazards, 1.0, stream);
    follow_up.resize(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) follow_up[i] = design.max_study_duration - c.entry[i];
    event_time = c.event_time;
    unit_dropout = c.dropout_time;
  }

  double censored_fraction(double rate) const {
    std::size_t censored = 0;
    std::size_t enrolled = 0;
    for (std::size_t i = 0; i < follow_up.size(); ++i) {
      if (!(follow_up[i] > 0.0)) continue;
      ++enrolled;
      const double drop = rate > 0.0 ? unit_dropout[i] / rate : kInf;
      const bool event = event_time[i] <= drop && event_time[i] <= follow_up[i];
      censored += event ? 0 : 1;
    }
    return enrolled == 0 ? 0.0 : static_cast<double>(censored) / static_cast<double>(enrolled);
  }
};

}  // namespace

double pilot_censoring_fraction(const TrialDesign& design, const HazardPair& hazards,
                                double dropout_rate, std::uint64_t seed,
                                std::size_t pilot_subjects) {
  return Pilot(design, hazards, seed, pilot_subjects).censored_fraction(dropout_rate);
}

DropoutCalibration calibrate_dropout(const TrialDesign& design, const ScenarioSpec& scenario,
                                     std::uint64_t seed, std::size_t pilot_subjects) {
  design.validate();
  const Pilot pilot(design, make_scenario(scenario), seed, pilot_subjects);
  DropoutCalibration out;
  out.administrative_floor = pilot.censored_fraction(0.0);
  const double target = design.target_censoring;
  if (out.administrative_floor >= target) {
    out.rate = 0.0;
    out.below_floor = out.administrative_floor > target;
    out.achieved_fraction = out.administrative_floor;
    return out;
  }
  double hi = 0.01;
  for (int i = 0; i < 40 && pilot.censored_fraction(hi) <= target; ++i) hi *= 2.0;
  if (pilot.censored_fraction(hi) <= target) {
    throw NumericalError("cannot bracket dropout rate; administrative censoring alone is " +
                         format_double(out.administrative_floor));
  }
  out.rate = find_root([&](double r) { return pilot.censored_fraction(r) - target; }, 0.0, hi,
                       1e-7);
  out.achieved_fraction = pilot.censored_fraction(out.rate);
  return out;
}

void export_trial(const std::filesystem::path& stem, const SimulatedTrial& trial,
                  const ScenarioSpec& scenario, const TrialDesign& design, double dropout_rate,
                  std::uint64_t seed, std::uint64_t stream_id) {
  auto csv = stem;
  csv += ".csv";
  write_dataset_csv(csv, trial.dataset);

  nlohmann::ordered_json meta;
  meta["seed"] = seed;
  meta["stream_id"] = stream_id;
  meta["scenario"] = {{"pattern", name(scenario.pattern)},
                      {"threshold", scenario.threshold},
                      {"control_median", scenario.control_median},
                      {"full_effect_hr", scenario.full_effect_hr},
                      {"post_threshold_hr", scenario.effective_post_hr()}};
  meta["design"] = {{"n_per_arm", design.n_per_arm},
                    {"accrual_duration", design.accrual_duration},
                    {"max_study_duration", design.max_study_duration},
                    {"target_events", design.target_events},
                    {"analysis_mode", name(design.analysis_mode)},
                    {"cap_at_max_duration", design.cap_at_max_duration},
                    {"target_censoring", design.target_censoring},
                    {"alpha_one_sided", design.alpha_one_sided}};
  meta["dropout_rate"] = dropout_rate;
  meta["analysis_time"] = trial.analysis_time;
  meta["events_at_analysis"] = trial.events_at_analysis;
  meta["shortfall"] = trial.shortfall;

  auto json_path = stem;
  json_path += ".json";
  std::ofstream out(json_path);
  if (!out) throw Error("cannot write " + json_path.string());
  out << meta.dump(2) << '\n';
}

}  // namespace nphsurv
