#pragma once

// Two-arm trial simulation from piecewise-exponential hazards.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nphsurv/rng.hpp"
#include "nphsurv/survival.hpp"

namespace nphsurv {

class PiecewiseExponential {
 public:
  // `rates` has one more entry than `cut_points`; cut points are strictly
  // increasing and positive, rates positive. Throws std::invalid_argument.
  PiecewiseExponential(std::vector<double> cut_points, std::vector<double> rates);
  static PiecewiseExponential constant(double rate) { return {{}, {rate}}; }

  const std::vector<double>& cut_points() const noexcept { return cuts_; }
  const std::vector<double>& rates() const noexcept { return rates_; }

  double hazard(double t) const noexcept;
  double cumulative_hazard(double t) const noexcept;
  double survival(double t) const noexcept;

  // Exact inverse of the survival function: the t with S(t) = u.
  double inverse_survival(double u) const;

  friend bool operator==(const PiecewiseExponential&, const PiecewiseExponential&) = default;

 private:
  std::vector<double> cuts_;
  std::vector<double> rates_;
};

// Inversion sampling; `u` must lie in (0, 1).
double sample_event_time(const PiecewiseExponential& pw, double u);

enum class Pattern { proportional, delayed, crossing, decreasing };

std::string_view name(Pattern p) noexcept;
Pattern parse_pattern(std::string_view text);  // throws ConfigError

// Hazard-ratio pattern over time. The reference control hazard is
// ln 2 / control_median.
//   delayed:     HR 1 before `threshold`, full_effect_hr after.
//   crossing:    HR full_effect_hr before, post_threshold_hr (1.5) after.
//   decreasing:  HR full_effect_hr before, post_threshold_hr (1.0) after;
//                the experimental arm keeps the full-effect hazard and the
//                control hazard moves to full_effect / post_threshold_hr
//                at the threshold (control patients switching over).
struct ScenarioSpec {
  Pattern pattern = Pattern::proportional;
  double threshold = 0.0;
  double control_median = 6.0;
  double full_effect_hr = 0.667;
  std::optional<double> post_threshold_hr;  // pattern default when empty

  double effective_post_hr() const noexcept;
  double control_rate() const noexcept;
  void validate() const;  // throws ConfigError
  std::string label() const;
};

struct HazardPair {
  PiecewiseExponential control;
  PiecewiseExponential experimental;
};

HazardPair make_scenario(const ScenarioSpec& spec);

// Both arms with the reference control hazard.
HazardPair null_equal_survival(const ScenarioSpec& spec);
// Both arms with the delayed-effect experimental hazard at `threshold`.
HazardPair null_equal_threshold(const ScenarioSpec& spec, double threshold);

enum class AnalysisMode { event_driven, calendar };

std::string_view name(AnalysisMode m) noexcept;
AnalysisMode parse_analysis_mode(std::string_view text);  // "event" | "calendar"

struct TrialDesign {
  int n_per_arm = 165;
  double accrual_duration = 17.5;
  double max_study_duration = 25.0;
  int target_events = 258;
  AnalysisMode analysis_mode = AnalysisMode::event_driven;
  // Event-driven looks wait for the target event count unless this is set,
  // in which case they happen no later than max_study_duration.
  bool cap_at_max_duration = false;
  double target_censoring = 0.22;
  double alpha_one_sided = 0.025;

  void validate() const;  // throws ConfigError
  friend bool operator==(const TrialDesign&, const TrialDesign&) = default;
};

// Latent per-subject quantities before any data cut. Subjects 0..n-1 are
// control and n..2n-1 experimental; each consumes exactly three draws
// (entry, event, dropout) from the stream in that order.
struct LatentCohort {
  std::vector<double> entry;
  std::vector<double> event_time;
  std::vector<double> dropout_time;  // +inf without dropout
  std::vector<Arm> arm;

  std::size_t size() const noexcept { return entry.size(); }
  // Calendar times of observable events (event before dropout), sorted.
  std::vector<double> event_calendar_times() const;
};

LatentCohort draw_cohort(const TrialDesign& design, const HazardPair& hazards,
                         double dropout_rate, RngStream& stream);

struct SimulatedTrial {
  TwoArmDataset dataset;        // times from each subject's randomization
  std::vector<double> entry;    // calendar entry time per dataset row
  double analysis_time = 0.0;   // calendar months
  std::size_t events_at_analysis = 0;
  bool shortfall = false;       // fewer events than the event-driven target
};

// Data cut at a calendar time. Subjects entering at or after the cut are
// excluded.
SimulatedTrial cut_at_time(const LatentCohort& cohort, double analysis_time);

// Data cut at the `target_events`-th observable event, honouring the
// design's cap. Falls back to max_study_duration with the shortfall flag
// when the cohort never reaches the target.
SimulatedTrial cut_at_events(const LatentCohort& cohort, const TrialDesign& design,
                             int target_events);

SimulatedTrial analyse_cohort(const LatentCohort& cohort, const TrialDesign& design);

SimulatedTrial simulate_trial(const TrialDesign& design, const HazardPair& hazards,
                              double dropout_rate, RngStream& stream);
SimulatedTrial simulate_trial(const TrialDesign& design, const ScenarioSpec& scenario,
                              double dropout_rate, RngStream& stream);

struct DropoutCalibration {
  double rate = 0.0;
  bool below_floor = false;        // administrative censoring alone >= target
  double administrative_floor = 0.0;
  double achieved_fraction = 0.0;  // pilot censoring fraction at `rate`
};

// Censored fraction of a calendar-mode cut at max_study_duration, estimated
// from a pilot cohort drawn once and reused for every candidate rate.
double pilot_censoring_fraction(const TrialDesign& design, const HazardPair& hazards,
                                double dropout_rate, std::uint64_t seed,
                                std::size_t pilot_subjects);

// Exponential dropout rate whose pilot censoring fraction matches
// design.target_censoring within 0.005. Returns rate 0 with below_floor set
// when administrative censoring already reaches the target.
DropoutCalibration calibrate_dropout(const TrialDesign& design, const ScenarioSpec& scenario,
                                     std::uint64_t seed = 0x5eed'ca1bULL,
                                     std::size_t pilot_subjects = 100000);

// Writes `<stem>.csv` and `<stem>.json` (seed, stream id, scenario, design,
// analysis time, event count).
void export_trial(const std::filesystem::path& stem, const SimulatedTrial& trial,
                  const ScenarioSpec& scenario, const TrialDesign& design, double dropout_rate,
                  std::uint64_t seed, std::uint64_t stream_id);

}  // namespace nphsurv
