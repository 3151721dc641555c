#include "nphsurv/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "nphsurv/dataset_io.hpp"
#include "nphsurv/error.hpp"

namespace nphsurv {

std::vector<TestId> default_tests() {
  return {TestId::parse("logrank"), TestId::parse("fh(0,1)"), TestId::parse("fh(1,1)"),
          TestId::parse("fh(1,0)"), TestId::parse("rmst_diff")};
}

std::vector<EstimatorId> default_estimators() {
  return {EstimatorId::parse("hr"),       EstimatorId::parse("whr(0,1)"),
          EstimatorId::parse("whr(1,1)"), EstimatorId::parse("whr(1,0)"),
          EstimatorId::parse("rmst_diff"), EstimatorId::parse("rmst_ratio")};
}

RunConfig::RunConfig() : tests(default_tests()), estimators(default_estimators()) {}

std::vector<ScenarioSpec> RunConfig::scenarios() const {
  std::vector<ScenarioSpec> out;
  auto base = [&](Pattern p) {
    ScenarioSpec s;
    s.pattern = p;
    s.control_median = control_median;
    s.full_effect_hr = full_effect_hr;
    if (p == Pattern::crossing) s.post_threshold_hr = crossing_post_hr;
    if (p == Pattern::decreasing) s.post_threshold_hr = decreasing_post_hr;
    return s;
  };
  for (Pattern p : patterns) {
    const std::vector<double>* grid = nullptr;
    switch (p) {
      case Pattern::proportional: out.push_back(base(p)); continue;
      case Pattern::delayed: grid = &delayed_thresholds; break;
      case Pattern::crossing: grid = &crossing_thresholds; break;
      case Pattern::decreasing: grid = &decreasing_thresholds; break;
    }
    for (double t : *grid) {
      auto s = base(p);
      s.threshold = t;
      out.push_back(s);
    }
  }
  return out;
}

ScenarioSpec RunConfig::calibration_scenario() const {
  ScenarioSpec s;
  s.control_median = control_median;
  s.full_effect_hr = full_effect_hr;
  return s;
}

RunSpec RunConfig::to_run_spec(double dropout) const {
  RunSpec spec;
  spec.design = design;
  spec.scenarios = scenarios();
  spec.tests = tests;
  spec.estimators = estimators;
  spec.t_star_rule = t_star_rule;
  spec.n_sims = n_sims;
  spec.master_seed = seed;
  spec.null_mode = null_mode;
  spec.dropout_rate = dropout;
  spec.workers = workers;
  spec.statistic = statistic;
  return spec;
}

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return std::string(s);
}

template <class T>
std::string join(const std::vector<T>& items, const std::function<std::string(const T&)>& f) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += f(items[i]);
  }
  return out;
}

double to_double(const std::string& v) {
  double x = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty()) {
    throw ConfigError("expected a number, got '" + v + "'");
  }
  return x;
}

template <class Int>
Int to_int(const std::string& v) {
  Int x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty()) {
    throw ConfigError("expected an integer, got '" + v + "'");
  }
  return x;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected true or false, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(item));
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"n_per_arm", [](RunConfig& c, const std::string& v) { c.design.n_per_arm = to_int<int>(v); }},
      {"accrual_duration",
       [](RunConfig& c, const std::string& v) { c.design.accrual_duration = to_double(v); }},
      {"max_study_duration",
       [](RunConfig& c, const std::string& v) { c.design.max_study_duration = to_double(v); }},
      {"target_events",
       [](RunConfig& c, const std::string& v) { c.design.target_events = to_int<int>(v); }},
      {"analysis_mode",
       [](RunConfig& c, const std::string& v) { c.design.analysis_mode = parse_analysis_mode(v); }},
      {"cap_at_max_duration",
       [](RunConfig& c, const std::string& v) { c.design.cap_at_max_duration = to_bool(v); }},
      {"target_censoring",
       [](RunConfig& c, const std::string& v) { c.design.target_censoring = to_double(v); }},
      {"alpha", [](RunConfig& c, const std::string& v) { c.design.alpha_one_sided = to_double(v); }},
      {"control_median", [](RunConfig& c, const std::string& v) { c.control_median = to_double(v); }},
      {"full_effect_hr", [](RunConfig& c, const std::string& v) { c.full_effect_hr = to_double(v); }},
      {"crossing_post_hr",
       [](RunConfig& c, const std::string& v) { c.crossing_post_hr = to_double(v); }},
      {"decreasing_post_hr",
       [](RunConfig& c, const std::string& v) { c.decreasing_post_hr = to_double(v); }},
      {"patterns",
       [](RunConfig& c, const std::string& v) {
         c.patterns.clear();
         for (const auto& item : split_list(v)) c.patterns.push_back(parse_pattern(item));
       }},
      {"delayed_thresholds",
       [](RunConfig& c, const std::string& v) { c.delayed_thresholds = to_doubles(v); }},
      {"crossing_thresholds",
       [](RunConfig& c, const std::string& v) { c.crossing_thresholds = to_doubles(v); }},
      {"decreasing_thresholds",
       [](RunConfig& c, const std::string& v) { c.decreasing_thresholds = to_doubles(v); }},
      {"tests",
       [](RunConfig& c, const std::string& v) {
         c.tests.clear();
         for (const auto& item : split_list(v)) c.tests.push_back(TestId::parse(item));
       }},
      {"estimators",
       [](RunConfig& c, const std::string& v) {
         c.estimators.clear();
         for (const auto& item : split_list(v)) c.estimators.push_back(EstimatorId::parse(item));
       }},
      {"tstar_rule", [](RunConfig& c, const std::string& v) { c.t_star_rule = TStarRule::parse(v); }},
      {"statistic",
       [](RunConfig& c, const std::string& v) { c.statistic = parse_summary_statistic(v); }},
      {"n_sims", [](RunConfig& c, const std::string& v) { c.n_sims = to_int<int>(v); }},
      {"seed", [](RunConfig& c, const std::string& v) { c.seed = to_int<std::uint64_t>(v); }},
      {"null_mode", [](RunConfig& c, const std::string& v) { c.null_mode = parse_null_mode(v); }},
      {"workers", [](RunConfig& c, const std::string& v) { c.workers = to_int<unsigned>(v); }},
      {"dropout_rate",
       [](RunConfig& c, const std::string& v) {
         if (v == "auto") {
           c.dropout_rate.reset();
         } else {
           const double r = to_double(v);
           if (!(r >= 0.0)) throw ConfigError("dropout_rate must be nonnegative");
           c.dropout_rate = r;
         }
       }},
      {"calibration_seed",
       [](RunConfig& c, const std::string& v) { c.calibration_seed = to_int<std::uint64_t>(v); }},
      {"calibration_subjects",
       [](RunConfig& c, const std::string& v) {
         c.calibration_subjects = to_int<std::size_t>(v);
       }},
      {"output_dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; }},
  };
  return table;
}

}  // namespace

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    const char ch = i < text.size() ? text[i] : ',';
    if (ch == '(') ++depth;
    if (ch == ')') --depth;
    if (ch == ',' && depth <= 0) {
      auto item = trim(text.substr(start, i - start));
      if (!item.empty()) out.push_back(std::move(item));
      start = i + 1;
    }
  }
  return out;
}

RunConfig parse_run_config(std::istream& in) {
  RunConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const auto key = trim(std::string_view(body).substr(0, eq));
    const auto value = trim(std::string_view(body).substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + key + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return parse_run_config(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string RunConfig::to_text() const {
  std::ostringstream o;
  const auto num = [](double x) { return format_double(x); };
  o << "n_per_arm = " << design.n_per_arm << '\n'
    << "accrual_duration = " << num(design.accrual_duration) << '\n'
    << "max_study_duration = " << num(design.max_study_duration) << '\n'
    << "target_events = " << design.target_events << '\n'
    << "analysis_mode = " << name(design.analysis_mode) << '\n'
    << "cap_at_max_duration = " << (design.cap_at_max_duration ? "true" : "false") << '\n'
    << "target_censoring = " << num(design.target_censoring) << '\n'
    << "alpha = " << num(design.alpha_one_sided) << '\n'
    << "control_median = " << num(control_median) << '\n'
    << "full_effect_hr = " << num(full_effect_hr) << '\n'
    << "crossing_post_hr = " << num(crossing_post_hr) << '\n'
    << "decreasing_post_hr = " << num(decreasing_post_hr) << '\n'
    << "patterns = "
    << join<Pattern>(patterns, [](const Pattern& p) { return std::string(name(p)); }) << '\n'
    << "delayed_thresholds = " << join<double>(delayed_thresholds, num) << '\n'
    << "crossing_thresholds = " << join<double>(crossing_thresholds, num) << '\n'
    << "decreasing_thresholds = " << join<double>(decreasing_thresholds, num) << '\n'
    << "tests = " << join<TestId>(tests, [](const TestId& t) { return t.name(); }) << '\n'
    << "estimators = "
    << join<EstimatorId>(estimators, [](const EstimatorId& e) { return e.name(); }) << '\n'
    << "tstar_rule = " << t_star_rule.to_string() << '\n'
    << "statistic = " << name(statistic) << '\n'
    << "n_sims = " << n_sims << '\n'
    << "seed = " << seed << '\n'
    << "null_mode = " << name(null_mode) << '\n'
    << "workers = " << workers << '\n'
    << "dropout_rate = " << (dropout_rate ? num(*dropout_rate) : std::string("auto")) << '\n'
    << "calibration_seed = " << calibration_seed << '\n'
    << "calibration_subjects = " << calibration_subjects << '\n'
    << "output_dir = " << output_dir.string() << '\n';
  return o.str();
}

}  // namespace nphsurv
