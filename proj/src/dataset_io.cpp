#include "nphsurv/dataset_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string_view>
#include <vector>

#include "nphsurv/error.hpp"

namespace nphsurv {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

[[noreturn]] void bad_line(std::size_t line, const std::string& why) {
  throw DataError("line " + std::to_string(line) + ": " + why);
}

double parse_time(std::string_view field, std::size_t line) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    bad_line(line, "cannot parse time '" + std::string(field) + "'");
  }
  return value;
}

int parse_flag(std::string_view field, std::size_t line, const char* name) {
  if (field == "0") return 0;
  if (field == "1") return 1;
  bad_line(line, std::string(name) + " must be 0 or 1, got '" + std::string(field) + "'");
}

}  // namespace

TwoArmDataset parse_dataset_csv(std::istream& in) {
  std::string text;
  std::size_t line = 0;
  if (!std::getline(in, text)) throw DataError("line 1: missing header");
  ++line;
  if (trim(text) != "time,event,arm") {
    bad_line(line, "expected header 'time,event,arm'");
  }

  std::vector<SurvivalObservation> obs;
  while (std::getline(in, text)) {
    ++line;
    const auto row = trim(text);
    if (row.empty()) continue;

    std::string_view fields[3];
    std::size_t n = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = row.find(',', start);
      if (n == 3) bad_line(line, "expected 3 fields");
      fields[n++] = trim(row.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (n != 3) bad_line(line, "expected 3 fields");

    const double t = parse_time(fields[0], line);
    if (!(t >= 0.0) || t == std::numeric_limits<double>::infinity()) {
      bad_line(line, "time must be finite and nonnegative");
    }
    const int ev = parse_flag(fields[1], line, "event");
    const int arm = parse_flag(fields[2], line, "arm");
    obs.push_back({t, ev == 1, arm == 1 ? Arm::experimental : Arm::control});
  }
  return TwoArmDataset(std::move(obs));
}

TwoArmDataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_dataset_csv(in);
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

void write_dataset_csv(std::ostream& out, const TwoArmDataset& dataset) {
  out << "time,event,arm\n";
  for (const auto& o : dataset.observations()) {
    out << format_double(o.time) << ',' << (o.event ? 1 : 0) << ','
        << static_cast<int>(index(o.arm)) << '\n';
  }
}

void write_dataset_csv(const std::filesystem::path& path, const TwoArmDataset& dataset) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_dataset_csv(out, dataset);
}

}  // namespace nphsurv
