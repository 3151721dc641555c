#pragma once

// CSV dataset files: header `time,event,arm`, one observation per line,
// event and arm in {0,1}, `.` decimal separator, LF line endings.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "nphsurv/survival.hpp"

namespace nphsurv {

// Throws DataError naming the offending line (1-based, header is line 1).
TwoArmDataset parse_dataset_csv(std::istream& in);
TwoArmDataset read_dataset_csv(const std::filesystem::path& path);

// Times are written in shortest round-trip form, so reading the file back
// reproduces the dataset exactly.
void write_dataset_csv(std::ostream& out, const TwoArmDataset& dataset);
void write_dataset_csv(const std::filesystem::path& path, const TwoArmDataset& dataset);

// Shortest decimal string that parses back to the same double.
std::string format_double(double x);

}  // namespace nphsurv
