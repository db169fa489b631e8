#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace shotperc {

// One long-format report row; parameters that do not apply stay empty.
struct ReportRow {
  std::string experiment;
  std::optional<double> lambda;
  std::optional<double> box;      // R
  std::optional<double> range;    // r
  std::optional<double> epsilon;
  std::optional<std::uint64_t> replicas;
  std::optional<double> level;
  std::string statistic;
  double value = 0.0;
  std::optional<double> std_error;
  std::uint64_t seed = 0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

const std::vector<std::string>& report_columns();

// Shortest round-trip spelling is not required; 17 significant digits always are.
std::string format_double(double v);

// '#'-prefixed metadata lines, then an RFC 4180 header and rows. Throws InvalidArgument
// if any numeric entry is NaN or infinite.
std::string format_csv(const std::vector<ReportRow>& rows, const std::vector<std::string>& metadata);
std::vector<ReportRow> parse_csv(const std::string& text);

// Writes to a temporary sibling and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

// Version string baked in at configure time (git describe).
std::string version_string();

// Drops the wall-time metadata line, the only part of a report that varies between runs.
std::string strip_wall_time(const std::string& csv);

}  // namespace shotperc
