#include "shotperc/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "shotperc/errors.hpp"

#ifndef SHOTPERC_VERSION
#define SHOTPERC_VERSION "unknown"
#endif

namespace shotperc {

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string checked(double v, const std::string& what) {
  if (!std::isfinite(v)) throw InvalidArgument("report value '" + what + "' is not finite");
  return format_double(v);
}

std::string opt(const std::optional<double>& v, const std::string& what) {
  return v ? checked(*v, what) : std::string();
}

// RFC 4180 record splitter starting at pos; advances pos past the record terminator.
std::vector<std::string> read_record(const std::string& text, std::size_t& pos) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  while (pos < text.size()) {
    const char c = text[pos];
    if (quoted) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          cur += '"';
          pos += 2;
          continue;
        }
        quoted = false;
      } else {
        cur += c;
      }
      ++pos;
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c == '\r' || c == '\n') {
      pos += (c == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') ? 2 : 1;
      fields.push_back(std::move(cur));
      return fields;
    } else {
      cur += c;
    }
    ++pos;
  }
  fields.push_back(std::move(cur));
  return fields;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw InvalidArgument("bad number in CSV: '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  std::size_t used = 0;
  const auto v = std::stoull(s, &used);
  if (used != s.size()) throw InvalidArgument("bad integer in CSV: '" + s + "'");
  return v;
}

std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_double(s);
}

}  // namespace

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols{"experiment", "lambda",    "R",     "r",
                                             "epsilon",    "replicas",  "level", "statistic",
                                             "value",      "stderr",    "seed"};
  return cols;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_csv(const std::vector<ReportRow>& rows, const std::vector<std::string>& metadata) {
  std::string out;
  for (const auto& line : metadata) out += "# " + line + "\r\n";
  const auto& cols = report_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += "\r\n";
  for (const ReportRow& r : rows) {
    const std::string what = r.experiment + "/" + r.statistic;
    out += quote(r.experiment) + ",";
    out += opt(r.lambda, what) + ",";
    out += opt(r.box, what) + ",";
    out += opt(r.range, what) + ",";
    out += opt(r.epsilon, what) + ",";
    out += (r.replicas ? std::to_string(*r.replicas) : std::string()) + ",";
    out += opt(r.level, what) + ",";
    out += quote(r.statistic) + ",";
    out += checked(r.value, what) + ",";
    out += opt(r.std_error, what) + ",";
    out += std::to_string(r.seed) + "\r\n";
  }
  return out;
}

std::vector<ReportRow> parse_csv(const std::string& text) {
  std::size_t pos = 0;
  while (pos < text.size() && text[pos] == '#') {
    const auto nl = text.find('\n', pos);
    pos = nl == std::string::npos ? text.size() : nl + 1;
  }
  const auto header = read_record(text, pos);
  if (header != report_columns()) throw InvalidArgument("CSV header does not match the report schema");
  std::vector<ReportRow> rows;
  while (pos < text.size()) {
    const auto f = read_record(text, pos);
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != header.size()) throw InvalidArgument("CSV row has the wrong number of fields");
    ReportRow r;
    r.experiment = f[0];
    r.lambda = parse_opt(f[1]);
    r.box = parse_opt(f[2]);
    r.range = parse_opt(f[3]);
    r.epsilon = parse_opt(f[4]);
    if (!f[5].empty()) r.replicas = parse_u64(f[5]);
    r.level = parse_opt(f[6]);
    r.statistic = f[7];
    r.value = parse_double(f[8]);
    r.std_error = parse_opt(f[9]);
    r.seed = parse_u64(f[10]);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw std::runtime_error("cannot move report into place at " + path.string() + ": " + ec.message());
  }
}

std::string version_string() { return SHOTPERC_VERSION; }

std::string strip_wall_time(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.rfind("# wall_time_s", 0) == 0) continue;
    out += line + "\n";
  }
  return out;
}

}  // namespace shotperc
