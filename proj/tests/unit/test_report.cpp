#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "shotperc/errors.hpp"
#include "shotperc/report.hpp"

using namespace shotperc;

namespace {

ReportRow sample_row() {
  ReportRow r;
  r.experiment = "coupling_rate";
  r.lambda = 64;
  r.epsilon = 0.0625;
  r.replicas = 200;
  r.statistic = "median_coupled_error";
  r.value = 0.1 + 0.2;
  r.std_error = 1.0 / 3.0;
  r.seed = 18446744073709551615ULL;
  return r;
}

std::string read(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Csv, EmptyRowsGiveHeaderOnly) {
  const std::string csv = format_csv({}, {});
  EXPECT_EQ(csv, "experiment,lambda,R,r,epsilon,replicas,level,statistic,value,stderr,seed\r\n");
  EXPECT_TRUE(parse_csv(csv).empty());
}

TEST(Csv, RoundTripIsExact) {
  ReportRow b = sample_row();
  b.statistic = "odd, \"quoted\" name";
  b.lambda.reset();
  b.level = -1e-300;
  b.value = std::nextafter(1.0, 2.0);
  const std::vector<ReportRow> rows{sample_row(), b};
  EXPECT_EQ(parse_csv(format_csv(rows, {"meta line", "another"})), rows);
}

TEST(Csv, SeventeenSignificantDigitsAndDotDecimal) {
  EXPECT_EQ(format_double(0.1 + 0.2), "0.30000000000000004");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Csv, NonFiniteValuesRejected) {
  ReportRow r = sample_row();
  r.value = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(format_csv({r}, {}), InvalidArgument);
  r = sample_row();
  r.std_error = std::numeric_limits<double>::infinity();
  EXPECT_THROW(format_csv({r}, {}), InvalidArgument);
}

TEST(Csv, MetadataLinesArePrefixed) {
  const std::string csv = format_csv({sample_row()}, {"shotperc report", "wall_time_s = 1.5"});
  EXPECT_EQ(csv.rfind("# shotperc report\r\n", 0), 0u);
  EXPECT_EQ(strip_wall_time(csv).find("wall_time_s"), std::string::npos);
  EXPECT_NE(strip_wall_time(csv).find("median_coupled_error"), std::string::npos);
}

TEST(AtomicWrite, ReplacesWholeFileAndLeavesNoTemporary) {
  const auto dir = std::filesystem::temp_directory_path() / "shotperc_atomic_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.csv";
  write_atomic(path, "first version, long enough to notice truncation\n");
  write_atomic(path, "second\n");
  EXPECT_EQ(read(path), "second\n");
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) files += e.is_regular_file();
  EXPECT_EQ(files, 1u);
  EXPECT_THROW(write_atomic(dir / "missing" / "x.csv", "x"), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST(Version, LooksLikeGitDescribe) {
  EXPECT_EQ(version_string().rfind("v", 0), 0u);
}
