#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "shotperc/config.hpp"
#include "shotperc/experiments.hpp"
#include "shotperc/report.hpp"
#include "shotperc/stats.hpp"

using namespace shotperc;

namespace {

ExperimentConfig smoke(const std::string& name) {
  auto map = parse_config_text("experiment = \"" + name + "\"\n" + R"(
lambda = [16, 64, 256]
R = [3]
r = [2, 4, 8]
replicas = 30
masks = 200
radius = 3
seed = 12345
)");
  return build_config(map);
}

std::string read(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

class ThreadInvariance : public ::testing::TestWithParam<std::string> {};

TEST_P(ThreadInvariance, SameBytesAtOneAndFourThreads) {
  ExperimentConfig one = smoke(GetParam());
  ExperimentConfig four = one;
  four.threads = 4;
  const std::string a = render_report(one, run_experiment_rows(one), 0.0);
  const std::string b = render_report(four, run_experiment_rows(four), 0.0);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find("\r\n"), std::string::npos);
}

INSTANTIATE_TEST_SUITE_P(AllExperiments, ThreadInvariance,
                         ::testing::Values("marginal_clt", "coupling_rate", "truncation_rate", "c1_tails",
                                           "lc_sweep", "threshold_curve", "sprinkle", "kesten", "duality_audit"));

TEST(Experiments, DualityAuditHasNoViolations) {
  const auto rows = run_experiment_rows(smoke("duality_audit"));
  for (const auto& r : rows) {
    if (r.statistic.find("violations") != std::string::npos) { EXPECT_EQ(r.value, 0.0); }
  }
}

TEST(Experiments, DerivedSeedsDiffer) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}

TEST(Experiments, OriginValuesAreCentred) {
  const AnyKernel k = Kernel::rational(2, 3.0);
  const auto x = sample_origin_values(k, 16, 6, 4000, 3);
  const Summary s = summarize(x);
  EXPECT_NEAR(s.mean, 0.0, 4 * s.std_error);
  // Ball of radius 6 carries int_{|y| < 6} g^2 = (pi / 2)(1 - 37^-2).
  const double target = std::numbers::pi / 2 * (1 - 1.0 / (37.0 * 37.0));
  EXPECT_NEAR(s.variance, target, 4 * target * std::sqrt(3.0 / x.size()));
}

TEST(Experiments, RateHelpers) {
  EXPECT_NEAR(critical_level_rate(16), std::pow(std::log(16.0), 1.5) / 4, 1e-15);
  EXPECT_NEAR(default_sprinkle(Kernel::rational(2, 3.0), 16), 0.25, 1e-15);
}

TEST(Experiments, RunWritesReportAtomically) {
  auto cfg = smoke("duality_audit");
  const auto path = std::filesystem::temp_directory_path() / "shotperc_run_test.csv";
  cfg.output = path.string();
  run_experiment(cfg);
  const std::string text = read(path);
  EXPECT_EQ(text.rfind("# shotperc report", 0), 0u);
  EXPECT_NE(text.find("# wall_time_s = "), std::string::npos);
  EXPECT_NE(text.find("# config: seed = 12345"), std::string::npos);
  EXPECT_EQ(parse_csv(text).size(), run_experiment_rows(cfg).size());
  std::filesystem::remove(path);
}

#ifdef SHOTPERC_CLI
namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SHOTPERC_CLI) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
  const auto dir = std::filesystem::temp_directory_path() / "shotperc_cli_test";
  std::filesystem::create_directories(dir);
  const auto cfg = dir / "smoke.toml";
  std::ofstream(cfg) << "lambda = [16, 64]\nR = [3]\nreplicas = 30\nmasks = 50\n";
  const auto out = dir / "out.csv";
  EXPECT_EQ(run_cli("duality_audit --config " + cfg.string() + " --seed 5 --out " + out.string()), 0);
  EXPECT_TRUE(std::filesystem::exists(out));
  EXPECT_EQ(run_cli("duality_audit --config " + cfg.string() + " --set replicas=3 --seed 5 --out " + out.string()), 2);
  EXPECT_EQ(run_cli("not_an_experiment --config " + cfg.string() + " --seed 5 --out " + out.string()), 2);
  EXPECT_EQ(run_cli("duality_audit --config " + (dir / "missing.toml").string() + " --out " + out.string()), 2);
  // A heavy tail defeats the lattice covariance check.
  EXPECT_EQ(run_cli("marginal_clt --config " + cfg.string() +
                    " --set 'kernel={family=\"rational\", beta=2.05}' --seed 5 --out " + (dir / "heavy.csv").string()),
            3);
  EXPECT_FALSE(std::filesystem::exists(dir / "heavy.csv"));
  std::filesystem::remove_all(dir);
}

TEST(Cli, FlagsOverrideSetWhichOverridesFile) {
  const auto dir = std::filesystem::temp_directory_path() / "shotperc_cli_prec";
  std::filesystem::create_directories(dir);
  const auto cfg = dir / "c.toml";
  std::ofstream(cfg) << "seed = 1\nreplicas = 30\nmasks = 40\nR = [3]\noutput = \"" << (dir / "file.csv").string() << "\"\n";
  ASSERT_EQ(run_cli("duality_audit --config " + cfg.string() + " --set seed=2 --set masks=41 --seed 3 --out " +
                    (dir / "flag.csv").string()),
            0);
  const std::string text = read(dir / "flag.csv");
  EXPECT_NE(text.find("# config: seed = 3"), std::string::npos);
  EXPECT_NE(text.find("# config: masks = 41"), std::string::npos);
  EXPECT_FALSE(std::filesystem::exists(dir / "file.csv"));
  std::filesystem::remove_all(dir);
}
#endif

TEST(Experiments, CrossingStableUnderHalvedSpacing) {
  auto cfg = build_config(parse_config_text(R"(
experiment = "threshold_curve"
R = [4]
level = [-0.4, 0, 0.4]
replicas = 400
seed = 99
)"));
  const auto rows = run_experiment_rows(cfg);
  const double n = 400;
  for (double level : cfg.levels) {
    double coarse = -1, fine = -1;
    for (const auto& r : rows) {
      if (r.level != level) continue;
      if (r.statistic == "p_cross") coarse = r.value;
      if (r.statistic == "p_cross_half_eps") fine = r.value;
    }
    ASSERT_GE(coarse, 0.0);
    ASSERT_GE(fine, 0.0);
    const double se = std::sqrt((coarse * (1 - coarse) + fine * (1 - fine)) / n);
    EXPECT_LT(std::fabs(coarse - fine), 3 * std::max(se, 1.0 / n)) << "level " << level;
  }
}
