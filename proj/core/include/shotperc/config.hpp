#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shotperc/kernel.hpp"

namespace shotperc {

// Value of the key = value config language: a TOML subset with strings, numbers,
// booleans, arrays, [sections] and inline tables (flattened to dotted keys).
struct ConfigValue {
  enum class Type { string, number, boolean, array };
  Type type = Type::string;
  std::string text;  // string contents, or the literal spelling of a number
  double number = 0.0;
  bool boolean = false;
  std::vector<ConfigValue> items;

  std::string to_string() const;
};

using ConfigMap = std::map<std::string, ConfigValue>;

// Throws ConfigError naming every malformed line.
ConfigMap parse_config_text(const std::string& text, const std::string& source = "<config>");
ConfigMap load_config_file(const std::filesystem::path& path);
// "key=value"; the value uses the config grammar, falling back to a bare string.
void apply_override(ConfigMap& map, const std::string& assignment);

enum class ExperimentKind {
  marginal_clt,
  coupling_rate,
  truncation_rate,
  c1_tails,
  lc_sweep,
  threshold_curve,
  sprinkle,
  kesten,
  duality_audit,
};

std::string to_string(ExperimentKind k);
std::optional<ExperimentKind> parse_experiment(const std::string& name);
const std::vector<std::string>& experiment_names();

struct KernelSpec {
  std::string family = "rational";
  int dimension = 2;
  double beta = 3.0;
  double gamma = 0.5;
  AnyKernel build() const;
  std::string to_string() const;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::marginal_clt;
  KernelSpec kernel;
  std::vector<double> lambdas{16.0, 64.0, 256.0, 1024.0};
  std::vector<double> boxes{8.0};          // R
  std::vector<double> ranges{2.0, 4.0, 8.0, 16.0};  // r
  std::vector<double> levels{0.0};
  std::vector<double> thresholds{1.0, 2.0, 3.0};  // u for c1_tails
  std::optional<double> epsilon;           // default: default_spacing
  std::optional<int> depth;                // m; default: default_coupling_depth
  std::optional<double> pad;               // default: required_pad_radius
  std::optional<double> sprinkle;          // h; default R^{-(beta-2)/2}
  std::string field = "gaussian";          // threshold_curve and duality_audit
  std::optional<double> radius;            // ball radius; default 8 (marginal_clt), 4 (coupling_rate)
  double tol = 0.01;                       // lc bisection tolerance
  std::size_t masks = 10000;               // duality_audit random masks
  std::size_t replicas = 200;
  std::uint64_t seed = 1;
  std::string output = "report.csv";
  int threads = 1;
};

// Validates every field and throws one ConfigError listing all problems.
ExperimentConfig build_config(const ConfigMap& map);

// Canonical key = value lines of everything that affects results (not threads/output).
std::vector<std::string> config_echo(const ExperimentConfig& cfg);

}  // namespace shotperc
