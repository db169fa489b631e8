#include <boost/program_options.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "shotperc/config.hpp"
#include "shotperc/errors.hpp"
#include "shotperc/experiments.hpp"
#include "shotperc/report.hpp"

namespace po = boost::program_options;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::string usage_line() {
  return "usage: shotperc [experiment] [--config <file>] [--set k=v]... [--seed <u64>] [--out <path>] [--threads n]";
}

void print_experiments(std::ostream& os) {
  os << "experiments:";
  for (const auto& name : shotperc::experiment_names()) os << ' ' << name;
  os << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  po::options_description visible("options");
  visible.add_options()
      ("help,h", "print this message")
      ("version", "print the version string")
      ("config,c", po::value<std::string>(), "config file (key = value with [tables])")
      ("set,s", po::value<std::vector<std::string>>()->composing(), "override one key, e.g. --set lambda=[16,64]")
      ("seed", po::value<std::string>(), "64-bit seed")
      ("out,o", po::value<std::string>(), "output CSV path")
      ("threads,j", po::value<std::string>(), "worker threads");
  po::options_description hidden;
  hidden.add_options()("experiment", po::value<std::string>());
  po::options_description all;
  all.add(visible).add(hidden);
  po::positional_options_description positional;
  positional.add("experiment", 1);

  po::variables_map vm;
  try {
    po::store(po::command_line_parser(argc, argv).options(all).positional(positional).run(), vm);
    po::notify(vm);
  } catch (const po::error& e) {
    std::cerr << "shotperc: " << e.what() << '\n' << usage_line() << '\n';
    return kExitConfig;
  }

  if (vm.count("help")) {
    std::cout << usage_line() << "\n\n" << visible;
    print_experiments(std::cout);
    return kExitOk;
  }
  if (vm.count("version")) {
    std::cout << "shotperc " << shotperc::version_string() << '\n';
    return kExitOk;
  }
  if (!vm.count("experiment") && !vm.count("config")) {
    std::cerr << usage_line() << '\n';
    print_experiments(std::cerr);
    return kExitUsage;
  }

  shotperc::ExperimentConfig cfg;
  try {
    shotperc::ConfigMap map;
    if (vm.count("config")) map = shotperc::load_config_file(vm["config"].as<std::string>());
    if (vm.count("set")) {
      for (const auto& s : vm["set"].as<std::vector<std::string>>()) shotperc::apply_override(map, s);
    }
    // Precedence: dedicated flags, then --set, then the file.
    if (vm.count("experiment")) {
      shotperc::apply_override(map, "experiment=\"" + vm["experiment"].as<std::string>() + "\"");
    }
    if (vm.count("seed")) shotperc::apply_override(map, "seed=" + vm["seed"].as<std::string>());
    if (vm.count("threads")) shotperc::apply_override(map, "threads=" + vm["threads"].as<std::string>());
    if (vm.count("out")) {
      shotperc::ConfigValue out;
      out.text = vm["out"].as<std::string>();
      map["output"] = out;
    }
    cfg = shotperc::build_config(map);
  } catch (const shotperc::ConfigError& e) {
    std::cerr << "shotperc: invalid configuration\n";
    for (const auto& p : e.problems()) std::cerr << "  " << p << '\n';
    return kExitConfig;
  }

  try {
    shotperc::run_experiment(cfg);
  } catch (const shotperc::NumericalConsistencyError& e) {
    std::cerr << "shotperc: numerical consistency check failed: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const shotperc::PreconditionError& e) {
    std::cerr << "shotperc: " << e.what() << '\n';
    return kExitConfig;
  } catch (const shotperc::InvalidArgument& e) {
    std::cerr << "shotperc: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "shotperc: " << e.what() << '\n';
    return kExitUsage;
  }
  std::cerr << "shotperc: wrote " << cfg.output << '\n';
  return kExitOk;
}
