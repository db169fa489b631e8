#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shotperc/config.hpp"
#include "shotperc/kernel.hpp"
#include "shotperc/percolation.hpp"
#include "shotperc/report.hpp"

namespace shotperc {

// Sub-seed for the k-th parameter point of an experiment; keeps points independent.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k);

// f_lambda(0) by exact summation over Poisson points in the ball B(0, radius), centred
// with the exact compensator lambda * int_{B(0, radius)} g.
std::vector<double> sample_origin_values(const AnyKernel& k, double lambda, double radius,
                                         std::size_t n, std::uint64_t seed, int threads = 1);

struct CouplingErrors {
  std::vector<double> coupled;      // sup_{B(0, radius)} |f_lambda - f|
  std::vector<double> independent;  // same, with f drawn independently
};

CouplingErrors coupling_errors(const AnyKernel& k, double lambda, double radius, double spacing,
                               double pad, int m, std::size_t n, std::uint64_t seed, int threads = 1);

struct TruncationErrors {
  std::vector<double> shot;   // sup_{[0,1]^2} |f_lambda - f^r_lambda|
  std::vector<double> gauss;  // sup_{[0,1]^2} |f - f^r|
};

// Shared randomness between each field and its truncation; pad must cover both.
TruncationErrors truncation_errors(const AnyKernel& k, double lambda, double range, double spacing,
                                   double pad, std::size_t n, std::uint64_t seed, int threads = 1);

struct DualityCounts {
  std::size_t checks = 0;
  std::size_t violations = 0;
};

// Random masks of random shape and density; both orientations per mask.
DualityCounts audit_random_masks(std::size_t n_masks, std::uint64_t seed);
// Excursion sets of synthesized fields at random levels.
DualityCounts audit_fields(const ModelSpec& model, double box, std::size_t n_fields,
                           std::uint64_t seed, int threads = 1);

struct CoupledThresholds {
  std::vector<std::vector<double>> shot;  // per lambda, per replica
  std::vector<double> gauss;              // per replica, shared by every lambda
};

// Crossing thresholds of the R x R square for coupled (f_lambda, f) pairs. The Gaussian
// side does not depend on lambda, so thresholds are paired across intensities as well.
// depth <= 0 selects default_coupling_depth per lambda.
CoupledThresholds coupled_thresholds(const AnyKernel& k, const std::vector<double>& lambdas, double box,
                                     double spacing, double pad, int depth, std::size_t n, std::uint64_t seed,
                                     int threads = 1);

// lambda^-1/2 (log lambda)^3/2.
double critical_level_rate(double lambda);

// Default sprinkling R^{-(beta - 2)/2}.
double default_sprinkle(const AnyKernel& k, double box);

std::vector<ReportRow> run_experiment_rows(const ExperimentConfig& cfg);

// Metadata block (version, config echo, wall time) followed by the CSV table.
std::string render_report(const ExperimentConfig& cfg, const std::vector<ReportRow>& rows,
                          double wall_seconds);

// Runs, renders and atomically writes cfg.output.
void run_experiment(const ExperimentConfig& cfg);

}  // namespace shotperc
