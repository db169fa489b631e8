#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "shotperc/geometry.hpp"
#include "shotperc/grid.hpp"
#include "shotperc/kernel.hpp"
#include "shotperc/synthesis.hpp"

namespace shotperc {

// Left-right crosses axis 0 (first index), top-bottom crosses axis 1.
enum class Orientation { left_right, top_bottom };
// primal: 4-neighbour paths of mask-true sites; dual: 8-neighbour paths of mask-false sites.
enum class Connectivity { primal, dual };

std::string to_string(Orientation o);

struct ExcursionSet {
  GridSpec grid;
  double level = 0.0;
  std::vector<std::uint8_t> mask;  // 1 where value <= level
};

ExcursionSet excursion(const GridField& field, double level);

bool crossing(const ExcursionSet& ex, const BoxRegion& rect, Orientation orientation,
              Connectivity connectivity);

// Same test on a bare row-major mask of shape rows x cols (axis 0 = rows).
bool crossing_mask(std::span<const std::uint8_t> mask, std::size_t rows, std::size_t cols,
                   Orientation orientation, Connectivity connectivity);

// Smallest level at which {f <= level} has a primal crossing of rect: a minimax path
// value found by adding sites in increasing order to a union-find.
double crossing_threshold(const GridField& field, const BoxRegion& rect, Orientation orientation);

enum class FieldModelKind { gaussian, shot_noise };

struct ModelSpec {
  FieldModelKind kind = FieldModelKind::gaussian;
  AnyKernel kernel;
  double lambda = 0.0;   // shot noise only
  double spacing = 0.0;  // 0 selects default_spacing
  double pad = 0.0;      // 0 selects required_pad_radius
  double shift = 0.0;    // constant added to every sample

  explicit ModelSpec(AnyKernel k) : kernel(std::move(k)) {}
  std::string to_string() const;
};

// Replica generator: replica r of a model is a pure function of (seed, r).
class FieldModel {
 public:
  FieldModel(const ModelSpec& spec, const BoxRegion& region);
  const ModelSpec& spec() const { return spec_; }
  const GridSpec& grid() const { return synth_->grid(); }
  double variance() const { return variance_; }  // K(0)
  GridField sample(std::uint64_t seed, std::uint64_t replica) const;

 private:
  ModelSpec spec_;
  std::shared_ptr<const Synthesizer> synth_;
  double variance_;
};

// Wilson score interval at 95%.
struct WilsonInterval {
  double center;
  double half_width;
};
WilsonInterval wilson_interval(std::size_t successes, std::size_t trials);

struct CrossingEstimate {
  BoxRegion rect;
  Orientation orientation = Orientation::left_right;
  double level = 0.0;
  std::size_t replicas = 0;
  std::size_t successes = 0;
  double p = 0.0;
  double std_error = 0.0;  // Wilson half-width
};

// Per-replica crossing thresholds of the model on rect; the model region is rect itself.
std::vector<double> crossing_thresholds(const ModelSpec& model, const BoxRegion& rect,
                                        Orientation orientation, std::size_t n_reps,
                                        std::uint64_t seed, int threads = 1);

CrossingEstimate estimate_from_thresholds(std::span<const double> thresholds, double level,
                                          const BoxRegion& rect, Orientation orientation);

CrossingEstimate crossing_probability(const ModelSpec& model, double level, const BoxRegion& rect,
                                      Orientation orientation, std::size_t n_reps,
                                      std::uint64_t seed, int threads = 1);

struct CriticalLevelEstimate {
  double lambda = 0.0;
  double box = 0.0;
  double level = 0.0;
  double std_error = 0.0;  // from the order statistics n/2 +- sqrt(n)/2
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double p_lo = 0.0;
  double p_hi = 0.0;
  std::size_t replicas = 0;
};

// Bisection of the crossing curve of the R x R square to 1/2, with common random
// numbers across levels. The bracket starts at shift +- 0.5 sqrt(K(0)) and doubles up to
// +- 5 sqrt(K(0)).
CriticalLevelEstimate critical_level_from_thresholds(std::span<const double> thresholds,
                                                     double center, double scale, double tol);
CriticalLevelEstimate estimate_critical_level(const ModelSpec& model, double box, std::size_t n_reps,
                                              double tol, std::uint64_t seed, int threads = 1);

struct SprinkleReport {
  double box = 0.0;
  double level = 0.0;
  double sprinkle = 0.0;
  std::size_t replicas = 0;
  bool independent = false;
  double p_a = 0.0;     // P[A at level + h]
  double p_b = 0.0;     // P[B at level + h]
  double p_ab = 0.0;    // P[A and B at level]
  double slack = 0.0;   // p_a p_b - p_ab
  double std_error = 0.0;
};

// A = LR crossing of [0,R] x [0,3R], B = LR crossing of [2R,3R] x [0,3R].
BoxRegion sprinkle_rect_a(double box);
BoxRegion sprinkle_rect_b(double box);

// With independent = true, B is read from a second, independent replica.
SprinkleReport sprinkling_check(const ModelSpec& model, double box, double level, double sprinkle,
                                std::size_t n_reps, std::uint64_t seed, bool independent = false,
                                int threads = 1);

// Events of the bootstrap construction, each a translate or rotation of an easy-way
// R x 3R crossing.
struct KestenEvent {
  BoxRegion rect;
  Orientation orientation;
};

struct KestenGeometry {
  BoxRegion master;  // [0,3R] x [0,9R], crossed left to right
  BoxRegion region;  // grid region covering every event
  std::vector<KestenEvent> left;
  std::vector<KestenEvent> right;
  double min_pair_distance = 0.0;
};

// Left family: windows [0,R] x [kR,(k+3)R] (k = 0..6) and bands [-2R,R] x [kR,(k+1)R]
// (k = 0..8); the right family mirrors them at [2R,3R] and [2R,5R]. Any left-right path
// across the master meets an event of each family, and every left/right pair is at
// distance >= R.
KestenGeometry kesten_geometry(double box);

struct KestenReport {
  double box = 0.0;
  double level = 0.0;
  double sprinkle = 0.0;
  std::size_t replicas = 0;
  std::size_t pairs = 0;
  double min_pair_distance = 0.0;
  std::size_t inclusion_violations = 0;
  double p_master = 0.0;
  double max_pair_product = 0.0;  // max_{i,j} P[A_i at level+h] P[B_j at level+h]
  double rhs_49 = 0.0;
  double rhs_pairs = 0.0;         // pairs * max_pair_product
  double margin = 0.0;            // rhs_49 - p_master
  double std_error = 0.0;
};

KestenReport kesten_check(const ModelSpec& model, double box, double level, double sprinkle,
                          std::size_t n_reps, std::uint64_t seed, int threads = 1);

}  // namespace shotperc
