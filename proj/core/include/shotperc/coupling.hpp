#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "shotperc/distributions.hpp"
#include "shotperc/geometry.hpp"
#include "shotperc/grid.hpp"
#include "shotperc/kernel.hpp"
#include "shotperc/rng.hpp"
#include "shotperc/synthesis.hpp"

namespace shotperc {

// Dyadic partition of [0,1)^d: the split from level j to j+1 halves along axis j mod d,
// and cell (j, k) has children (j+1, 2k) (lower half) and (j+1, 2k+1) (upper half).
class BinaryExpansion {
 public:
  BinaryExpansion(int dimension, int depth);

  int dimension() const { return dimension_; }
  int depth() const { return depth_; }
  static int split_axis(int level, int dimension) { return level % dimension; }
  std::uint64_t cells_at(int level) const { return std::uint64_t{1} << level; }
  double volume(int level) const { return std::ldexp(1.0, -level); }
  // Number of halvings along `axis` between level 0 and `level`.
  int splits(int level, int axis) const;
  // Integer coordinates of cell (level, k) on each axis, in units of 2^-splits(level, axis).
  std::vector<std::uint64_t> axis_index(int level, std::uint64_t k) const;
  BoxRegion cell(int level, std::uint64_t k) const;
  double diameter(int level) const;
  // Index of the level-`level` cell containing x in [0,1)^d.
  std::uint64_t locate(std::span<const double> x, int level) const;

 private:
  int dimension_;
  int depth_;
};

using CubeFunction = std::function<double(std::span<const double>)>;

// Gauss-Legendre points per axis (4, 8 or 16).
struct QuadratureSpec {
  int nodes_per_axis = 8;
};

// Vol(D)^-1 int_D (h - mean_D h)^2.
double l2_modulus(const CubeFunction& h, const BoxRegion& cell, const QuadratureSpec& quad = {});

// (sum_{j <= m} sum_k omega^2(h; Delta_{j,k}))^{1/2}. Every level is aggregated from the
// same quadrature on the depth-level leaves, which makes q_m exactly nondecreasing in m.
double q_modulus(const CubeFunction& h, const BinaryExpansion& expansion, int m,
                 const QuadratureSpec& quad = {});
// q_0 .. q_depth from one pass.
std::vector<double> q_modulus_profile(const CubeFunction& h, const BinaryExpansion& expansion,
                                      const QuadratureSpec& quad = {});

// Best Poincare-Wirtinger constant c with Var_D(h) <= c diam(D)^2 Vol(D)^-1 int_D |grad h|^2,
// maximized over the cell shapes of the expansion (two side lengths at every level).
double poincare_constant(int dimension);

// Z ~ N(0,1) and N the Pois(lambda) quantile of Phi(Z).
std::pair<std::uint64_t, double> couple_poisson_gaussian(double lambda, RngStream& rng);

struct NodeSplit {
  int level;
  std::uint64_t index;
  std::uint64_t count;
  std::uint64_t left_count;
  double normal;
  bool coupled;  // false for independent fill-in below the coupled levels
};

struct CellCoupling {
  std::vector<double> points;              // flat coordinates in [0,1)^d
  std::vector<std::uint64_t> leaf_counts;  // per cell at expansion.depth()
  std::vector<double> bridge_masses;       // pinned-total Gaussian masses per leaf
  std::vector<NodeSplit> record;           // empty unless requested
};

// Pushes N points and a zero-total Gaussian bridge down the expansion. Levels below
// min(m, depth) use one shared N(0,1) per node: the bridge split M/2 +- sqrt(v)/2 xi and
// the Binomial(n, 1/2) quantile of Phi(xi). Deeper bridge splits are independent; points
// land uniformly inside their level-min(m, depth) cell.
CellCoupling couple_cell(std::uint64_t count, const BinaryExpansion& expansion, int m,
                         RngStream& rng, BinomialHalfCoupler& binomial, bool keep_record = false);
CellCoupling couple_cell(std::uint64_t count, const BinaryExpansion& expansion, int m,
                         RngStream& rng);

// ceil(log2(2 lambda / log lambda)), clipped to [0, 24].
int default_coupling_depth(double lambda);

struct CellRandomness {
  std::vector<long> cell;
  std::uint64_t count;
  double normal;
  std::vector<NodeSplit> splits;
};

struct CoupledFieldPair {
  GridField shot;
  GridField gauss;
  double lambda = 0.0;
  int depth = 0;
  std::vector<CellRandomness> cells;  // filled when requested
};

// Shot-noise and Gaussian fields driven by per-unit-cell coupled randomness. The grid
// spacing must be 2^-p and its lower corner on the spacing lattice.
class FieldCoupler {
 public:
  FieldCoupler(AnyKernel kernel, GridSpec grid, double pad_radius, double lambda, int m);

  const GridSpec& grid() const { return synth_->grid(); }
  const Synthesizer& synthesizer() const { return *synth_; }
  double lambda() const { return lambda_; }
  int depth() const { return m_; }
  int lattice_level() const { return expansion_.depth(); }
  // Independent Gaussian field on the same lattice, for baselines.
  GridField independent_gaussian(RngStream& rng) const;
  CoupledFieldPair sample(std::uint64_t seed, std::uint64_t replica, bool keep_record = false) const;

 private:
  std::shared_ptr<const Synthesizer> synth_;
  double lambda_;
  int m_;
  BinaryExpansion expansion_;
  PoissonNormalCoupler poisson_;
  std::vector<std::size_t> units_;  // unit cells per axis
  std::vector<std::size_t> leaf_to_lattice_;  // leaf index -> offset inside the unit block
};

CoupledFieldPair couple_fields(const AnyKernel& k, double lambda, const GridSpec& grid, int m,
                               double pad_radius, std::uint64_t seed, std::uint64_t replica);

}  // namespace shotperc
