#include "shotperc/coupling.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "shotperc/errors.hpp"

namespace shotperc {

namespace {

// Gauss-Legendre rule mapped to [0, 1].
struct UnitRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

template <unsigned N>
UnitRule make_rule() {
  using Rule = boost::math::quadrature::gauss<double, N>;
  UnitRule r;
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.nodes.push_back(0.5 - 0.5 * x[i]);
    r.weights.push_back(0.5 * w[i]);
    if (x[i] != 0.0) {
      r.nodes.push_back(0.5 + 0.5 * x[i]);
      r.weights.push_back(0.5 * w[i]);
    }
  }
  return r;
}

const UnitRule& unit_rule(int nodes) {
  static const UnitRule r4 = make_rule<4>();
  static const UnitRule r8 = make_rule<8>();
  static const UnitRule r16 = make_rule<16>();
  switch (nodes) {
    case 4:
      return r4;
    case 8:
      return r8;
    case 16:
      return r16;
    default:
      throw InvalidArgument("quadrature supports 4, 8 or 16 nodes per axis");
  }
}

// Weighted mean and sum of squared deviations of h over a box (weights sum to its volume).
struct Moments {
  double mean = 0.0;
  double m2 = 0.0;
};

Moments box_moments(const CubeFunction& h, const BoxRegion& box, const UnitRule& rule) {
  const int d = box.dimension();
  const std::size_t n = rule.nodes.size();
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> x(d);
  std::vector<double> values, weights;
  const double vol = box.volume();
  for (;;) {
    double w = vol;
    for (int a = 0; a < d; ++a) {
      x[a] = box.lower(a) + box.extent(a) * rule.nodes[idx[a]];
      w *= rule.weights[idx[a]];
    }
    values.push_back(h(x));
    weights.push_back(w);
    int a = d - 1;
    while (a >= 0 && ++idx[a] == n) idx[a--] = 0;
    if (a < 0) break;
  }
  Moments m;
  for (std::size_t i = 0; i < values.size(); ++i) m.mean += weights[i] * values[i];
  m.mean /= vol;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double dv = values[i] - m.mean;
    m.m2 += weights[i] * dv * dv;
  }
  return m;
}

}  // namespace

BinaryExpansion::BinaryExpansion(int dimension, int depth) : dimension_(dimension), depth_(depth) {
  if (dimension < 1) throw InvalidArgument("binary expansion needs d >= 1");
  if (depth < 0 || depth > 30) throw InvalidArgument("binary expansion depth must be in [0, 30]");
}

int BinaryExpansion::splits(int level, int axis) const {
  return level / dimension_ + (axis < level % dimension_ ? 1 : 0);
}

std::vector<std::uint64_t> BinaryExpansion::axis_index(int level, std::uint64_t k) const {
  if (level < 0 || level > depth_) throw InvalidArgument("level outside the expansion");
  if (k >= cells_at(level)) throw InvalidArgument("cell index outside the level");
  std::vector<std::uint64_t> idx(dimension_, 0);
  for (int i = 0; i < level; ++i) {
    const std::uint64_t bit = (k >> (level - 1 - i)) & 1U;
    auto& v = idx[split_axis(i, dimension_)];
    v = 2 * v + bit;
  }
  return idx;
}

BoxRegion BinaryExpansion::cell(int level, std::uint64_t k) const {
  const auto idx = axis_index(level, k);
  std::vector<double> lo(dimension_), hi(dimension_);
  for (int a = 0; a < dimension_; ++a) {
    const double side = std::ldexp(1.0, -splits(level, a));
    lo[a] = static_cast<double>(idx[a]) * side;
    hi[a] = static_cast<double>(idx[a] + 1) * side;
  }
  return BoxRegion(lo, hi);
}

double BinaryExpansion::diameter(int level) const {
  double sum = 0.0;
  for (int a = 0; a < dimension_; ++a) sum += std::ldexp(1.0, -2 * splits(level, a));
  return std::sqrt(sum);
}

std::uint64_t BinaryExpansion::locate(std::span<const double> x, int level) const {
  std::vector<double> t(x.begin(), x.end());
  std::uint64_t k = 0;
  for (int i = 0; i < level; ++i) {
    double& v = t[split_axis(i, dimension_)];
    v *= 2.0;
    const std::uint64_t bit = v >= 1.0 ? 1 : 0;
    v -= static_cast<double>(bit);
    k = 2 * k + bit;
  }
  return k;
}

double l2_modulus(const CubeFunction& h, const BoxRegion& cell, const QuadratureSpec& quad) {
  const Moments m = box_moments(h, cell, unit_rule(quad.nodes_per_axis));
  return std::max(0.0, m.m2 / cell.volume());
}

std::vector<double> q_modulus_profile(const CubeFunction& h, const BinaryExpansion& expansion,
                                      const QuadratureSpec& quad) {
  const UnitRule& rule = unit_rule(quad.nodes_per_axis);
  const int depth = expansion.depth();
  std::vector<Moments> level(expansion.cells_at(depth));
  for (std::uint64_t k = 0; k < level.size(); ++k) level[k] = box_moments(h, expansion.cell(depth, k), rule);
  std::vector<double> per_level(depth + 1, 0.0);
  for (int j = depth;; --j) {
    const double vol = expansion.volume(j);
    double sum = 0.0;
    for (const Moments& m : level) sum += m.m2;
    per_level[j] = std::max(0.0, sum / vol);
    if (j == 0) break;
    // Chan et al. pairwise merge of equal-volume siblings.
    std::vector<Moments> parent(level.size() / 2);
    for (std::size_t k = 0; k < parent.size(); ++k) {
      const Moments& l = level[2 * k];
      const Moments& r = level[2 * k + 1];
      const double delta = l.mean - r.mean;
      parent[k].mean = 0.5 * (l.mean + r.mean);
      parent[k].m2 = l.m2 + r.m2 + delta * delta * 0.25 * expansion.volume(j - 1);
    }
    level = std::move(parent);
  }
  std::vector<double> q(depth + 1);
  double acc = 0.0;
  for (int j = 0; j <= depth; ++j) {
    acc += per_level[j];
    q[j] = std::sqrt(acc);
  }
  return q;
}

double q_modulus(const CubeFunction& h, const BinaryExpansion& expansion, int m,
                 const QuadratureSpec& quad) {
  if (m < 0 || m > expansion.depth()) throw InvalidArgument("q_modulus level exceeds expansion depth");
  return q_modulus_profile(h, expansion, quad)[m];
}

double poincare_constant(int dimension) {
  // Shapes repeat with period d in the level; the Neumann constant of a box is
  // (longest side / pi)^2.
  const BinaryExpansion shape(dimension, dimension);
  double best = 0.0;
  for (int j = 0; j < dimension; ++j) {
    double longest = 0.0, diam2 = 0.0;
    for (int a = 0; a < dimension; ++a) {
      const double side = std::ldexp(1.0, -shape.splits(j, a));
      longest = std::max(longest, side);
      diam2 += side * side;
    }
    best = std::max(best, longest * longest / (std::numbers::pi * std::numbers::pi * diam2));
  }
  return best;
}

std::pair<std::uint64_t, double> couple_poisson_gaussian(double lambda, RngStream& rng) {
  const PoissonNormalCoupler coupler(lambda);
  const double z = rng.normal();
  return {coupler(z), z};
}

CellCoupling couple_cell(std::uint64_t count, const BinaryExpansion& expansion, int m,
                         RngStream& rng, BinomialHalfCoupler& binomial, bool keep_record) {
  if (m < 0) throw InvalidArgument("coupling depth must be >= 0");
  const int depth = expansion.depth();
  if (depth > 24) throw InvalidArgument("couple_cell stores every leaf; depth must be <= 24");
  const int coupled = std::min(m, depth);
  const int d = expansion.dimension();

  std::vector<std::uint64_t> counts{count};
  std::vector<double> masses{0.0};
  CellCoupling out;
  for (int j = 0; j < depth; ++j) {
    const double half_sd = 0.5 * std::sqrt(expansion.volume(j));
    const bool split_counts = j < coupled;
    std::vector<double> next_mass(2 * masses.size());
    std::vector<std::uint64_t> next_count(split_counts ? 2 * counts.size() : 0);
    for (std::size_t k = 0; k < masses.size(); ++k) {
      const double xi = rng.normal();
      next_mass[2 * k] = 0.5 * masses[k] + half_sd * xi;
      next_mass[2 * k + 1] = 0.5 * masses[k] - half_sd * xi;
      std::uint64_t left = 0;
      if (split_counts) {
        left = binomial(counts[k], xi);
        next_count[2 * k] = left;
        next_count[2 * k + 1] = counts[k] - left;
      }
      if (keep_record) {
        out.record.push_back({j, k, split_counts ? counts[k] : 0, left, xi, split_counts});
      }
    }
    masses = std::move(next_mass);
    if (split_counts) counts = std::move(next_count);
  }
  out.bridge_masses = std::move(masses);

  // Uniform placement inside the deepest coupled cells, then binning to the leaves.
  out.points.reserve(count * d);
  out.leaf_counts.assign(expansion.cells_at(depth), 0);
  std::vector<double> x(d);
  for (std::uint64_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0) continue;
    const BoxRegion box = expansion.cell(coupled, k);
    for (std::uint64_t i = 0; i < counts[k]; ++i) {
      for (int a = 0; a < d; ++a) x[a] = box.lower(a) + box.extent(a) * rng.uniform();
      out.points.insert(out.points.end(), x.begin(), x.end());
      const std::uint64_t leaf = coupled == depth ? k : expansion.locate(x, depth);
      ++out.leaf_counts[leaf];
    }
  }
  return out;
}

CellCoupling couple_cell(std::uint64_t count, const BinaryExpansion& expansion, int m,
                         RngStream& rng) {
  BinomialHalfCoupler binomial;
  return couple_cell(count, expansion, m, rng, binomial, true);
}

int default_coupling_depth(double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("intensity must be > 0");
  const double t = std::max(1.0, std::log(lambda));
  const double level = std::ceil(std::log2(2.0 * lambda / t));
  return static_cast<int>(std::clamp(level, 0.0, 24.0));
}

namespace {

int dyadic_exponent(double spacing) {
  const double p = -std::log2(spacing);
  const double rounded = std::round(p);
  if (std::fabs(p - rounded) > 1e-12 || rounded < 0.0) {
    throw InvalidArgument("coupled synthesis needs spacing 2^-p with p >= 0");
  }
  return static_cast<int>(rounded);
}

}  // namespace

FieldCoupler::FieldCoupler(AnyKernel kernel, GridSpec grid, double pad_radius, double lambda, int m)
    : synth_(std::make_shared<const Synthesizer>(std::move(kernel), MultiIndex::zero(), grid,
                                                 pad_radius, true)),
      lambda_(lambda),
      m_(m),
      expansion_(grid.dimension(), grid.dimension() * dyadic_exponent(grid.spacing)),
      poisson_(lambda) {
  if (m < 0) throw InvalidArgument("coupling depth must be >= 0");
  const int d = grid.dimension();
  const int p = dyadic_exponent(grid.spacing);
  const std::size_t per_unit = std::size_t{1} << p;
  const auto& cells = synth_->cell_shape();
  std::vector<std::size_t> strides(d, 1);
  for (int a = d - 2; a >= 0; --a) strides[a] = strides[a + 1] * cells[a + 1];
  units_.resize(d);
  for (int a = 0; a < d; ++a) units_[a] = cells[a] / per_unit;
  const int leaf_level = expansion_.depth();
  leaf_to_lattice_.resize(expansion_.cells_at(leaf_level));
  for (std::uint64_t k = 0; k < leaf_to_lattice_.size(); ++k) {
    const auto idx = expansion_.axis_index(leaf_level, k);
    std::size_t off = 0;
    for (int a = 0; a < d; ++a) off += idx[a] * strides[a];
    leaf_to_lattice_[k] = off;
  }
}

GridField FieldCoupler::independent_gaussian(RngStream& rng) const { return synth_->gaussian(rng); }

CoupledFieldPair FieldCoupler::sample(std::uint64_t seed, std::uint64_t replica, bool keep_record) const {
  const int d = grid().dimension();
  const auto& cells = synth_->cell_shape();
  const std::size_t per_unit = cells[0] / units_[0];
  std::vector<std::size_t> strides(d, 1);
  for (int a = d - 2; a >= 0; --a) strides[a] = strides[a + 1] * cells[a + 1];
  const double cell_volume = std::pow(grid().spacing, d);
  const double mean = lambda_ * cell_volume;
  const double scale = 1.0 / std::sqrt(lambda_);

  std::vector<double> shot(synth_->cell_count());
  std::vector<double> gauss(synth_->cell_count());
  CoupledFieldPair pair;
  pair.lambda = lambda_;
  pair.depth = m_;
  BinomialHalfCoupler binomial;
  std::size_t total_units = 1;
  for (std::size_t u : units_) total_units *= u;
  std::vector<long> unit(d);
  for (std::size_t c = 0; c < total_units; ++c) {
    std::size_t rem = c, base = 0;
    for (int a = d - 1; a >= 0; --a) {
      unit[a] = static_cast<long>(rem % units_[a]);
      rem /= units_[a];
    }
    for (int a = 0; a < d; ++a) base += static_cast<std::size_t>(unit[a]) * per_unit * strides[a];
    RngStream rng(seed, replica, c, StreamPurpose::coupling);
    const double z = rng.normal();
    const std::uint64_t n = poisson_(z);
    CellCoupling cc = couple_cell(n, expansion_, m_, rng, binomial, keep_record);
    for (std::size_t k = 0; k < leaf_to_lattice_.size(); ++k) {
      const std::size_t at = base + leaf_to_lattice_[k];
      shot[at] = (static_cast<double>(cc.leaf_counts[k]) - mean) * scale;
      gauss[at] = cc.bridge_masses[k] + z * cell_volume;
    }
    if (keep_record) {
      std::vector<long> origin(d);
      for (int a = 0; a < d; ++a) {
        origin[a] = std::lround(synth_->padded_region().lower(a)) + unit[a];
      }
      pair.cells.push_back({origin, n, z, std::move(cc.record)});
    }
  }
  pair.shot = synth_->render(std::move(shot), synth_->shot_label(lambda_));
  pair.gauss = synth_->render(std::move(gauss), synth_->gaussian_label());
  return pair;
}

CoupledFieldPair couple_fields(const AnyKernel& k, double lambda, const GridSpec& grid, int m,
                               double pad_radius, std::uint64_t seed, std::uint64_t replica) {
  return FieldCoupler(k, grid, pad_radius, lambda, m).sample(seed, replica, true);
}

}  // namespace shotperc
