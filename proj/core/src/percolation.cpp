#include "shotperc/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "shotperc/errors.hpp"
#include "shotperc/parallel.hpp"
#include "shotperc/rng.hpp"
#include "shotperc/union_find.hpp"

namespace shotperc {

namespace {

struct LocalBox {
  std::size_t rows, cols;
  std::size_t row0, col0;
  std::size_t stride;  // of the parent grid along axis 0
};

LocalBox local_box(const GridSpec& grid, const BoxRegion& rect) {
  if (grid.dimension() != 2) throw InvalidArgument("crossings are defined on 2-D grids");
  const SiteBox box = sites_within(grid, rect);
  const auto shape = grid.shape();
  return {box.last[0] - box.first[0] + 1, box.last[1] - box.first[1] + 1, box.first[0],
          box.first[1], shape[1]};
}

}  // namespace

std::string to_string(Orientation o) { return o == Orientation::left_right ? "lr" : "tb"; }

ExcursionSet excursion(const GridField& field, double level) {
  ExcursionSet ex{field.grid, level, std::vector<std::uint8_t>(field.values.size())};
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    if (!std::isfinite(field.values[i])) throw InvalidArgument("excursion of a non-finite field");
    ex.mask[i] = field.values[i] <= level ? 1 : 0;
  }
  return ex;
}

bool crossing_mask(std::span<const std::uint8_t> mask, std::size_t rows, std::size_t cols,
                   Orientation orientation, Connectivity connectivity) {
  if (mask.size() != rows * cols || rows == 0 || cols == 0) {
    throw InvalidArgument("mask shape mismatch");
  }
  const std::uint8_t want = connectivity == Connectivity::primal ? 1 : 0;
  const std::size_t n = rows * cols;
  const auto source = static_cast<std::uint32_t>(n);
  const auto sink = static_cast<std::uint32_t>(n + 1);
  UnionFind uf(n + 2);
  const bool diagonal = connectivity == Connectivity::dual;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t s = i * cols + j;
      if (mask[s] != want) continue;
      const auto id = static_cast<std::uint32_t>(s);
      const std::size_t along = orientation == Orientation::left_right ? i : j;
      const std::size_t last = orientation == Orientation::left_right ? rows - 1 : cols - 1;
      if (along == 0) uf.unite(id, source);
      if (along == last) uf.unite(id, sink);
      // Neighbours already visited: up, left, and (8-connectivity) both upper diagonals.
      if (i > 0 && mask[s - cols] == want) uf.unite(id, static_cast<std::uint32_t>(s - cols));
      if (j > 0 && mask[s - 1] == want) uf.unite(id, static_cast<std::uint32_t>(s - 1));
      if (diagonal && i > 0) {
        if (j > 0 && mask[s - cols - 1] == want) uf.unite(id, static_cast<std::uint32_t>(s - cols - 1));
        if (j + 1 < cols && mask[s - cols + 1] == want) {
          uf.unite(id, static_cast<std::uint32_t>(s - cols + 1));
        }
      }
    }
  }
  return uf.connected(source, sink);
}

bool crossing(const ExcursionSet& ex, const BoxRegion& rect, Orientation orientation,
              Connectivity connectivity) {
  const LocalBox b = local_box(ex.grid, rect);
  std::vector<std::uint8_t> sub(b.rows * b.cols);
  for (std::size_t i = 0; i < b.rows; ++i) {
    for (std::size_t j = 0; j < b.cols; ++j) {
      sub[i * b.cols + j] = ex.mask[(b.row0 + i) * b.stride + b.col0 + j];
    }
  }
  return crossing_mask(sub, b.rows, b.cols, orientation, connectivity);
}

double crossing_threshold(const GridField& field, const BoxRegion& rect, Orientation orientation) {
  const LocalBox b = local_box(field.grid, rect);
  const std::size_t n = b.rows * b.cols;
  std::vector<double> value(n);
  for (std::size_t i = 0; i < b.rows; ++i) {
    for (std::size_t j = 0; j < b.cols; ++j) {
      value[i * b.cols + j] = field.values[(b.row0 + i) * b.stride + b.col0 + j];
    }
  }
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0U);
  std::sort(order.begin(), order.end(), [&](std::uint32_t x, std::uint32_t y) {
    return value[x] < value[y] || (value[x] == value[y] && x < y);
  });
  const auto source = static_cast<std::uint32_t>(n);
  const auto sink = static_cast<std::uint32_t>(n + 1);
  UnionFind uf(n + 2);
  std::vector<std::uint8_t> open(n, 0);
  const bool lr = orientation == Orientation::left_right;
  for (std::uint32_t s : order) {
    open[s] = 1;
    const std::size_t i = s / b.cols, j = s % b.cols;
    const std::size_t along = lr ? i : j;
    const std::size_t last = lr ? b.rows - 1 : b.cols - 1;
    if (along == 0) uf.unite(s, source);
    if (along == last) uf.unite(s, sink);
    if (i > 0 && open[s - b.cols]) uf.unite(s, static_cast<std::uint32_t>(s - b.cols));
    if (i + 1 < b.rows && open[s + b.cols]) uf.unite(s, static_cast<std::uint32_t>(s + b.cols));
    if (j > 0 && open[s - 1]) uf.unite(s, s - 1);
    if (j + 1 < b.cols && open[s + 1]) uf.unite(s, s + 1);
    if (uf.connected(source, sink)) return value[s];
  }
  throw std::logic_error("crossing_threshold: all sites open without a crossing");
}

std::string ModelSpec::to_string() const {
  std::ostringstream os;
  os.precision(17);
  os << (kind == FieldModelKind::gaussian ? "gaussian" : "shot_noise") << "(" << kernel_label(kernel);
  if (kind == FieldModelKind::shot_noise) os << ",lambda=" << lambda;
  os << ",eps=" << spacing << ",pad=" << pad << ",shift=" << shift << ")";
  return os.str();
}

FieldModel::FieldModel(const ModelSpec& spec, const BoxRegion& region) : spec_(spec) {
  if (spec_.kind == FieldModelKind::shot_noise && !(spec_.lambda > 0.0)) {
    throw InvalidArgument("shot-noise model needs lambda > 0");
  }
  if (spec_.spacing <= 0.0) spec_.spacing = default_spacing(spec_.kernel);
  if (spec_.pad <= 0.0) spec_.pad = required_pad_radius(spec_.kernel, MultiIndex::zero());
  synth_ = std::make_shared<const Synthesizer>(spec_.kernel, MultiIndex::zero(),
                                               GridSpec(region, spec_.spacing), spec_.pad);
  variance_ = kernel_integral(spec_.kernel).integral_squared;
}

GridField FieldModel::sample(std::uint64_t seed, std::uint64_t replica) const {
  GridField f;
  if (spec_.kind == FieldModelKind::gaussian) {
    RngStream rng(seed, replica, 0, StreamPurpose::white_noise);
    f = synth_->gaussian(rng);
  } else {
    RngStream rng(seed, replica, 0, StreamPurpose::points);
    f = synth_->shot_noise(spec_.lambda, rng);
  }
  if (spec_.shift != 0.0) {
    for (double& v : f.values) v += spec_.shift;
  }
  return f;
}

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials) {
  if (trials == 0) throw InvalidArgument("Wilson interval needs at least one trial");
  constexpr double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double denom = 1.0 + z * z / n;
  const double center = (p + z * z / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n));
  return {center, half};
}

std::vector<double> crossing_thresholds(const ModelSpec& model, const BoxRegion& rect,
                                        Orientation orientation, std::size_t n_reps,
                                        std::uint64_t seed, int threads) {
  const FieldModel fm(model, rect);
  std::vector<double> out(n_reps);
  parallel_for(n_reps, threads, [&](std::size_t r) {
    out[r] = crossing_threshold(fm.sample(seed, r), rect, orientation);
  });
  return out;
}

CrossingEstimate estimate_from_thresholds(std::span<const double> thresholds, double level,
                                          const BoxRegion& rect, Orientation orientation) {
  CrossingEstimate e;
  e.rect = rect;
  e.orientation = orientation;
  e.level = level;
  e.replicas = thresholds.size();
  e.successes = static_cast<std::size_t>(
      std::count_if(thresholds.begin(), thresholds.end(), [&](double t) { return t <= level; }));
  e.p = static_cast<double>(e.successes) / static_cast<double>(e.replicas);
  e.std_error = wilson_interval(e.successes, e.replicas).half_width;
  return e;
}

CrossingEstimate crossing_probability(const ModelSpec& model, double level, const BoxRegion& rect,
                                      Orientation orientation, std::size_t n_reps,
                                      std::uint64_t seed, int threads) {
  if (n_reps < 30) throw InvalidArgument("crossing_probability needs at least 30 replicas");
  const auto t = crossing_thresholds(model, rect, orientation, n_reps, seed, threads);
  return estimate_from_thresholds(t, level, rect, orientation);
}

CriticalLevelEstimate critical_level_from_thresholds(std::span<const double> thresholds,
                                                     double center, double scale, double tol) {
  if (!(tol > 0.0)) throw InvalidArgument("bisection tolerance must be > 0");
  if (thresholds.size() < 2) throw InvalidArgument("need at least two replicas");
  std::vector<double> sorted(thresholds.begin(), thresholds.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  auto cdf = [&](double level) {
    return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), level) - sorted.begin()) / n;
  };
  double half = 0.5 * scale;
  double lo = center - half, hi = center + half;
  while (!(cdf(lo) < 0.5 && cdf(hi) > 0.5)) {
    half *= 2.0;
    if (half > 5.0 * scale * (1.0 + 1e-12)) {
      throw PreconditionError("crossing curve does not cross 1/2 within +-5 sqrt(K(0)) of the start");
    }
    lo = center - half;
    hi = center + half;
  }
  while (hi - lo > tol) {
    // Stop once the empirical curve is flat across the bracket.
    const auto first = std::upper_bound(sorted.begin(), sorted.end(), lo);
    const auto last = std::upper_bound(sorted.begin(), sorted.end(), hi);
    if (last - first <= 1) break;
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < 0.5 ? lo : hi) = mid;
  }
  CriticalLevelEstimate e;
  e.level = 0.5 * (lo + hi);
  e.bracket_lo = lo;
  e.bracket_hi = hi;
  e.p_lo = cdf(lo);
  e.p_hi = cdf(hi);
  e.replicas = sorted.size();
  const double spread = 0.5 * std::sqrt(n);
  const auto at = [&](double rank) {
    const auto k = static_cast<std::ptrdiff_t>(std::clamp(std::round(rank), 0.0, n - 1.0));
    return sorted[k];
  };
  e.std_error = 0.5 * (at(0.5 * n + spread) - at(0.5 * n - spread));
  return e;
}

CriticalLevelEstimate estimate_critical_level(const ModelSpec& model, double box, std::size_t n_reps,
                                              double tol, std::uint64_t seed, int threads) {
  const BoxRegion square = BoxRegion::square(0.0, box);
  const auto t = crossing_thresholds(model, square, Orientation::left_right, n_reps, seed, threads);
  const double scale = std::sqrt(kernel_integral(model.kernel).integral_squared);
  CriticalLevelEstimate e = critical_level_from_thresholds(t, model.shift, scale, tol);
  e.lambda = model.kind == FieldModelKind::shot_noise ? model.lambda : 0.0;
  e.box = box;
  return e;
}

BoxRegion sprinkle_rect_a(double box) { return BoxRegion::rect(0.0, 0.0, box, 3.0 * box); }
BoxRegion sprinkle_rect_b(double box) { return BoxRegion::rect(2.0 * box, 0.0, 3.0 * box, 3.0 * box); }

SprinkleReport sprinkling_check(const ModelSpec& model, double box, double level, double sprinkle,
                                std::size_t n_reps, std::uint64_t seed, bool independent,
                                int threads) {
  if (n_reps < 2) throw InvalidArgument("sprinkling check needs at least two replicas");
  const BoxRegion a = sprinkle_rect_a(box), b = sprinkle_rect_b(box);
  const FieldModel fm(model, BoxRegion::rect(0.0, 0.0, 3.0 * box, 3.0 * box));
  std::vector<double> ta(n_reps), tb(n_reps);
  parallel_for(n_reps, threads, [&](std::size_t r) {
    const GridField f = fm.sample(seed, r);
    ta[r] = crossing_threshold(f, a, Orientation::left_right);
    if (independent) {
      tb[r] = crossing_threshold(fm.sample(seed, n_reps + r), b, Orientation::left_right);
    } else {
      tb[r] = crossing_threshold(f, b, Orientation::left_right);
    }
  });
  const double n = static_cast<double>(n_reps);
  std::vector<double> ia(n_reps), ib(n_reps), iab(n_reps);
  double pa = 0.0, pb = 0.0, pab = 0.0;
  for (std::size_t r = 0; r < n_reps; ++r) {
    ia[r] = ta[r] <= level + sprinkle ? 1.0 : 0.0;
    ib[r] = tb[r] <= level + sprinkle ? 1.0 : 0.0;
    iab[r] = (ta[r] <= level && tb[r] <= level) ? 1.0 : 0.0;
    pa += ia[r];
    pb += ib[r];
    pab += iab[r];
  }
  pa /= n;
  pb /= n;
  pab /= n;
  double var = 0.0;
  for (std::size_t r = 0; r < n_reps; ++r) {
    const double psi = pb * (ia[r] - pa) + pa * (ib[r] - pb) - (iab[r] - pab);
    var += psi * psi;
  }
  var /= (n - 1.0);
  SprinkleReport rep;
  rep.box = box;
  rep.level = level;
  rep.sprinkle = sprinkle;
  rep.replicas = n_reps;
  rep.independent = independent;
  rep.p_a = pa;
  rep.p_b = pb;
  rep.p_ab = pab;
  rep.slack = pa * pb - pab;
  rep.std_error = std::sqrt(var / n);
  return rep;
}

KestenGeometry kesten_geometry(double box) {
  if (!(box > 0.0)) throw InvalidArgument("box size must be > 0");
  const double r = box;
  KestenGeometry g;
  g.master = BoxRegion::rect(0.0, 0.0, 3.0 * r, 9.0 * r);
  g.region = BoxRegion::rect(-2.0 * r, 0.0, 5.0 * r, 9.0 * r);
  for (int k = 0; k <= 6; ++k) {
    g.left.push_back({BoxRegion::rect(0.0, k * r, r, (k + 3) * r), Orientation::left_right});
    g.right.push_back({BoxRegion::rect(2.0 * r, k * r, 3.0 * r, (k + 3) * r), Orientation::left_right});
  }
  for (int k = 0; k <= 8; ++k) {
    g.left.push_back({BoxRegion::rect(-2.0 * r, k * r, r, (k + 1) * r), Orientation::top_bottom});
    g.right.push_back({BoxRegion::rect(2.0 * r, k * r, 5.0 * r, (k + 1) * r), Orientation::top_bottom});
  }
  g.min_pair_distance = std::numeric_limits<double>::infinity();
  for (const auto& a : g.left) {
    for (const auto& b : g.right) {
      g.min_pair_distance = std::min(g.min_pair_distance, BoxRegion::distance(a.rect, b.rect));
    }
  }
  if (g.min_pair_distance < r * (1.0 - 1e-12)) {
    throw std::logic_error("kesten_geometry: a left/right pair is closer than R");
  }
  return g;
}

KestenReport kesten_check(const ModelSpec& model, double box, double level, double sprinkle,
                          std::size_t n_reps, std::uint64_t seed, int threads) {
  if (n_reps < 2) throw InvalidArgument("Kesten check needs at least two replicas");
  const KestenGeometry g = kesten_geometry(box);
  const FieldModel fm(model, g.region);
  const std::size_t nl = g.left.size(), nr = g.right.size();
  std::vector<double> master(n_reps);
  std::vector<double> left(n_reps * nl), right(n_reps * nr);
  parallel_for(n_reps, threads, [&](std::size_t r) {
    const GridField f = fm.sample(seed, r);
    master[r] = crossing_threshold(f, g.master, Orientation::left_right);
    for (std::size_t i = 0; i < nl; ++i) {
      left[r * nl + i] = crossing_threshold(f, g.left[i].rect, g.left[i].orientation);
    }
    for (std::size_t j = 0; j < nr; ++j) {
      right[r * nr + j] = crossing_threshold(f, g.right[j].rect, g.right[j].orientation);
    }
  });
  KestenReport rep;
  rep.box = box;
  rep.level = level;
  rep.sprinkle = sprinkle;
  rep.replicas = n_reps;
  rep.pairs = nl * nr;
  rep.min_pair_distance = g.min_pair_distance;
  const double n = static_cast<double>(n_reps);
  std::vector<double> pl(nl, 0.0), pr(nr, 0.0);
  for (std::size_t r = 0; r < n_reps; ++r) {
    const double min_l = *std::min_element(left.begin() + r * nl, left.begin() + (r + 1) * nl);
    const double min_r = *std::min_element(right.begin() + r * nr, right.begin() + (r + 1) * nr);
    if (master[r] < min_l || master[r] < min_r) ++rep.inclusion_violations;
    if (master[r] <= level) rep.p_master += 1.0;
    for (std::size_t i = 0; i < nl; ++i) pl[i] += left[r * nl + i] <= level + sprinkle ? 1.0 : 0.0;
    for (std::size_t j = 0; j < nr; ++j) pr[j] += right[r * nr + j] <= level + sprinkle ? 1.0 : 0.0;
  }
  rep.p_master /= n;
  for (double& v : pl) v /= n;
  for (double& v : pr) v /= n;
  const std::size_t bi = std::max_element(pl.begin(), pl.end()) - pl.begin();
  const std::size_t bj = std::max_element(pr.begin(), pr.end()) - pr.begin();
  rep.max_pair_product = pl[bi] * pr[bj];
  rep.rhs_49 = 49.0 * rep.max_pair_product;
  rep.rhs_pairs = static_cast<double>(rep.pairs) * rep.max_pair_product;
  rep.margin = rep.rhs_49 - rep.p_master;
  double var = 0.0;
  for (std::size_t r = 0; r < n_reps; ++r) {
    const double a = left[r * nl + bi] <= level + sprinkle ? 1.0 : 0.0;
    const double b = right[r * nr + bj] <= level + sprinkle ? 1.0 : 0.0;
    const double m = master[r] <= level ? 1.0 : 0.0;
    const double psi = 49.0 * (pr[bj] * (a - pl[bi]) + pl[bi] * (b - pr[bj])) - (m - rep.p_master);
    var += psi * psi;
  }
  rep.std_error = std::sqrt(var / (n - 1.0) / n);
  return rep;
}

}  // namespace shotperc
