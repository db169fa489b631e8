#include "shotperc/experiments.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

#include "shotperc/coupling.hpp"
#include "shotperc/errors.hpp"
#include "shotperc/parallel.hpp"
#include "shotperc/rng.hpp"
#include "shotperc/stats.hpp"
#include "shotperc/synthesis.hpp"

namespace shotperc {

namespace {

// g as a function of s = |x|^2, with a cheap path for the default kernel.
std::function<double(double)> fast_profile(const AnyKernel& k) {
  if (const auto* base = std::get_if<Kernel>(&k)) {
    if (base->family() == KernelFamily::rational && base->parameter() == 3.0) {
      return [](double s) {
        const double t = 1.0 + s;
        return 1.0 / (t * std::sqrt(t));
      };
    }
  }
  return [k](double s) { return kernel_profile(k, s, 0); };
}

double ball_integral(const AnyKernel& k, double radius) {
  const int d = kernel_dimension(k);
  auto f = [&](double r) { return std::pow(r, d - 1) * kernel_profile(k, r * r, 0); };
  double err = 0.0;
  return sphere_area(d) *
         boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, radius, 20, 1e-13, &err);
}

BoxRegion cube(int d, double lo, double hi) {
  return BoxRegion(std::vector<double>(d, lo), std::vector<double>(d, hi));
}

// Flat indices of sites within distance radius of the origin.
std::vector<std::size_t> ball_sites(const GridSpec& grid, double radius) {
  const auto shape = grid.shape();
  const int d = grid.dimension();
  std::vector<std::size_t> out;
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t flat = 0; flat < grid.site_count(); ++flat) {
    std::size_t rem = flat;
    double s = 0.0;
    for (int a = d - 1; a >= 0; --a) {
      idx[a] = rem % shape[a];
      rem /= shape[a];
      const double x = grid.coordinate(a, idx[a]);
      s += x * x;
    }
    if (s <= radius * radius * (1.0 + 1e-12)) out.push_back(flat);
  }
  return out;
}

double sup_over(const std::vector<std::size_t>& sites, const GridField& a, const GridField& b) {
  double sup = 0.0;
  for (std::size_t i : sites) sup = std::max(sup, std::fabs(a.values[i] - b.values[i]));
  return sup;
}

struct RowFactory {
  const ExperimentConfig& cfg;

  ReportRow make(const std::string& statistic, double value) const {
    ReportRow r;
    r.experiment = to_string(cfg.experiment);
    r.statistic = statistic;
    r.value = value;
    r.seed = cfg.seed;
    r.replicas = cfg.replicas;
    return r;
  }
};

double spacing_for(const ExperimentConfig& cfg, const AnyKernel& k) {
  return cfg.epsilon ? *cfg.epsilon : default_spacing(k);
}

double pad_for(const ExperimentConfig& cfg, const AnyKernel& k) {
  return cfg.pad ? *cfg.pad : required_pad_radius(k, MultiIndex::zero());
}

ModelSpec shot_model(const ExperimentConfig& cfg, const AnyKernel& k, double lambda) {
  ModelSpec m(k);
  m.kind = FieldModelKind::shot_noise;
  m.lambda = lambda;
  m.spacing = spacing_for(cfg, k);
  m.pad = pad_for(cfg, k);
  return m;
}

ModelSpec gaussian_model(const ExperimentConfig& cfg, const AnyKernel& k) {
  ModelSpec m(k);
  m.kind = FieldModelKind::gaussian;
  m.spacing = spacing_for(cfg, k);
  m.pad = pad_for(cfg, k);
  return m;
}

std::vector<ReportRow> marginal_clt(const ExperimentConfig& cfg) {
  const RowFactory rf{cfg};
  const AnyKernel k = cfg.kernel.build();
  const double radius = cfg.radius.value_or(8.0);
  // In d <= 2 the target goes through the quadrature/FFT cross-check.
  const int d = kernel_dimension(k);
  const double k0 = d <= 2 ? covariance(k, std::vector<double>(d, 0.0)) : kernel_integral(k).integral_squared;
  std::vector<ReportRow> rows;
  auto target = rf.make("target_variance", k0);
  rows.push_back(target);
  for (std::size_t i = 0; i < cfg.lambdas.size(); ++i) {
    const double lambda = cfg.lambdas[i];
    const auto x = sample_origin_values(k, lambda, radius, cfg.replicas, derive_seed(cfg.seed, i), cfg.threads);
    const Summary s = summarize(x);
    auto add = [&](const std::string& name, double v, std::optional<double> se) {
      ReportRow r = rf.make(name, v);
      r.lambda = lambda;
      r.std_error = se;
      rows.push_back(r);
    };
    add("ks_distance", ks_distance_normal(x, 0.0, std::sqrt(k0)), std::nullopt);
    add("mean", s.mean, s.std_error);
    add("variance", s.variance, s.variance * std::sqrt(2.0 / static_cast<double>(s.n - 1)));
  }
  return rows;
}

std::vector<ReportRow> coupling_rate(const ExperimentConfig& cfg) {
  const RowFactory rf{cfg};
  const AnyKernel k = cfg.kernel.build();
  const double radius = cfg.radius.value_or(4.0);
  const double eps = spacing_for(cfg, k);
  const double pad = pad_for(cfg, k);
  std::vector<ReportRow> rows;
  std::vector<double> medians;
  for (std::size_t i = 0; i < cfg.lambdas.size(); ++i) {
    const double lambda = cfg.lambdas[i];
    const int m = cfg.depth.value_or(default_coupling_depth(lambda));
    const CouplingErrors e =
        coupling_errors(k, lambda, radius, eps, pad, m, cfg.replicas, derive_seed(cfg.seed, i), cfg.threads);
    std::vector<double> diff(e.coupled.size());
    for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = e.independent[j] - e.coupled[j];
    const Summary sd = summarize(diff);
    auto add = [&](const std::string& name, double v, std::optional<double> se) {
      ReportRow r = rf.make(name, v);
      r.lambda = lambda;
      r.epsilon = eps;
      r.std_error = se;
      rows.push_back(r);
    };
    medians.push_back(median(e.coupled));
    add("depth", m, std::nullopt);
    add("median_coupled_error", medians.back(), median_std_error(e.coupled));
    add("median_independent_error", median(e.independent), median_std_error(e.independent));
    add("paired_difference", sd.mean, sd.std_error);
  }
  if (cfg.lambdas.size() >= 3) {
    const RateFit fit = fit_loglog(cfg.lambdas, medians);
    ReportRow r = rf.make("slope_coupled_error", fit.slope);
    r.std_error = fit.slope_std_error;
    r.epsilon = eps;
    rows.push_back(r);
    ReportRow q = rf.make("r_squared_coupled_error", fit.r_squared);
    q.epsilon = eps;
    rows.push_back(q);
  }
  return rows;
}

std::vector<ReportRow> truncation_rate(const ExperimentConfig& cfg) {
  const RowFactory rf{cfg};
  const AnyKernel k = cfg.kernel.build();
  const double eps = spacing_for(cfg, k);
  const double r_max = *std::max_element(cfg.ranges.begin(), cfg.ranges.end());
  const double pad = std::max(pad_for(cfg, k), 0.5 * r_max);
  const double beta = decay_exponent(k);
  const double d = kernel_dimension(k);
  std::vector<ReportRow> rows;
  std::vector<std::vector<double>> shot_medians(cfg.lambdas.size());
  std::vector<double> gauss_medians;
  for (std::size_t j = 0; j < cfg.ranges.size(); ++j) {
    const double range = cfg.ranges[j];
    for (std::size_t i = 0; i < cfg.lambdas.size(); ++i) {
      const TruncationErrors e = truncation_errors(k, cfg.lambdas[i], range, eps, pad, cfg.replicas,
                                                   derive_seed(cfg.seed, i), cfg.threads);
      ReportRow r = rf.make("median_shot_error", median(e.shot));
      r.lambda = cfg.lambdas[i];
      r.range = range;
      r.epsilon = eps;
      r.std_error = median_std_error(e.shot);
      rows.push_back(r);
      shot_medians[i].push_back(r.value);
      if (i == 0) {
        ReportRow g = rf.make("median_gauss_error", median(e.gauss));
        g.range = range;
        g.epsilon = eps;
        g.std_error = median_std_error(e.gauss);
        rows.push_back(g);
        gauss_medians.push_back(g.value);
      }
    }
  }
  if (cfg.ranges.size() >= 3) {
    for (std::size_t i = 0; i < cfg.lambdas.size(); ++i) {
      const RateFit fit = fit_loglog(cfg.ranges, shot_medians[i]);
      ReportRow r = rf.make("slope_shot_error", fit.slope);
      r.lambda = cfg.lambdas[i];
      r.std_error = fit.slope_std_error;
      rows.push_back(r);
    }
    const RateFit g = fit_loglog(cfg.ranges, gauss_medians);
    ReportRow r = rf.make("slope_gauss_error", g.slope);
    r.std_error = g.slope_std_error;
    rows.push_back(r);
  }
  rows.push_back(rf.make("target_slope_shot", d - beta));
  rows.push_back(rf.make("target_slope_gauss", 0.5 * d - beta));
  return rows;
}

std::vector<ReportRow> c1_tails(const ExperimentConfig& cfg) {
  const RowFactory rf{cfg};
  const AnyKernel k = cfg.kernel.build();
  const int d = kernel_dimension(k);
  const double eps = spacing_for(cfg, k);
  const double pad = pad_for(cfg, k);
  const BoxRegion unit = cube(d, 0.0, 1.0);
  const Synthesizer synth(k, MultiIndex::zero(), GridSpec(unit, eps), pad);
  std::vector<ReportRow> rows;

  std::vector<double> gauss(cfg.replicas);
  const std::uint64_t gseed = derive_seed(cfg.seed, 1000);
  parallel_for(cfg.replicas, cfg.threads, [&](std::size_t r) {
    RngStream rng(gseed, r, 0, StreamPurpose::white_noise);
    gauss[r] = c1_norm(synth.gaussian(rng), unit);
  });
  const std::vector<double> probs{0.5, 0.75, 0.9, 0.95, 0.98};
  std::vector<double> u2, logtail;
  for (double p : probs) {
    const double u = quantile(gauss, p);
    char name[48];
    std::snprintf(name, sizeof name, "gauss_c1_quantile_%.2f", p);
    ReportRow r = rf.make(name, u);
    r.epsilon = eps;
    rows.push_back(r);
    u2.push_back(u * u);
    logtail.push_back(std::log(1.0 - p));
  }
  const LinearFit fit = fit_linear(u2, logtail);
  rows.push_back(rf.make("gauss_log_tail_vs_u2_slope", fit.slope));
  rows.push_back(rf.make("gauss_log_tail_vs_u2_r_squared", fit.r_squared));

  for (std::size_t i = 0; i < cfg.lambdas.size(); ++i) {
    const double lambda = cfg.lambdas[i];
    std::vector<double> norms(cfg.replicas);
    const std::uint64_t seed = derive_seed(cfg.seed, i);
    parallel_for(cfg.replicas, cfg.threads, [&](std::size_t r) {
      RngStream rng(seed, r, 0, StreamPurpose::points);
      norms[r] = c1_norm(synth.shot_noise(lambda, rng), unit);
    });
    // f_lambda is already divided by sqrt(lambda), so the unnormalized cut u sqrt(lambda) becomes u.
    for (double u : cfg.thresholds) {
      const auto hits = std::count_if(norms.begin(), norms.end(), [&](double v) { return v >= u; });
      const double p = static_cast<double>(hits) / static_cast<double>(norms.size());
      ReportRow r = rf.make("shot_exceed_fraction_u_" + format_double(u), p);
      r.lambda = lambda;
      r.epsilon = eps;
      r.std_error = wilson_interval(static_cast<std::size_t>(hits), norms.size()).half_width;
      rows.push_back(r);
    }
  }
  return rows;
}

// Paired bootstrap over replicas: resample indices once, apply stat to every series.
// Returns the standard deviation of each output of stat across resamples.
std::vector<double> paired_bootstrap_se(
    const std::vector<std::vector<double>>& series,
    const std::function<std::vector<double>(const std::vector<std::vector<double>>&)>& stat, std::size_t resamples,
    std::uint64_t seed, int threads) {
  const std::size_t n = series.front().size();
  std::vector<std::vector<double>> draws(resamples);
  parallel_for(resamples, threads, [&](std::size_t b) {
    RngStream rng(seed, b, 0, StreamPurpose::auxiliary);
    std::vector<std::vector<double>> picked(series.size(), std::vector<double>(n));
    for (std::size_t j = 0; j < n; ++j) {
      const auto at = std::min(n - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)));
      for (std::size_t s = 0; s < series.size(); ++s) picked[s][j] = series[s][at];
    }
    draws[b] = stat(picked);
  });
  std::vector<double> se(draws.front().size());
  for (std::size_t o = 0; o < se.size(); ++o) {
    std::vector<double> v(resamples);
    for (std::size_t b = 0; b < resamples; ++b) v[b] = draws[b][o];
    se[o] = std::sqrt(summarize(v).variance);
  }
  return se;
}

// Signed shifts med(T_lambda) - med(T_gauss), then |shift_i| - |shift_i+1|.
std::vector<double> shift_statistics(const std::vector<std::vector<double>>& series) {
  const std::size_t nl = series.size() - 1;
  const double g = median(series.back());
  std::vector<double> out(nl);
  for (std::size_t i = 0; i < nl; ++i) out[i] = median(series[i]) - g;
  for (std::size_t i = 0; i + 1 < nl; ++i) out.push_back(std::fabs(out[i]) - std::fabs(out[i + 1]));
  return out;
}

std::vector<ReportRow> lc_sweep(const ExperimentConfig& cfg) {
  const RowFactory rf{cfg};
  const AnyKernel k = cfg.kernel.build();
  std::vector<ReportRow> rows;
  for (std::size_t b = 0; b < cfg.boxes.size(); ++b) {
    const double box = cfg.boxes[b];
    const ModelSpec gm = gaussian_model(cfg, k);
    const CriticalLevelEstimate g =
        estimate_critical_level(gm, box, cfg.replicas, cfg.tol, derive_seed(cfg.seed, 100 * b + 99), cfg.threads);
    ReportRow gr = rf.make("critical_level_gaussian", g.level);
    gr.box = box;
    gr.epsilon = gm.spacing;
    gr.std_error = g.std_error;
    rows.push_back(gr);
    std::vector<double> levels;
    for (std::size_t i = 0; i < cfg.lambdas.size(); ++i) {
      const double lambda = cfg.lambdas[i];
      const ModelSpec sm = shot_model(cfg, k, lambda);
      const CriticalLevelEstimate e =
          estimate_critical_level(sm, box, cfg.replicas, cfg.tol, derive_seed(cfg.seed, 100 * b + i), cfg.threads);
      auto add = [&](const std::string& name, double v, std::optional<double> se) {
        ReportRow r = rf.make(name, v);
        r.lambda = lambda;
        r.box = box;
        r.epsilon = sm.spacing;
        r.std_error = se;
        rows.push_back(r);
      };
      add("critical_level", e.level, e.std_error);
      add("abs_critical_level", std::fabs(e.level), e.std_error);
      add("bracket_lo", e.bracket_lo, std::nullopt);
      add("bracket_hi", e.bracket_hi, std::nullopt);
      levels.push_back(std::fabs(e.level));
    }
    const std::size_t first = std::min_element(cfg.lambdas.begin(), cfg.lambdas.end()) - cfg.lambdas.begin();
    const double constant = levels[first] / critical_level_rate(cfg.lambdas[first]);
    ReportRow c = rf.make("rate_constant", constant);
    c.box = box;
    rows.push_back(c);
    for (double lambda : cfg.lambdas) {
      ReportRow r = rf.make("rate_bound", constant * critical_level_rate(lambda));
      r.lambda = lambda;
      r.box = box;
      rows.push_back(r);
    }

    // The same surrogate measured against the coupled Gaussian field. The Gaussian side is
    // shared by every lambda, which pairs the estimates and cancels the finite-box offset
    // of the Gaussian level.
    const std::uint64_t cseed = derive_seed(cfg.seed, 100 * b + 98);
    const CoupledThresholds ct = coupled_thresholds(k, cfg.lambdas, box, gm.spacing, gm.pad, cfg.depth.value_or(0),
                                                    cfg.replicas, cseed, cfg.threads);
    std::vector<std::vector<double>> series = ct.shot;
    series.push_back(ct.gauss);
    const std::vector<double> stats = shift_statistics(series);
    const std::vector<double> se = paired_bootstrap_se(series, shift_statistics, 400, derive_seed(cseed, 1), cfg.threads);
    const std::size_t nl = cfg.lambdas.size();
    auto add = [&](const std::string& name, double lambda, double v, std::optional<double> e) {
      ReportRow r = rf.make(name, v);
      r.lambda = lambda;
      r.box = box;
      r.epsilon = gm.spacing;
      r.std_error = e;
      rows.push_back(r);
    };
    for (std::size_t i = 0; i < nl; ++i) {
      add("critical_level_shift", cfg.lambdas[i], stats[i], se[i]);
      add("abs_critical_level_shift", cfg.lambdas[i], std::fabs(stats[i]), se[i]);
    }
    for (std::size_t i = 0; i + 1 < nl; ++i) {
      add("abs_shift_decrease", cfg.lambdas[i + 1], stats[nl + i], se[nl + i]);
    }
    const double shift_constant = std::fabs(stats[first]) / critical_level_rate(cfg.lambdas[first]);
    for (std::size_t i = 0; i < nl; ++i) {
      add("shift_rate_bound", cfg.lambdas[i], shift_constant * critical_level_rate(cfg.lambdas[i]), std::nullopt);
    }
  }
  return rows;
}

std::vector<ReportRow> threshold_curve(const ExperimentConfig& cfg) {
  const RowFactory rf{cfg};
  const AnyKernel k = cfg.kernel.build();
  std::vector<ReportRow> rows;
  const bool shot = cfg.field == "shot_noise";
  const std::vector<double> lambdas = shot ? cfg.lambdas : std::vector<double>{0.0};
  for (std::size_t b = 0; b < cfg.boxes.size(); ++b) {
    const double box = cfg.boxes[b];
    const BoxRegion square = BoxRegion::square(0.0, box);
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      ModelSpec model = shot ? shot_model(cfg, k, lambdas[i]) : gaussian_model(cfg, k);
      const std::uint64_t seed = derive_seed(cfg.seed, 100 * b + i);
      const auto t = crossing_thresholds(model, square, Orientation::left_right, cfg.replicas, seed, cfg.threads);
      ModelSpec fine = model;
      fine.spacing = 0.5 * model.spacing;
      const auto tf = crossing_thresholds(fine, square, Orientation::left_right, cfg.replicas,
                                          derive_seed(seed, 1), cfg.threads);
      for (double level : cfg.levels) {
        const CrossingEstimate e = estimate_from_thresholds(t, level, square, Orientation::left_right);
        const CrossingEstimate ef = estimate_from_thresholds(tf, level, square, Orientation::left_right);
        auto add = [&](const std::string& name, double v, double se, double eps) {
          ReportRow r = rf.make(name, v);
          if (shot) r.lambda = lambdas[i];
          r.box = box;
          r.level = level;
          r.epsilon = eps;
          r.std_error = se;
          rows.push_back(r);
        };
        add("p_cross", e.p, e.std_error, model.spacing);
        add("p_cross_half_eps", ef.p, ef.std_error, fine.spacing);
      }
    }
  }
  return rows;
}

std::vector<ReportRow> sprinkle(const ExperimentConfig& cfg) {
  const RowFactory rf{cfg};
  const AnyKernel k = cfg.kernel.build();
  std::vector<ReportRow> rows;
  std::uint64_t point = 0;
  for (double lambda : cfg.lambdas) {
    const ModelSpec model = shot_model(cfg, k, lambda);
    for (double box : cfg.boxes) {
      const double h = cfg.sprinkle.value_or(default_sprinkle(k, box));
      for (double level : cfg.levels) {
        const std::uint64_t seed = derive_seed(cfg.seed, point++);
        const SprinkleReport s = sprinkling_check(model, box, level, h, cfg.replicas, seed, false, cfg.threads);
        const SprinkleReport ind = sprinkling_check(model, box, level, 0.0, cfg.replicas, seed, true, cfg.threads);
        auto add = [&](const std::string& name, double v, std::optional<double> se) {
          ReportRow r = rf.make(name, v);
          r.lambda = lambda;
          r.box = box;
          r.level = level;
          r.epsilon = model.spacing;
          r.std_error = se;
          rows.push_back(r);
        };
        add("sprinkle", h, std::nullopt);
        add("p_a_sprinkled", s.p_a, std::nullopt);
        add("p_b_sprinkled", s.p_b, std::nullopt);
        add("p_ab", s.p_ab, std::nullopt);
        add("slack", s.slack, s.std_error);
        add("slack_independent_h0", ind.slack, ind.std_error);
      }
    }
  }
  return rows;
}

std::vector<ReportRow> kesten(const ExperimentConfig& cfg) {
  const RowFactory rf{cfg};
  const AnyKernel k = cfg.kernel.build();
  std::vector<ReportRow> rows;
  std::uint64_t point = 0;
  for (double lambda : cfg.lambdas) {
    const ModelSpec model = shot_model(cfg, k, lambda);
    for (double box : cfg.boxes) {
      const double h = cfg.sprinkle.value_or(default_sprinkle(k, box));
      for (double level : cfg.levels) {
        const KestenReport rep =
            kesten_check(model, box, level, h, cfg.replicas, derive_seed(cfg.seed, point++), cfg.threads);
        auto add = [&](const std::string& name, double v, std::optional<double> se) {
          ReportRow r = rf.make(name, v);
          r.lambda = lambda;
          r.box = box;
          r.level = level;
          r.epsilon = model.spacing;
          r.std_error = se;
          rows.push_back(r);
        };
        add("sprinkle", h, std::nullopt);
        add("pairs", static_cast<double>(rep.pairs), std::nullopt);
        add("min_pair_distance", rep.min_pair_distance, std::nullopt);
        add("inclusion_violations", static_cast<double>(rep.inclusion_violations), std::nullopt);
        add("p_master", rep.p_master, std::nullopt);
        add("max_pair_product", rep.max_pair_product, std::nullopt);
        add("rhs_49", rep.rhs_49, std::nullopt);
        add("rhs_pairs", rep.rhs_pairs, std::nullopt);
        add("margin_49", rep.margin, rep.std_error);
      }
    }
  }
  return rows;
}

std::vector<ReportRow> duality_audit(const ExperimentConfig& cfg) {
  const RowFactory rf{cfg};
  const AnyKernel k = cfg.kernel.build();
  const double box = cfg.boxes.front();
  const ModelSpec model = cfg.field == "shot_noise" ? shot_model(cfg, k, cfg.lambdas.front()) : gaussian_model(cfg, k);
  const DualityCounts masks = audit_random_masks(cfg.masks, derive_seed(cfg.seed, 0));
  const DualityCounts fields = audit_fields(model, box, cfg.replicas, derive_seed(cfg.seed, 1), cfg.threads);
  std::vector<ReportRow> rows;
  ReportRow a = rf.make("mask_checks", static_cast<double>(masks.checks));
  a.replicas = cfg.masks;
  rows.push_back(a);
  ReportRow b = rf.make("mask_violations", static_cast<double>(masks.violations));
  b.replicas = cfg.masks;
  rows.push_back(b);
  ReportRow c = rf.make("field_checks", static_cast<double>(fields.checks));
  c.box = box;
  c.epsilon = model.spacing;
  rows.push_back(c);
  ReportRow d = rf.make("field_violations", static_cast<double>(fields.violations));
  d.box = box;
  d.epsilon = model.spacing;
  rows.push_back(d);
  return rows;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) {
  return mix64(seed ^ mix64(k + 0x2545f4914f6cdd1dULL));
}

std::vector<double> sample_origin_values(const AnyKernel& k, double lambda, double radius,
                                         std::size_t n, std::uint64_t seed, int threads) {
  if (!(lambda > 0.0) || !(radius > 0.0)) throw InvalidArgument("need lambda > 0 and radius > 0");
  const int d = kernel_dimension(k);
  const auto g = fast_profile(k);
  const double compensator = lambda * ball_integral(k, radius);
  const double volume = std::pow(2.0 * radius, d);
  const double r2 = radius * radius;
  const double scale = 1.0 / std::sqrt(lambda);
  std::vector<double> out(n);
  parallel_for(n, threads, [&](std::size_t i) {
    RngStream rng(seed, i, 0, StreamPurpose::points);
    const std::uint64_t count = rng.poisson(lambda * volume);
    double sum = 0.0;
    for (std::uint64_t p = 0; p < count; ++p) {
      double s = 0.0;
      for (int a = 0; a < d; ++a) {
        const double x = radius * (2.0 * rng.uniform() - 1.0);
        s += x * x;
      }
      if (s <= r2) sum += g(s);
    }
    out[i] = (sum - compensator) * scale;
  });
  return out;
}

CouplingErrors coupling_errors(const AnyKernel& k, double lambda, double radius, double spacing,
                               double pad, int m, std::size_t n, std::uint64_t seed, int threads) {
  const int d = kernel_dimension(k);
  const FieldCoupler coupler(k, GridSpec(cube(d, -radius, radius), spacing), pad, lambda, m);
  const auto sites = ball_sites(coupler.grid(), radius);
  CouplingErrors out{std::vector<double>(n), std::vector<double>(n)};
  parallel_for(n, threads, [&](std::size_t r) {
    const CoupledFieldPair pair = coupler.sample(seed, r);
    RngStream rng(seed, r, 0, StreamPurpose::white_noise);
    const GridField indep = coupler.independent_gaussian(rng);
    out.coupled[r] = sup_over(sites, pair.shot, pair.gauss);
    out.independent[r] = sup_over(sites, pair.shot, indep);
  });
  return out;
}

TruncationErrors truncation_errors(const AnyKernel& k, double lambda, double range, double spacing,
                                   double pad, std::size_t n, std::uint64_t seed, int threads) {
  const Kernel& base = std::holds_alternative<Kernel>(k) ? std::get<Kernel>(k)
                                                          : std::get<TruncatedKernel>(k).base();
  const int d = base.dimension();
  const BoxRegion unit = cube(d, 0.0, 1.0);
  const GridSpec grid(unit, spacing);
  const Synthesizer full(base, MultiIndex::zero(), grid, pad);
  const Synthesizer cut(TruncatedKernel(base, range), MultiIndex::zero(), grid, pad);
  TruncationErrors out{std::vector<double>(n), std::vector<double>(n)};
  parallel_for(n, threads, [&](std::size_t r) {
    RngStream pts(seed, r, 0, StreamPurpose::points);
    const PointConfiguration config = sample_poisson(full.padded_region(), lambda, pts);
    const auto w = full.poisson_weights(config);
    out.shot[r] = sup_norm_diff(full.render(w, full.shot_label(lambda)), cut.render(w, cut.shot_label(lambda)), unit);
    RngStream wn(seed, r, 0, StreamPurpose::white_noise);
    const auto v = full.white_noise_weights(wn);
    out.gauss[r] = sup_norm_diff(full.render(v, full.gaussian_label()), cut.render(v, cut.gaussian_label()), unit);
  });
  return out;
}

DualityCounts audit_random_masks(std::size_t n_masks, std::uint64_t seed) {
  DualityCounts c;
  for (std::size_t i = 0; i < n_masks; ++i) {
    RngStream rng(seed, i, 0, StreamPurpose::mask);
    const std::size_t rows = 1 + static_cast<std::size_t>(rng.uniform() * 40.0);
    const std::size_t cols = 1 + static_cast<std::size_t>(rng.uniform() * 40.0);
    const double density = rng.uniform();
    std::vector<std::uint8_t> mask(rows * cols);
    for (auto& b : mask) b = rng.uniform() < density ? 1 : 0;
    for (Orientation o : {Orientation::left_right, Orientation::top_bottom}) {
      const Orientation other = o == Orientation::left_right ? Orientation::top_bottom : Orientation::left_right;
      const bool primal = crossing_mask(mask, rows, cols, o, Connectivity::primal);
      const bool dual = crossing_mask(mask, rows, cols, other, Connectivity::dual);
      ++c.checks;
      if (primal == dual) ++c.violations;
    }
  }
  return c;
}

DualityCounts audit_fields(const ModelSpec& model, double box, std::size_t n_fields,
                           std::uint64_t seed, int threads) {
  const BoxRegion square = BoxRegion::square(0.0, box);
  const FieldModel fm(model, square);
  const double sd = std::sqrt(fm.variance());
  std::vector<std::size_t> bad(n_fields, 0);
  parallel_for(n_fields, threads, [&](std::size_t r) {
    const GridField f = fm.sample(seed, r);
    RngStream rng(seed, r, 0, StreamPurpose::auxiliary);
    const double level = model.shift + 0.5 * sd * rng.normal();
    const ExcursionSet ex = excursion(f, level);
    for (Orientation o : {Orientation::left_right, Orientation::top_bottom}) {
      const Orientation other = o == Orientation::left_right ? Orientation::top_bottom : Orientation::left_right;
      if (crossing(ex, square, o, Connectivity::primal) == crossing(ex, square, other, Connectivity::dual)) {
        ++bad[r];
      }
    }
  });
  DualityCounts c;
  c.checks = 2 * n_fields;
  for (std::size_t b : bad) c.violations += b;
  return c;
}

CoupledThresholds coupled_thresholds(const AnyKernel& k, const std::vector<double>& lambdas, double box,
                                     double spacing, double pad, int depth, std::size_t n, std::uint64_t seed,
                                     int threads) {
  const BoxRegion square = BoxRegion::square(0.0, box);
  const GridSpec grid(square, spacing);
  std::vector<FieldCoupler> couplers;
  for (double lambda : lambdas) {
    couplers.emplace_back(k, grid, pad, lambda, depth > 0 ? depth : default_coupling_depth(lambda));
  }
  CoupledThresholds out;
  out.shot.assign(lambdas.size(), std::vector<double>(n));
  out.gauss.resize(n);
  parallel_for(n, threads, [&](std::size_t r) {
    for (std::size_t i = 0; i < couplers.size(); ++i) {
      const CoupledFieldPair p = couplers[i].sample(seed, r);
      out.shot[i][r] = crossing_threshold(p.shot, square, Orientation::left_right);
      if (i == 0) out.gauss[r] = crossing_threshold(p.gauss, square, Orientation::left_right);
    }
  });
  return out;
}

double critical_level_rate(double lambda) {
  return std::pow(lambda, -0.5) * std::pow(std::log(lambda), 1.5);
}

double default_sprinkle(const AnyKernel& k, double box) {
  return std::pow(box, -(decay_exponent(k) - 2.0) / 2.0);
}

std::vector<ReportRow> run_experiment_rows(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case ExperimentKind::marginal_clt:
      return marginal_clt(cfg);
    case ExperimentKind::coupling_rate:
      return coupling_rate(cfg);
    case ExperimentKind::truncation_rate:
      return truncation_rate(cfg);
    case ExperimentKind::c1_tails:
      return c1_tails(cfg);
    case ExperimentKind::lc_sweep:
      return lc_sweep(cfg);
    case ExperimentKind::threshold_curve:
      return threshold_curve(cfg);
    case ExperimentKind::sprinkle:
      return sprinkle(cfg);
    case ExperimentKind::kesten:
      return kesten(cfg);
    case ExperimentKind::duality_audit:
      return duality_audit(cfg);
  }
  throw InvalidArgument("unknown experiment");
}

std::string render_report(const ExperimentConfig& cfg, const std::vector<ReportRow>& rows,
                          double wall_seconds) {
  std::vector<std::string> meta{"shotperc report", "version = " + version_string()};
  for (const auto& line : config_echo(cfg)) meta.push_back("config: " + line);
  char buf[64];
  std::snprintf(buf, sizeof buf, "wall_time_s = %.3f", wall_seconds);
  meta.emplace_back(buf);
  return format_csv(rows, meta);
}

void run_experiment(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const auto rows = run_experiment_rows(cfg);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_atomic(cfg.output, render_report(cfg, rows, wall));
}

}  // namespace shotperc
