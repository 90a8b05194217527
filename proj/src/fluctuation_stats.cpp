#include "critmat/fluctuation_stats.hpp"

#include <algorithm>
#include <cmath>

#include "critmat/parallel.hpp"
#include "critmat/statistics.hpp"

namespace critmat {

std::vector<std::int64_t> log_grid(std::int64_t n_max, int per_decade) {
  if (n_max < 1) throw std::invalid_argument("grid needs n_max >= 1");
  std::vector<std::int64_t> g;
  const double decades = std::log10(static_cast<double>(n_max));
  const int points = static_cast<int>(std::ceil(decades * per_decade));
  for (int i = 0; i <= points; ++i) {
    const auto v = static_cast<std::int64_t>(
        std::llround(std::pow(10.0, static_cast<double>(i) / per_decade)));
    const std::int64_t c = std::min(v, n_max);
    if (g.empty() || c > g.back()) g.push_back(c);
  }
  if (g.back() != n_max) g.push_back(n_max);
  return g;
}

SurvivalCurve curve_from_times(StopMode mode, double a, std::vector<std::int64_t> grid,
                               const std::vector<StoppingTime>& times, std::int64_t cap) {
  if (times.empty()) throw std::invalid_argument("survival curve needs at least one path");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  SurvivalCurve c{mode, a, std::nullopt, {}, {}, {}, static_cast<std::int64_t>(times.size()), cap,
                  0.0};
  std::int64_t censored = 0;
  for (const auto& t : times) censored += t.censored ? 1 : 0;
  c.censored_fraction = static_cast<double>(censored) / static_cast<double>(times.size());
  std::vector<std::int64_t> sorted;
  for (const auto& t : times) sorted.push_back(t.censored ? cap + 1 : t.value);
  std::sort(sorted.begin(), sorted.end());
  const double reps = static_cast<double>(times.size());
  for (std::int64_t n : grid) {
    if (n > cap) break;  // beyond the cap nothing is observed
    const auto alive = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), n);
    const double p = static_cast<double>(alive) / reps;
    c.grid.push_back(n);
    c.survival.push_back(p);
    c.stderr_.push_back(std::sqrt(p * (1.0 - p) / reps));
  }
  return c;
}

SurvivalCurve survival_curve(const EnsembleSpec& spec, StopMode mode, double a,
                             const std::optional<ConePoint>& x, std::vector<std::int64_t> grid,
                             std::int64_t reps, std::uint64_t seed, unsigned workers,
                             std::optional<std::int64_t> cap) {
  if (!(a >= 1.0)) throw std::invalid_argument("a must be >= 1");
  if (reps < 1) throw std::invalid_argument("reps must be positive");
  if (grid.empty()) throw std::invalid_argument("grid must not be empty");
  const std::int64_t c = cap ? *cap : *std::max_element(grid.begin(), grid.end());
  std::vector<StoppingTime> times(static_cast<std::size_t>(reps));
  parallel_for(times.size(), workers, [&](std::size_t r) {
    times[r] = stopping_time(spec, mode, a, c, seed, r, x);
  });
  SurvivalCurve curve = curve_from_times(mode, a, std::move(grid), times, c);
  curve.x = x;
  return curve;
}

TailFit sqrt_tail_fit(const SurvivalCurve& curve, double fit_lo, double fit_hi) {
  // every value 0 or 1 means a deterministic stopping time
  const bool degenerate = std::all_of(curve.survival.begin(), curve.survival.end(),
                                      [](double p) { return p == 0.0 || p == 1.0; });
  if (curve.survival.empty() || degenerate) {
    throw std::invalid_argument("degenerate survival curve (all values 0 or 1)");
  }
  TailFit fit{};
  const double la = 1.0 + std::log(curve.a);
  fit.kappa_hat = 0.0;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    const double n = static_cast<double>(curve.grid[i]);
    const double p = curve.survival[i];
    fit.kappa_hat = std::max(fit.kappa_hat, p * std::sqrt(n) / la);
    if (n >= fit_lo && n <= fit_hi && p > 0.0) {
      lx.push_back(std::log(n));
      ly.push_back(std::log(p));
    }
  }
  fit.points = lx.size();
  if (lx.size() < 2) throw std::invalid_argument("fewer than two positive points in the fit range");
  const LineFit lf = least_squares(lx, ly);
  fit.slope = lf.slope;
  fit.intercept = lf.intercept;
  if (curve.censored_fraction > 0.2) {
    fit.voided = true;
    fit.warning = "censored fraction above 20%; fit voided";
  }
  return fit;
}

bool envelope_stable(const std::vector<double>& kappas, double factor) {
  if (kappas.empty()) return false;
  const auto [lo, hi] = std::minmax_element(kappas.begin(), kappas.end());
  if (!std::isfinite(*hi) || !(*lo > 0.0)) return false;
  return *hi / *lo <= factor;
}

CltResult clt_check(const EnsembleSpec& spec, std::int64_t n, std::int64_t reps,
                    std::uint64_t seed, unsigned workers) {
  if (n < 1 || reps < 2) throw std::invalid_argument("clt_check needs n >= 1 and reps >= 2");
  std::vector<double> samples(static_cast<std::size_t>(reps));
  const double root = std::sqrt(static_cast<double>(n));
  parallel_for(samples.size(), workers, [&](std::size_t r) {
    RandomStream rng(seed, r, StreamTag::main);
    EnsembleSampler sampler(spec);
    ProductBundle p(spec.dim());
    for (std::int64_t k = 0; k < n; ++k) p.left_multiply(sampler.draw(rng).a);
    samples[r] = p.log_norm() / root;
  });
  CltResult res{};
  res.mean_norm = mean(samples);
  res.var_hat = sample_variance(samples);
  const double se = std::sqrt(res.var_hat / static_cast<double>(reps));
  res.degenerate = res.var_hat <= 1e-24 * std::max(1.0, res.mean_norm * res.mean_norm);
  res.mean_pass = std::abs(res.mean_norm) <= 3.0 * se + 1e-12;
  res.criticality_warning = !res.mean_pass;
  if (res.degenerate) {
    res.ks_stat = NAN;
  } else {
    const double sd = std::sqrt(res.var_hat);
    res.ks_stat = ks_one_sample(samples, [sd](double v) { return normal_cdf(v / sd); });
  }
  res.samples = std::move(samples);
  return res;
}

}  // namespace critmat
