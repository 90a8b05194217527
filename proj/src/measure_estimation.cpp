#include "critmat/measure_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "critmat/parallel.hpp"

namespace critmat {

OccupationHistogram estimate_invariant_measure(const EnsembleSpec& spec, const ConePoint& x0,
                                               std::int64_t n_steps, const HistogramConfig& config,
                                               std::uint64_t seed, std::int64_t trajectories,
                                               unsigned workers, std::uint64_t first_index) {
  if (n_steps < 100'000) throw std::invalid_argument("invariant measure needs n_steps >= 1e5");
  if (trajectories < 1) throw std::invalid_argument("need at least one trajectory");
  ObserverSet obs;
  obs.occupation = true;
  ObserverOptions opt;
  opt.histogram = config;
  std::vector<std::optional<OccupationHistogram>> parts(static_cast<std::size_t>(trajectories));
  parallel_for(parts.size(), workers, [&](std::size_t i) {
    parts[i] = std::move(
        *run_trajectory(spec, x0, n_steps, obs, seed, first_index + i, opt).occupation);
  });
  OccupationHistogram h = std::move(*parts[0]);
  for (std::size_t i = 1; i < parts.size(); ++i) h.merge(*parts[i]);
  if (h.ref_count() == 0) {
    throw MeasureError("reference window 1/R <= |x| < R with R = " +
                       std::to_string(config.ref_radius) +
                       " was never visited; use a larger window or more steps");
  }
  return h;
}

std::vector<AnnulusMass> populated_annuli(const OccupationHistogram& hist,
                                          std::uint64_t min_count) {
  std::vector<AnnulusMass> out;
  for (const auto& r : hist.radial_rows()) {
    if (r.count >= min_count) out.push_back({r.log2_lo, r.log2_hi, r.count, r.normalized_mass,
                                             r.stderr_});
  }
  return out;
}

TailReport tail_diagnostics(const OccupationHistogram& hist, std::vector<double> log2_t_grid,
                            const TailOptions& options) {
  if (hist.ref_count() == 0) throw MeasureError("histogram has an empty reference window");
  TailReport rep{};
  rep.annuli = populated_annuli(hist, options.min_count);
  if (rep.annuli.empty()) throw std::invalid_argument("empty tail region: no populated annulus");
  if (rep.annuli.size() < 10) {
    throw std::invalid_argument("tail diagnostics need at least 10 populated annuli, got " +
                                std::to_string(rep.annuli.size()));
  }
  const double r = std::log2(hist.config().ref_radius);
  const double la = std::log2(options.sandwich_a), lb = std::log2(options.sandwich_b);
  const double pop_lo = rep.annuli.front().log2_lo, pop_hi = rep.annuli.back().log2_hi;

  if (log2_t_grid.empty()) {
    double reach_lo = -r, reach_hi = r;
    for (double s : options.s_values) {
      reach_lo = std::min(reach_lo, std::log2(s) - r);
      reach_hi = std::max(reach_hi, std::log2(s) + r);
    }
    reach_lo = std::min(reach_lo, la);
    reach_hi = std::max(reach_hi, lb);
    for (auto k = static_cast<std::int64_t>(std::ceil(pop_lo - reach_lo));
         static_cast<double>(k) + reach_hi <= pop_hi; ++k) {
      log2_t_grid.push_back(static_cast<double>(k));
    }
  }
  if (log2_t_grid.empty()) throw std::invalid_argument("empty tail region: no usable t values");

  for (double lt : log2_t_grid) {
    TailPoint p{};
    p.log2_t = lt;
    p.l_hat = hist.mass_between(lt - r, lt + r);
    for (double s : options.s_values) {
      const double ls = lt + std::log2(s);
      const double l = hist.mass_between(ls - r, ls + r);
      p.ratios.push_back(p.l_hat > 0.0 ? l / p.l_hat : INFINITY);
    }
    p.sandwich_mass = hist.mass_between(lt + la, lt + lb);
    p.sandwich_ratio = p.l_hat > 0.0 ? p.sandwich_mass / p.l_hat : INFINITY;
    rep.points.push_back(std::move(p));
  }

  const std::size_t upper = rep.points.size() / 2;
  rep.slowly_varying = true;
  rep.sandwich_lower_ok = true;
  rep.c_hat = 0.0;
  double smin = INFINITY, smax = 0.0;
  for (std::size_t i = 0; i < rep.points.size(); ++i) {
    const auto& p = rep.points[i];
    rep.c_hat = std::max(rep.c_hat, p.sandwich_ratio);
    if (!leq_rel(p.l_hat, p.sandwich_mass)) rep.sandwich_lower_ok = false;
    if (i < upper) continue;
    for (double q : p.ratios) {
      if (!(q >= options.ratio_lo && q <= options.ratio_hi)) rep.slowly_varying = false;
    }
    smin = std::min(smin, p.sandwich_ratio);
    smax = std::max(smax, p.sandwich_ratio);
  }
  rep.sandwich_stable = std::isfinite(smax) && smin > 0.0 && smax / smin <= 2.0;

  double cum = 0.0;
  std::size_t next = 0;
  for (const auto& row : hist.radial_rows()) {
    cum += row.normalized_mass;
    if (next < rep.annuli.size() && row.log2_lo == rep.annuli[next].log2_lo) {
      rep.cumulative_mass.push_back(cum);
      ++next;
    }
  }
  rep.mass_increasing = true;
  for (std::size_t i = 1; i < rep.cumulative_mass.size(); ++i) {
    if (!(rep.cumulative_mass[i] > rep.cumulative_mass[i - 1])) rep.mass_increasing = false;
  }
  double total = 0.0, peak = 0.0;
  for (const auto& a : rep.annuli) {
    total += a.mass;
    peak = std::max(peak, a.mass);
  }
  rep.unbounded_trend = peak > 0.0 && total / peak >= 5.0;
  return rep;
}

double restricted_tv(const OccupationHistogram& p, const OccupationHistogram& q, double log2_lo,
                     double log2_hi) {
  if (p.dim() != q.dim() || !(p.config() == q.config())) {
    throw std::invalid_argument("histograms have different layouts");
  }
  std::map<std::pair<double, int>, std::pair<double, double>> joint;
  double tp = 0.0, tq = 0.0;
  for (const auto& r : p.rows()) {
    if (r.log2_lo >= log2_lo && r.log2_hi <= log2_hi) {
      joint[{r.log2_lo, r.cell}].first += static_cast<double>(r.count);
      tp += static_cast<double>(r.count);
    }
  }
  for (const auto& r : q.rows()) {
    if (r.log2_lo >= log2_lo && r.log2_hi <= log2_hi) {
      joint[{r.log2_lo, r.cell}].second += static_cast<double>(r.count);
      tq += static_cast<double>(r.count);
    }
  }
  if (tp == 0.0 || tq == 0.0) throw MeasureError("a histogram has no mass in the common window");
  double tv = 0.0;
  for (const auto& [k, v] : joint) tv += std::abs(v.first / tp - v.second / tq);
  return 0.5 * tv;
}

UniquenessResult uniqueness_check(const EnsembleSpec& spec, const std::vector<ConePoint>& x0_list,
                                  const std::vector<std::uint64_t>& seeds, std::int64_t n_steps,
                                  const HistogramConfig& config, unsigned workers,
                                  double window_log2, double tol) {
  if (x0_list.size() < 2) throw std::invalid_argument("uniqueness check needs two starting points");
  if (seeds.empty()) throw std::invalid_argument("uniqueness check needs a seed");
  const std::size_t runs = x0_list.size() * seeds.size();
  std::vector<std::optional<OccupationHistogram>> hists(runs);
  parallel_for(runs, workers, [&](std::size_t i) {
    hists[i] = estimate_invariant_measure(spec, x0_list[i / seeds.size()], n_steps, config,
                                          seeds[i % seeds.size()]);
  });
  UniquenessResult res{};
  res.tv.assign(runs, std::vector<double>(runs, 0.0));
  res.pass = true;
  for (std::size_t i = 0; i < runs; ++i) {
    for (std::size_t j = i + 1; j < runs; ++j) {
      const double tv = restricted_tv(*hists[i], *hists[j], -window_log2, window_log2);
      res.tv[i][j] = res.tv[j][i] = tv;
      if (!(tv <= tol)) res.pass = false;
    }
  }
  for (auto& h : hists) res.histograms.push_back(std::move(*h));
  return res;
}

}  // namespace critmat
