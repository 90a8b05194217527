#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "critmat/simulator.hpp"

namespace critmat {

struct SurvivalCurve {
  StopMode mode;
  double a;
  std::optional<ConePoint> x;
  std::vector<std::int64_t> grid;
  std::vector<double> survival;  // P(tau > n)
  std::vector<double> stderr_;   // sqrt(p (1 - p) / reps)
  std::int64_t reps;
  std::int64_t cap;
  double censored_fraction;
};

/// Grid of about `per_decade` log-spaced integers from 1 to n_max.
std::vector<std::int64_t> log_grid(std::int64_t n_max, int per_decade = 10);

/// Rep r uses stream (seed, r); vector and norm curves built from the same
/// seed therefore share their draws. The cap defaults to the last grid point.
SurvivalCurve survival_curve(const EnsembleSpec& spec, StopMode mode, double a,
                             const std::optional<ConePoint>& x, std::vector<std::int64_t> grid,
                             std::int64_t reps, std::uint64_t seed, unsigned workers = 1,
                             std::optional<std::int64_t> cap = std::nullopt);

/// Survival curve assembled from stopping times.
SurvivalCurve curve_from_times(StopMode mode, double a, std::vector<std::int64_t> grid,
                               const std::vector<StoppingTime>& times, std::int64_t cap);

struct TailFit {
  double slope;
  double intercept;
  double kappa_hat;  // max over the grid of P(tau > n) sqrt(n) / (1 + ln a)
  std::size_t points;
  bool voided;       // censored fraction above 20%
  std::string warning;
};

TailFit sqrt_tail_fit(const SurvivalCurve& curve, double fit_lo = 1e2, double fit_hi = 1e4);

/// max / min <= 2 over the supplied constants.
bool envelope_stable(const std::vector<double>& kappas, double factor = 2.0);

struct CltResult {
  double mean_norm;  // mean of ln ||A_{n,1}|| / sqrt(n)
  double var_hat;
  double ks_stat;    // distance to N(0, var_hat)
  bool mean_pass;    // |mean| <= 3 sqrt(var / reps)
  bool degenerate;
  bool criticality_warning;
  std::vector<double> samples;
};

CltResult clt_check(const EnsembleSpec& spec, std::int64_t n, std::int64_t reps,
                    std::uint64_t seed, unsigned workers = 1);

}  // namespace critmat
