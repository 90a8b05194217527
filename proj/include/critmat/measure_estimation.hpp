#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "critmat/histogram.hpp"
#include "critmat/simulator.hpp"

namespace critmat {

class MeasureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Occupation histogram of X_1..X_n over `trajectories` runs from x0 (run i
/// uses stream (seed, first_index + i)), merged. Throws MeasureError when the
/// reference window is never visited.
OccupationHistogram estimate_invariant_measure(const EnsembleSpec& spec, const ConePoint& x0,
                                               std::int64_t n_steps, const HistogramConfig& config,
                                               std::uint64_t seed, std::int64_t trajectories = 1,
                                               unsigned workers = 1,
                                               std::uint64_t first_index = 0);

struct TailOptions {
  std::vector<double> s_values{0.5, 2.0};
  double sandwich_a = 0.5;
  double sandwich_b = 2.0;
  std::uint64_t min_count = 100;  // an annulus is populated from this count on
  double ratio_lo = 0.7;
  double ratio_hi = 1.4;
};

struct AnnulusMass {
  double log2_lo;
  double log2_hi;
  std::uint64_t count;
  double mass;
  double stderr_;
};

struct TailPoint {
  double log2_t;
  double l_hat;                  // m(t K) with K the reference window
  std::vector<double> ratios;    // L(t s) / L(t) per s value
  double sandwich_mass;          // m{t a <= |x| <= t b}
  double sandwich_ratio;         // sandwich_mass / l_hat
};

struct TailReport {
  std::vector<AnnulusMass> annuli;  // populated radial bins
  std::vector<TailPoint> points;
  std::vector<double> cumulative_mass;  // mass up to the upper edge of each populated annulus
  double c_hat;
  bool slowly_varying;    // ratios within [ratio_lo, ratio_hi] over the upper half of the grid
  bool sandwich_lower_ok; // L(t) <= m{t a <= |x| <= t b} on the grid
  bool sandwich_stable;   // sandwich ratio within a factor 2 over the upper half of the grid
  bool mass_increasing;
  bool unbounded_trend;   // total populated mass >= 5 times the heaviest annulus
};

/// Annuli with count >= min_count.
std::vector<AnnulusMass> populated_annuli(const OccupationHistogram& hist, std::uint64_t min_count);

/// t_grid holds log2 t values; when empty, every t = 2^k for which t K lies
/// inside the populated range is used.
TailReport tail_diagnostics(const OccupationHistogram& hist, std::vector<double> log2_t_grid = {},
                            const TailOptions& options = {});

/// Total variation between two histograms restricted to radii in
/// [2^log2_lo, 2^log2_hi) and renormalized to probabilities.
double restricted_tv(const OccupationHistogram& p, const OccupationHistogram& q, double log2_lo,
                     double log2_hi);

struct UniquenessResult {
  std::vector<std::vector<double>> tv;
  bool pass;
  std::vector<OccupationHistogram> histograms;  // run order: x0 major, seed minor
};

UniquenessResult uniqueness_check(const EnsembleSpec& spec, const std::vector<ConePoint>& x0_list,
                                  const std::vector<std::uint64_t>& seeds, std::int64_t n_steps,
                                  const HistogramConfig& config, unsigned workers = 1,
                                  double window_log2 = 3.0, double tol = 0.1);

}  // namespace critmat
