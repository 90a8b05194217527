#pragma once

#include <cstdint>
#include <string>

#include "critmat/ensemble.hpp"

namespace critmat {

enum class A2Verdict { pass, degenerate_suspected, inconclusive };

const char* to_string(A2Verdict v) noexcept;

struct HypothesisReport {
  double a1_sample_moment;   // mean of (ln n(A))^(2+delta)
  double a1_hill_index;      // Hill tail index over the top 1% of ln n(A), advisory
  bool a3_pass;
  double a3_min_margin;      // smallest delta*(A) seen
  double a4_gamma_hat;
  double a4_ci_half_width;
  bool a4_pass;
  double a5_fraction;
  bool a5_pass;
  double b_nonzero_prob;
  double b_log_moment;       // mean of (ln+ |B|)^(2+delta)
  A2Verdict a2;
  double a2_min_spectral_radius;  // rho(P)^(1/len) over sampled products P
  double a2_max_spectral_radius;
  std::string a2_note;

  bool all_pass() const noexcept;
};

struct HypothesisOptions {
  std::int64_t lyapunov_n = 10'000;
  std::int64_t lyapunov_reps = 100;
  double a4_tol = 1e-3;
  int max_product_length = 50;
  int product_trials = 500;
  unsigned workers = 1;
};

/// Spectral radius of a nonnegative matrix by power iteration.
double spectral_radius(const ConeMatrix& a);

HypothesisReport check_hypotheses(const EnsembleSpec& spec, std::int64_t samples,
                                  std::uint64_t seed, const HypothesisOptions& options = {});

}  // namespace critmat
