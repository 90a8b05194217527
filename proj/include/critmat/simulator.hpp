#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "critmat/ensemble.hpp"
#include "critmat/histogram.hpp"
#include "critmat/projective_metric.hpp"
#include "critmat/scaled_vector.hpp"

namespace critmat {

/// X_n held as 2^e y with |y| in a fixed range, together with the columns of
/// the product A_{n,1}. log_radius() is u = ln |X_n| and direction() is w.
class TrajectoryState {
 public:
  explicit TrajectoryState(const ConePoint& x0, bool track_product = true);

  double log_radius() const noexcept { return x_.log_norm(); }  // -inf when X_n = 0
  std::optional<Direction> direction() const;
  ConePoint value() const;  // may overflow for extreme radii
  std::int64_t steps() const noexcept { return n_; }
  const ScaledVector& scaled() const noexcept { return x_; }

  bool tracks_product() const noexcept { return product_.has_value(); }
  double product_log_norm() const;
  double product_direction_diameter() const;
  const ProductBundle& product() const;

  /// X <- A X + B and A_{n,1} <- A A_{n,1}.
  void advance(const ConeMatrix& a, const ConePoint& b);

 private:
  ScaledVector x_;
  std::optional<ProductBundle> product_;
  std::int64_t n_ = 0;
};

TrajectoryState step(TrajectoryState state, const ConeMatrix& a, const ConePoint& b);

// ---- observers ----

struct ObserverSet {
  bool conservativity = false;
  bool contractivity = false;
  bool bernoulli = false;
  bool occupation = false;
};

/// Accepts "conservativity", "contractivity", "bernoulli" or "occupation".
void enable_observer(ObserverSet& set, std::string_view name);

struct ObserverOptions {
  std::optional<ConePoint> y0;      // contractivity partner, default 5 e_d
  std::optional<double> log_k;      // ln K, default ln(10 median |X|) over a pre-pass
  std::int64_t k_prepass = 1000;
  std::optional<double> epsilon;    // default: 25th percentile of |B| / ||A||
  std::vector<std::int64_t> checkpoints;  // default: powers of ten up to n
  HistogramConfig histogram;
};

struct Checkpoint {
  std::int64_t n;
  double running_min_log_norm;
  std::int64_t product_returns;  // #{k <= n : ||A_{k,1}|| <= 1}
  std::int64_t bernoulli_sum;    // sum_{k <= n} eps_k eta_k
};

struct ConservativityReport {
  double running_min_log_norm;
  std::int64_t product_returns;
};

struct ContractivityReport {
  double log_k;
  std::vector<double> first_half_log_diff;   // ln |X^x_n - X^y_n| at returns |X^x_n| <= K
  std::vector<double> second_half_log_diff;
  bool defined;      // both halves have returns
  double first_median;
  double second_median;
  bool decreased;
};

struct BernoulliReport {
  double epsilon;
  std::int64_t sum;
};

struct TrajectoryReport {
  std::int64_t steps;
  double final_log_norm;
  std::vector<Checkpoint> checkpoints;
  std::optional<ConservativityReport> conservativity;
  std::optional<ContractivityReport> contractivity;
  std::optional<BernoulliReport> bernoulli;
  std::optional<OccupationHistogram> occupation;
};

/// 25th percentile of |B| / ||A|| over `samples` draws of the pre-pass stream.
double default_epsilon(const EnsembleSpec& spec, std::uint64_t seed, std::int64_t samples = 10'000);

/// ln(10 median |X_n|) over a pre-pass of `steps` steps from x0.
double default_log_k(const EnsembleSpec& spec, const ConePoint& x0, std::uint64_t seed,
                     std::uint64_t index, std::int64_t steps);

/// Trajectory `index` of the experiment keyed by `seed`.
TrajectoryReport run_trajectory(const EnsembleSpec& spec, const ConePoint& x0, std::int64_t n,
                                const ObserverSet& observers, std::uint64_t seed,
                                std::uint64_t index, const ObserverOptions& options = {});

// ---- stopping times ----

enum class StopMode { vector, norm };

const char* to_string(StopMode m) noexcept;
StopMode parse_stop_mode(std::string_view s);

struct StoppingTime {
  std::int64_t value;  // the cap when censored
  bool censored;
};

/// tau^{x,a} (vector mode) or tau^a (norm mode): first n >= 1 with
/// a |A_{n,1} x| <= 1, respectively a ||A_{n,1}|| <= 1.
StoppingTime stopping_time(const EnsembleSpec& spec, StopMode mode, double a, std::int64_t cap,
                           std::uint64_t seed, std::uint64_t index,
                           const std::optional<ConePoint>& x = std::nullopt);

struct StoppingPair {
  StoppingTime vector_time;
  StoppingTime norm_time;
};

/// Both stopping times on one shared draw sequence.
StoppingPair stopping_pair(const EnsembleSpec& spec, const ConePoint& x, double a,
                           std::int64_t cap, std::uint64_t seed, std::uint64_t index);

// ---- ladder decomposition ----

class CapExceeded : public std::runtime_error {
 public:
  explicit CapExceeded(std::int64_t cap)
      : std::runtime_error("cap of " + std::to_string(cap) + " steps reached"), cap_(cap) {}
  std::int64_t cap() const noexcept { return cap_; }

 private:
  std::int64_t cap_;
};

struct LadderBlock {
  std::int64_t end;              // tau_l
  ConeMatrix a;                  // A~_l = A_{tau_l, tau_{l-1}+1}
  ScaledVector b;                // B~_l
  double log_norm_a;             // ln ||A~_l||
  double log1p_norm_b;           // ln(1 + |B~_l|)
};

struct LadderSample {
  double a;
  std::vector<std::int64_t> times;  // tau_0 = 0, tau_1, ...
  std::vector<LadderBlock> blocks;
  bool truncated;
  ScaledVector direct;              // X_{tau_K} from the direct recursion

  /// ln ||A~_k ... A~_1|| for k = 1..K, from the stored block matrices.
  std::vector<double> block_product_log_norms() const;
  /// |Horner(x0) - X_{tau_K}| / |X_{tau_K}|.
  double reconstruction_error(const ConePoint& x0) const;
};

LadderSample ladder_decomposition(const EnsembleSpec& spec, const ConePoint& x0, double a,
                                  std::int64_t k_max, std::int64_t cap, std::uint64_t seed,
                                  std::uint64_t index);

struct BlockMomentProbe {
  std::vector<double> running_mean;  // mean of ln(1 + |B~_l|) over l <= k
  double last_decade_drift;          // relative change over the last decade of blocks
  bool stable;                       // drift <= 10%
  bool truncated;
  std::string note;
};

/// Running mean of ln(1 + |B~_l|) along one long ladder sample.
BlockMomentProbe block_moment_probe(const EnsembleSpec& spec, const ConePoint& x0, double a,
                                    std::int64_t blocks, std::int64_t cap, std::uint64_t seed);

}  // namespace critmat
