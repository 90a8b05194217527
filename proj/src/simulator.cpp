#include "critmat/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "critmat/statistics.hpp"

namespace critmat {

TrajectoryState::TrajectoryState(const ConePoint& x0, bool track_product) : x_(x0.coords()) {
  if (track_product) product_.emplace(x0.dim());
}

std::optional<Direction> TrajectoryState::direction() const {
  if (x_.is_zero()) return std::nullopt;
  return Direction::normalize(x_.coords());
}

ConePoint TrajectoryState::value() const {
  auto v = x_.materialize();
  for (double& c : v) c = std::max(c, 0.0);
  return ConePoint(std::move(v));
}

const ProductBundle& TrajectoryState::product() const {
  if (!product_) throw std::logic_error("trajectory does not track the matrix product");
  return *product_;
}

double TrajectoryState::product_log_norm() const { return product().log_norm(); }

double TrajectoryState::product_direction_diameter() const {
  return product().direction_diameter();
}

void TrajectoryState::advance(const ConeMatrix& a, const ConePoint& b) {
  x_.apply_affine(a, b.coords());
  if (product_) product_->left_multiply(a);
  ++n_;
}

TrajectoryState step(TrajectoryState state, const ConeMatrix& a, const ConePoint& b) {
  state.advance(a, b);
  return state;
}

void enable_observer(ObserverSet& set, std::string_view name) {
  if (name == "conservativity") {
    set.conservativity = true;
  } else if (name == "contractivity") {
    set.contractivity = true;
  } else if (name == "bernoulli") {
    set.bernoulli = true;
  } else if (name == "occupation") {
    set.occupation = true;
  } else {
    throw std::invalid_argument("unknown observer '" + std::string(name) + "'");
  }
}

double default_epsilon(const EnsembleSpec& spec, std::uint64_t seed, std::int64_t samples) {
  RandomStream rng(seed, 0, StreamTag::bernoulli_prepass);
  EnsembleSampler sampler(spec);
  std::vector<double> ratios;
  ratios.reserve(static_cast<std::size_t>(samples));
  for (std::int64_t k = 0; k < samples; ++k) {
    const auto d = sampler.draw(rng);
    ratios.push_back(d.b.norm() / d.a.col_max());
  }
  return quantile(std::move(ratios), 0.25);
}

double default_log_k(const EnsembleSpec& spec, const ConePoint& x0, std::uint64_t seed,
                     std::uint64_t index, std::int64_t steps) {
  RandomStream rng(seed, index, StreamTag::paired_prepass);
  EnsembleSampler sampler(spec);
  ScaledVector x(x0.coords());
  std::vector<double> logs;
  logs.reserve(static_cast<std::size_t>(steps));
  for (std::int64_t k = 0; k < steps; ++k) {
    const auto d = sampler.draw(rng);
    x.apply_affine(d.a, d.b.coords());
    logs.push_back(x.log_norm());
  }
  return std::log(10.0) + median(std::move(logs));
}

TrajectoryReport run_trajectory(const EnsembleSpec& spec, const ConePoint& x0, std::int64_t n,
                                const ObserverSet& observers, std::uint64_t seed,
                                std::uint64_t index, const ObserverOptions& options) {
  if (n < 1) throw std::invalid_argument("run_trajectory needs n >= 1");
  if (x0.dim() != spec.dim()) throw std::invalid_argument("x0 has the wrong dimension");
  const std::size_t d = spec.dim();
  const bool need_product = observers.conservativity || observers.bernoulli;

  std::vector<std::int64_t> checkpoints = options.checkpoints;
  if (checkpoints.empty()) {
    for (std::int64_t c = 10; c <= n; c *= 10) checkpoints.push_back(c);
    if (checkpoints.empty() || checkpoints.back() != n) checkpoints.push_back(n);
  }
  std::sort(checkpoints.begin(), checkpoints.end());

  TrajectoryReport rep{};
  rep.steps = n;

  double epsilon = 0.0;
  if (observers.bernoulli) epsilon = options.epsilon ? *options.epsilon : default_epsilon(spec, seed);

  ScaledVector diff;
  double log_k = 0.0;
  std::vector<double> first, second;
  if (observers.contractivity) {
    const ConePoint y0 = options.y0 ? *options.y0 : [&] {
      std::vector<double> c(d, 0.0);
      c[d - 1] = 5.0;
      return ConePoint(std::move(c));
    }();
    if (y0.dim() != d) throw std::invalid_argument("y0 has the wrong dimension");
    std::vector<double> dv(d);
    for (std::size_t i = 0; i < d; ++i) dv[i] = x0[i] - y0[i];
    diff = ScaledVector(dv);
    log_k = options.log_k ? *options.log_k
                          : default_log_k(spec, x0, seed, index, options.k_prepass);
  }

  std::optional<OccupationHistogram> hist;
  if (observers.occupation) hist.emplace(d, options.histogram);
  const int batches = options.histogram.batches;

  RandomStream rng(seed, index, StreamTag::main);
  EnsembleSampler sampler(spec);
  TrajectoryState state(x0, need_product);

  double running_min = x0.is_zero() ? -INFINITY : std::log(x0.norm());
  std::int64_t returns = 0, bsum = 0;
  bool product_small = true;  // A_{0,1} = I
  std::size_t next_cp = 0;
  const std::int64_t half = n / 2;

  for (std::int64_t k = 1; k <= n; ++k) {
    const auto draw = sampler.draw(rng);
    if (observers.bernoulli && product_small && draw.b.norm() >= epsilon * draw.a.col_max()) {
      ++bsum;
    }
    state.advance(draw.a, draw.b);
    const double u = state.log_radius();
    running_min = std::min(running_min, u);
    if (need_product) {
      product_small = state.product().norm_at_most(1.0);
      if (product_small) ++returns;
    }
    if (observers.contractivity) {
      diff.apply(draw.a);
      if (u <= log_k) (k <= half ? first : second).push_back(diff.log_norm());
    }
    if (hist) {
      const int b = static_cast<int>((static_cast<__int128>(k - 1) * batches) / n);
      hist->add(state.scaled(), b);
    }
    while (next_cp < checkpoints.size() && checkpoints[next_cp] == k) {
      rep.checkpoints.push_back({k, running_min, returns, bsum});
      ++next_cp;
    }
  }

  rep.final_log_norm = state.log_radius();
  if (observers.conservativity) rep.conservativity = ConservativityReport{running_min, returns};
  if (observers.bernoulli) rep.bernoulli = BernoulliReport{epsilon, bsum};
  if (observers.contractivity) {
    ContractivityReport c{};
    c.log_k = log_k;
    c.defined = !first.empty() && !second.empty();
    c.first_median = first.empty() ? NAN : median(first);
    c.second_median = second.empty() ? NAN : median(second);
    c.decreased = c.defined && c.second_median < c.first_median;
    c.first_half_log_diff = std::move(first);
    c.second_half_log_diff = std::move(second);
    rep.contractivity = std::move(c);
  }
  if (hist) rep.occupation = std::move(hist);
  return rep;
}

const char* to_string(StopMode m) noexcept { return m == StopMode::vector ? "vector" : "norm"; }

StopMode parse_stop_mode(std::string_view s) {
  if (s == "vector") return StopMode::vector;
  if (s == "norm") return StopMode::norm;
  throw std::invalid_argument("stopping mode must be 'vector' or 'norm'");
}

namespace {

void check_stop_args(double a, std::int64_t cap) {
  if (!(a >= 1.0) || !std::isfinite(a)) throw std::invalid_argument("a must be >= 1");
  if (cap < 1) throw std::invalid_argument("cap must be >= 1");
}

ScaledVector start_direction(const EnsembleSpec& spec, const std::optional<ConePoint>& x) {
  if (!x) return ScaledVector(ConePoint::uniform(spec.dim()).coords());
  if (x->dim() != spec.dim()) throw std::invalid_argument("x has the wrong dimension");
  return ScaledVector(Direction::normalize(x->coords()).coords());
}

}  // namespace

StoppingTime stopping_time(const EnsembleSpec& spec, StopMode mode, double a, std::int64_t cap,
                           std::uint64_t seed, std::uint64_t index,
                           const std::optional<ConePoint>& x) {
  check_stop_args(a, cap);
  const double bound = 1.0 / a;
  RandomStream rng(seed, index, StreamTag::main);
  EnsembleSampler sampler(spec);
  if (mode == StopMode::vector) {
    ScaledVector v = start_direction(spec, x);
    for (std::int64_t n = 1; n <= cap; ++n) {
      v.apply(sampler.draw(rng).a);
      if (v.norm_at_most(bound)) return {n, false};
    }
    return {cap, true};
  }
  ProductBundle p(spec.dim());
  for (std::int64_t n = 1; n <= cap; ++n) {
    p.left_multiply(sampler.draw(rng).a);
    if (p.norm_at_most(bound)) return {n, false};
  }
  return {cap, true};
}

StoppingPair stopping_pair(const EnsembleSpec& spec, const ConePoint& x, double a,
                           std::int64_t cap, std::uint64_t seed, std::uint64_t index) {
  check_stop_args(a, cap);
  const double bound = 1.0 / a;
  RandomStream rng(seed, index, StreamTag::main);
  EnsembleSampler sampler(spec);
  ScaledVector v = start_direction(spec, x);
  ProductBundle p(spec.dim());
  StoppingPair out{{cap, true}, {cap, true}};
  for (std::int64_t n = 1; n <= cap; ++n) {
    const auto& m = sampler.draw(rng).a;
    if (out.vector_time.censored) {
      v.apply(m);
      if (v.norm_at_most(bound)) out.vector_time = {n, false};
    }
    p.left_multiply(m);
    if (p.norm_at_most(bound)) {
      out.norm_time = {n, false};
      break;
    }
  }
  return out;
}

}  // namespace critmat
