#include "critmat/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "critmat/parallel.hpp"

namespace critmat {

namespace {

void check_delta(double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw std::invalid_argument("delta must lie in (0, 1], got " + std::to_string(delta));
  }
}

void check_scale(double scale) {
  if (!(std::isfinite(scale) && scale > 0.0)) {
    throw std::invalid_argument("scale must be finite and positive");
  }
}

double log_uniform(RandomStream& rng, double lo, double hi) {
  return std::pow(10.0, rng.uniform(lo, hi));
}

std::uint64_t round_seed(std::uint64_t seed, int round) {
  return seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(round + 1);
}

}  // namespace

EnsembleSpec EnsembleSpec::from_atoms(double delta, std::vector<Atom> atoms, double scale) {
  check_delta(delta);
  check_scale(scale);
  if (atoms.empty()) throw std::invalid_argument("ensemble needs at least one atom");
  const std::size_t d = atoms.front().a.dim();
  double total = 0.0;
  for (const auto& atom : atoms) {
    if (atom.a.dim() != d || atom.b.dim() != d) {
      throw std::invalid_argument("atoms have inconsistent dimensions");
    }
    if (!(atom.weight >= 0.0) || !std::isfinite(atom.weight)) {
      throw std::invalid_argument("atom weights must be finite and nonnegative");
    }
    total += atom.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("atom weights must sum to 1, got " + std::to_string(total));
  }
  EnsembleSpec s;
  s.dim_ = d;
  s.delta_ = delta;
  s.scale_ = scale;
  s.atoms_ = std::move(atoms);
  return s;
}

EnsembleSpec EnsembleSpec::from_generator(std::size_t dim, double delta, GeneratorLaw law,
                                          double scale) {
  check_delta(delta);
  check_scale(scale);
  if (dim < kMinDim || dim > kMaxDim) throw std::invalid_argument("dimension must lie in [2, 64]");
  const bool ok = std::isfinite(law.entry_log10_lo) && std::isfinite(law.entry_log10_hi) &&
                  std::isfinite(law.b_log10_lo) && std::isfinite(law.b_log10_hi) &&
                  law.entry_log10_lo <= law.entry_log10_hi && law.b_log10_lo <= law.b_log10_hi;
  if (!ok) throw std::invalid_argument("generator ranges must be finite with lo <= hi");
  EnsembleSpec s;
  s.dim_ = dim;
  s.delta_ = delta;
  s.scale_ = scale;
  s.generator_ = law;
  return s;
}

EnsembleSpec EnsembleSpec::rescaled(double factor) const {
  check_scale(factor);
  EnsembleSpec s = *this;
  s.scale_ = scale_ * factor;
  check_scale(s.scale_);
  return s;
}

EnsembleSpec EnsembleSpec::with_b(const ConePoint& b) const {
  if (b.dim() != dim_) throw std::invalid_argument("B has the wrong dimension");
  if (!has_atoms()) throw std::invalid_argument("with_b needs a finitely supported law");
  EnsembleSpec s = *this;
  for (auto& atom : s.atoms_) atom.b = b;
  return s;
}

EnsembleSpec equal_mixture(double delta, const std::vector<ConeMatrix>& matrices,
                           const ConePoint& b) {
  std::vector<Atom> atoms;
  const double w = 1.0 / static_cast<double>(std::max<std::size_t>(matrices.size(), 1));
  for (const auto& m : matrices) atoms.push_back({w, m, b});
  return EnsembleSpec::from_atoms(delta, std::move(atoms));
}

void project_rows_to_s_delta(std::span<double> row_major, std::size_t dim, double delta) {
  for (std::size_t i = 0; i < dim; ++i) {
    auto row = row_major.subspan(i * dim, dim);
    const double floor = delta * *std::max_element(row.begin(), row.end());
    for (double& v : row) v = std::max(v, floor);
  }
}

EnsembleSpec random_atom_mixture(std::size_t dim, double delta, std::size_t count,
                                 double entry_log10_lo, double entry_log10_hi, const ConePoint& b,
                                 std::uint64_t seed) {
  check_delta(delta);
  if (count == 0) throw std::invalid_argument("need at least one atom");
  RandomStream rng(seed, 0, StreamTag::main);
  std::vector<Atom> atoms;
  const double w = 1.0 / static_cast<double>(count);
  std::vector<double> buf(dim * dim);
  for (std::size_t k = 0; k < count; ++k) {
    for (double& v : buf) v = log_uniform(rng, entry_log10_lo, entry_log10_hi);
    project_rows_to_s_delta(buf, dim, delta);
    atoms.push_back({w, ConeMatrix(dim, buf), b});
  }
  return EnsembleSpec::from_atoms(delta, std::move(atoms));
}

EnsembleSampler::EnsembleSampler(const EnsembleSpec& spec)
    : dim_(spec.dim()), delta_(spec.delta()), scale_(spec.scale()), law_(spec.generator()) {
  if (spec.has_atoms()) {
    std::vector<double> weights;
    for (const auto& atom : spec.atoms()) {
      scaled_atoms_.push_back(atom.a.scaled(scale_));
      atom_b_.push_back(atom.b);
      weights.push_back(atom.weight);
    }
    pick_ = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
  } else {
    buffer_.resize(dim_ * dim_);
  }
}

std::size_t EnsembleSampler::draw_atom_index(RandomStream& rng) {
  if (scaled_atoms_.size() == 1) return 0;
  return pick_(rng.engine());
}

EnsembleSampler::Draw EnsembleSampler::draw(RandomStream& rng) {
  if (!scaled_atoms_.empty()) {
    const std::size_t k = draw_atom_index(rng);
    return {scaled_atoms_[k], atom_b_[k]};
  }
  const GeneratorLaw& law = *law_;
  std::uint64_t streak = 0;
  for (;;) {
    for (double& v : buffer_) v = log_uniform(rng, law.entry_log10_lo, law.entry_log10_hi);
    project_rows_to_s_delta(buffer_, dim_, delta_);
    for (double& v : buffer_) v *= scale_;
    bool finite = true;
    for (double v : buffer_) finite = finite && std::isfinite(v) && v > 0.0;
    if (finite) {
      generated_a_.emplace(dim_, buffer_);
      if (s_delta_margin(*generated_a_) >= delta_ * (1.0 - kRelTol)) break;
    }
    ++rejections_;
    if (++streak >= kMaxConsecutiveRejections) {
      throw std::runtime_error("generator rejected 1e6 consecutive draws");
    }
  }
  std::vector<double> b(dim_);
  for (double& v : b) v = log_uniform(rng, law.b_log10_lo, law.b_log10_hi);
  generated_b_.emplace(std::move(b));
  return {*generated_a_, *generated_b_};
}

std::pair<ConeMatrix, ConePoint> sample_pair(const EnsembleSpec& spec, RandomStream& rng) {
  EnsembleSampler sampler(spec);
  auto d = sampler.draw(rng);
  return {d.a, d.b};
}

LyapunovEstimate estimate_lyapunov(const EnsembleSpec& spec, std::int64_t n, std::int64_t reps,
                                   std::uint64_t seed, unsigned workers, StreamTag tag) {
  if (n < 100) throw std::invalid_argument("estimate_lyapunov needs n >= 100");
  if (reps < 1) throw std::invalid_argument("estimate_lyapunov needs reps >= 1");
  const std::size_t d = spec.dim();
  std::vector<double> per_rep(static_cast<std::size_t>(reps));
  parallel_for(per_rep.size(), workers, [&](std::size_t r) {
    RandomStream rng(seed, r, tag);
    EnsembleSampler sampler(spec);
    std::vector<double> w(d, 1.0 / static_cast<double>(d)), y(d);
    double s = 0.0;
    for (std::int64_t k = 0; k < n; ++k) {
      const auto draw = sampler.draw(rng);
      draw.a.apply(w, y);
      const double norm = std::accumulate(y.begin(), y.end(), 0.0);
      s += std::log(norm);
      for (std::size_t i = 0; i < d; ++i) w[i] = y[i] / norm;
    }
    per_rep[r] = s / static_cast<double>(n);
  });
  LyapunovEstimate est;
  est.gamma = std::accumulate(per_rep.begin(), per_rep.end(), 0.0) / static_cast<double>(reps);
  double ss = 0.0;
  for (double g : per_rep) ss += (g - est.gamma) * (g - est.gamma);
  est.ci_half_width =
      reps > 1 ? 1.96 * std::sqrt(ss / static_cast<double>(reps - 1) / static_cast<double>(reps))
               : 0.0;
  est.per_rep = std::move(per_rep);
  return est;
}

double a5_fraction(const EnsembleSpec& spec, std::uint64_t seed, std::int64_t samples) {
  const double threshold = 1.0 + spec.delta();
  if (spec.has_atoms()) {
    double mass = 0.0;
    for (const auto& atom : spec.atoms()) {
      if (leq_rel(threshold, spec.scale() * atom.a.col_min())) mass += atom.weight;
    }
    return mass;
  }
  RandomStream rng(seed, 0, StreamTag::hypotheses);
  EnsembleSampler sampler(spec);
  std::int64_t hits = 0;
  for (std::int64_t k = 0; k < samples; ++k) {
    if (leq_rel(threshold, sampler.draw(rng).a.col_min())) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples);
}

CalibrationResult calibrate_critical(const EnsembleSpec& spec, std::uint64_t seed,
                                     const CalibrationOptions& options) {
  if (!(options.target_tol > 0.0)) throw std::invalid_argument("target_tol must be positive");
  const auto first = estimate_lyapunov(spec, options.n, options.reps, seed, options.workers,
                                       StreamTag::calibration);
  EnsembleSpec current = spec;
  double gamma = first.gamma;
  double half_width = first.ci_half_width;
  int rounds = 0;
  // a law whose first estimate already meets the tolerance is left as is
  while (std::abs(gamma) > options.target_tol) {
    if (rounds == options.max_rounds) {
      throw CalibrationError("calibration did not reach |gamma| <= " +
                                 std::to_string(options.target_tol) + " after " +
                                 std::to_string(options.max_rounds) + " rounds",
                             gamma);
    }
    current = current.rescaled(std::exp(-gamma));
    ++rounds;
    const auto check = estimate_lyapunov(current, options.n, options.reps,
                                         round_seed(seed, rounds), options.workers,
                                         StreamTag::verification);
    gamma = check.gamma;
    half_width = check.ci_half_width;
  }
  const double frac = a5_fraction(current, seed);
  return CalibrationResult{current, first.gamma, gamma, half_width, rounds, frac, frac > 0.0};
}

}  // namespace critmat
