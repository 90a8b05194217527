#include "critmat/hypotheses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "critmat/scaled_vector.hpp"
#include "critmat/statistics.hpp"

namespace critmat {

const char* to_string(A2Verdict v) noexcept {
  switch (v) {
    case A2Verdict::pass:
      return "pass";
    case A2Verdict::degenerate_suspected:
      return "degenerate-suspected";
    case A2Verdict::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

bool HypothesisReport::all_pass() const noexcept {
  return a3_pass && a4_pass && a5_pass && b_nonzero_prob > 0.0 &&
         a2 != A2Verdict::degenerate_suspected;
}

double spectral_radius(const ConeMatrix& a) {
  const std::size_t d = a.dim();
  std::vector<double> x(d, 1.0 / static_cast<double>(d)), y(d);
  double r = 0.0;
  for (int it = 0; it < 500; ++it) {
    a.apply(x, y);
    double s = 0.0;
    for (double v : y) s += v;
    if (s == 0.0) return 0.0;
    const double prev = r;
    r = s;
    for (std::size_t i = 0; i < d; ++i) x[i] = y[i] / s;
    if (it > 10 && std::abs(r - prev) <= 1e-14 * r) break;
  }
  return r;
}

namespace {

// log spectral radius of a product of `len` draws; the product is kept
// normalized so long products stay in range
double log_product_radius(EnsembleSampler& sampler, RandomStream& rng, int len) {
  const auto first = sampler.draw(rng);
  double log_scale = std::log(first.a.col_max());
  ConeMatrix p = first.a.scaled(1.0 / first.a.col_max());
  for (int k = 1; k < len; ++k) {
    const auto draw = sampler.draw(rng);
    ConeMatrix q = compose(draw.a, p);
    const double c = q.col_max();
    log_scale += std::log(c);
    p = q.scaled(1.0 / c);
  }
  const double r = spectral_radius(p);
  return r > 0.0 ? log_scale + std::log(r) : -INFINITY;
}

}  // namespace

HypothesisReport check_hypotheses(const EnsembleSpec& spec, std::int64_t samples,
                                  std::uint64_t seed, const HypothesisOptions& options) {
  if (samples < 1000) throw std::invalid_argument("check_hypotheses needs samples >= 1000");
  const double delta = spec.delta();
  const double power = 2.0 + delta;
  HypothesisReport rep{};

  RandomStream rng(seed, 0, StreamTag::hypotheses);
  EnsembleSampler sampler(spec);
  std::vector<double> log_n;
  log_n.reserve(static_cast<std::size_t>(samples));
  double a1 = 0.0, bmom = 0.0;
  std::int64_t b_nonzero = 0;
  double min_margin = INFINITY;
  for (std::int64_t k = 0; k < samples; ++k) {
    const auto draw = sampler.draw(rng);
    const Norms nm = norms(draw.a);
    const double ln = std::log(nm.frak_n);
    log_n.push_back(ln);
    a1 += std::pow(ln, power);
    const double bn = draw.b.norm();
    if (bn > 0.0) ++b_nonzero;
    if (bn > 1.0) bmom += std::pow(std::log(bn), power);
    if (!spec.has_atoms()) min_margin = std::min(min_margin, s_delta_margin(draw.a));
  }
  const auto ns = static_cast<double>(samples);
  rep.a1_sample_moment = a1 / ns;
  rep.a1_hill_index =
      hill_tail_index(log_n, std::max<std::size_t>(1, static_cast<std::size_t>(samples) / 100));
  rep.b_nonzero_prob = static_cast<double>(b_nonzero) / ns;
  rep.b_log_moment = bmom / ns;

  if (spec.has_atoms()) {
    for (const auto& atom : spec.atoms()) {
      if (atom.weight > 0.0) min_margin = std::min(min_margin, s_delta_margin(atom.a));
    }
  }
  rep.a3_min_margin = min_margin;
  rep.a3_pass = leq_rel(delta, min_margin);

  const auto gamma = estimate_lyapunov(spec, options.lyapunov_n, options.lyapunov_reps, seed,
                                       options.workers, StreamTag::hypotheses);
  rep.a4_gamma_hat = gamma.gamma;
  rep.a4_ci_half_width = gamma.ci_half_width;
  rep.a4_pass = std::abs(gamma.gamma) <= options.a4_tol + gamma.ci_half_width;

  rep.a5_fraction = a5_fraction(spec, seed, samples);
  rep.a5_pass = rep.a5_fraction > 0.0;

  RandomStream prng(seed, 1, StreamTag::hypotheses);
  double lo = INFINITY, hi = -INFINITY;
  for (int t = 0; t < options.product_trials; ++t) {
    const int len = 1 + t % std::max(1, options.max_product_length);
    const double r = log_product_radius(sampler, prng, len) / static_cast<double>(len);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  rep.a2_min_spectral_radius = std::exp(lo);
  rep.a2_max_spectral_radius = std::exp(hi);
  if (lo < 0.0 && hi > 0.0) {
    rep.a2 = A2Verdict::pass;
  } else if (hi - lo <= 1e-9) {
    rep.a2 = A2Verdict::degenerate_suspected;
  } else {
    rep.a2 = A2Verdict::inconclusive;
  }
  rep.a2_note =
      "heuristic: products of length <= " + std::to_string(options.max_product_length) +
      " must show spectral radii on both sides of 1; the literal condition is ambiguous because "
      "{0} is invariant for every linear law";
  return rep;
}

}  // namespace critmat
