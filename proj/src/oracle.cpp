#include "critmat/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace critmat {

RankOneReduction rank_one_reduce(const EnsembleSpec& spec) {
  if (!spec.has_atoms()) throw std::invalid_argument("rank-one reduction needs atoms");
  const double d = static_cast<double>(spec.dim());
  RankOneReduction r;
  for (const auto& atom : spec.atoms()) {
    const auto e = atom.a.entries();
    const double beta = e.front();
    if (!(beta > 0.0) || std::any_of(e.begin(), e.end(), [beta](double v) { return v != beta; })) {
      throw std::invalid_argument("atom is not a positive multiple of the all-ones matrix");
    }
    const double m = d * beta * spec.scale();
    r.multipliers.push_back(m);
    r.b_norms.push_back(atom.b.norm());
    r.walk.increments.push_back({atom.weight, std::log(m)});
  }
  return r;
}

std::vector<double> scalar_log_radius_path(const EnsembleSpec& spec,
                                           const RankOneReduction& reduction, double r0,
                                           std::int64_t steps, std::uint64_t seed,
                                           std::uint64_t index) {
  RandomStream rng(seed, index, StreamTag::main);
  EnsembleSampler sampler(spec);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max<std::int64_t>(steps, 0)));
  double s = r0 > 0.0 ? std::log(r0) : -INFINITY;
  for (std::int64_t n = 0; n < steps; ++n) {
    const std::size_t k = sampler.draw_atom_index(rng);
    const double lm = std::log(reduction.multipliers[k]) + s;
    const double b = reduction.b_norms[k];
    if (b == 0.0) {
      s = lm;
    } else if (lm == -INFINITY) {
      s = std::log(b);
    } else {
      const double lb = std::log(b);
      const double hi = std::max(lm, lb), lo = std::min(lm, lb);
      s = hi + std::log1p(std::exp(lo - hi));
    }
    out.push_back(s);
  }
  return out;
}

double lattice_step(const ScalarWalkSpec& walk) {
  double smallest = INFINITY;
  for (const auto& inc : walk.increments) {
    if (inc.probability > 0.0 && inc.log_increment != 0.0) {
      smallest = std::min(smallest, std::abs(inc.log_increment));
    }
  }
  if (smallest == INFINITY) return 1.0;
  for (int q = 1; q <= 64; ++q) {
    const double h = smallest / q;
    const bool ok = std::all_of(walk.increments.begin(), walk.increments.end(), [h](const auto& i) {
      const double k = i.log_increment / h;
      return std::abs(k - std::round(k)) <= 1e-9 * std::max(1.0, std::abs(k));
    });
    if (ok) return h;
  }
  throw std::invalid_argument(
      "increments are not on a common lattice; use Monte Carlo survival curves instead");
}

std::vector<double> first_passage_survival(const ScalarWalkSpec& walk, double barrier,
                                           std::int64_t n_max) {
  if (!(barrier < 0.0)) throw std::invalid_argument("barrier must be negative");
  if (n_max < 1 || n_max > 100'000) throw std::invalid_argument("n_max must lie in [1, 1e5]");
  double total = 0.0;
  for (const auto& inc : walk.increments) {
    if (!(inc.probability >= 0.0)) throw std::invalid_argument("negative probability");
    total += inc.probability;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("probabilities must sum to 1");
  const double h = lattice_step(walk);
  std::vector<std::pair<std::int64_t, double>> steps;
  for (const auto& inc : walk.increments) {
    if (inc.probability > 0.0) {
      steps.emplace_back(static_cast<std::int64_t>(std::llround(inc.log_increment / h)),
                         inc.probability);
    }
  }
  // alive positions are j > jb; p[i] holds position jb + 1 + i
  const auto jb = static_cast<std::int64_t>(std::floor(barrier / h + 1e-9));
  std::int64_t up = 0;
  for (const auto& [k, p] : steps) up = std::max(up, k);
  std::vector<double> p(static_cast<std::size_t>(-jb), 0.0), next;
  p[static_cast<std::size_t>(-jb - 1)] = 1.0;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_max));
  for (std::int64_t n = 1; n <= n_max; ++n) {
    next.assign(p.size() + static_cast<std::size_t>(up), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] == 0.0) continue;
      for (const auto& [k, q] : steps) {
        const std::int64_t t = static_cast<std::int64_t>(i) + k;
        if (t >= 0) next[static_cast<std::size_t>(t)] += p[i] * q;
      }
    }
    while (next.size() > 1 && next.back() < 1e-40) next.pop_back();
    p.swap(next);
    double s = 0.0;
    for (double v : p) s += v;
    out.push_back(std::min(s, 1.0));
  }
  return out;
}

}  // namespace critmat
