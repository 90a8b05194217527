#pragma once

#include <cstdint>
#include <vector>

#include "critmat/ensemble.hpp"

namespace critmat {

struct Increment {
  double probability;
  double log_increment;
};

struct ScalarWalkSpec {
  std::vector<Increment> increments;
};

/// For atoms beta_k J the chain is |X_{n+1}| = m_k |X_n| + |B_k| exactly,
/// with m_k = d beta_k scale.
struct RankOneReduction {
  ScalarWalkSpec walk;
  std::vector<double> multipliers;  // m_k per atom
  std::vector<double> b_norms;      // |B_k| per atom
};

RankOneReduction rank_one_reduce(const EnsembleSpec& spec);

/// ln r_n for n = 1..steps of the scalar recursion, driven by the atom
/// indices of stream (seed, index); matches run_trajectory on the same stream.
std::vector<double> scalar_log_radius_path(const EnsembleSpec& spec,
                                           const RankOneReduction& reduction, double r0,
                                           std::int64_t steps, std::uint64_t seed,
                                           std::uint64_t index);

/// Largest h such that every increment is an integer multiple of h.
double lattice_step(const ScalarWalkSpec& walk);

/// P(tau > n) for n = 1..n_max, tau the first n with partial sum <= barrier.
std::vector<double> first_passage_survival(const ScalarWalkSpec& walk, double barrier,
                                           std::int64_t n_max);

}  // namespace critmat
