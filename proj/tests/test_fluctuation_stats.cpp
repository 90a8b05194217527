#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "critmat/fluctuation_stats.hpp"

using namespace critmat;
using doctest::Approx;

namespace {

const ConePoint kB{1.0, 1.0};

EnsembleSpec rank_one_mixture() {
  return equal_mixture(1.0, {ConeMatrix::ones(2), ConeMatrix::constant(2, 0.25)}, kB);
}

EnsembleSpec quarter_atom() { return equal_mixture(1.0, {ConeMatrix::constant(2, 0.25)}, kB); }

SurvivalCurve power_law_curve(double c, double a) {
  SurvivalCurve curve{StopMode::norm, a, std::nullopt, log_grid(10'000), {}, {}, 100'000, 10'000, 0.0};
  for (auto n : curve.grid) {
    curve.survival.push_back(std::min(1.0, c / std::sqrt(static_cast<double>(n))));
    curve.stderr_.push_back(0.0);
  }
  return curve;
}

}  // namespace

TEST_CASE("log grid") {
  const auto g = log_grid(1000);
  CHECK(g.front() == 1);
  CHECK(g.back() == 1000);
  CHECK(std::is_sorted(g.begin(), g.end()));
  CHECK(std::adjacent_find(g.begin(), g.end()) == g.end());
  CHECK(std::find(g.begin(), g.end(), 100) != g.end());
}

TEST_CASE("survival of the rank-one mixture at the oracle anchors") {
  const int reps = 200'000;
  const auto c = survival_curve(rank_one_mixture(), StopMode::norm, 2.0, std::nullopt, {1, 3},
                                reps, 1, 4);
  CHECK(std::abs(c.survival[0] - 0.5) <= 4.0 * std::sqrt(0.25 / reps));
  CHECK(std::abs(c.survival[1] - 0.375) <= 4.0 * std::sqrt(0.375 * 0.625 / reps));
  CHECK(c.stderr_[0] == Approx(std::sqrt(c.survival[0] * (1 - c.survival[0]) / reps)));
}

TEST_CASE("deterministic survival curves") {
  const auto zero = survival_curve(quarter_atom(), StopMode::norm, 2.0, std::nullopt, {1, 2}, 1000, 1);
  CHECK(zero.survival == std::vector<double>{0.0, 0.0});
  const auto three =
      survival_curve(quarter_atom(), StopMode::norm, 8.0, std::nullopt, {1, 2, 3}, 1000, 1);
  CHECK(three.survival == std::vector<double>{1.0, 1.0, 0.0});
  CHECK_THROWS_AS(sqrt_tail_fit(three, 1, 3), std::invalid_argument);
  CHECK_THROWS_AS(survival_curve(quarter_atom(), StopMode::norm, 0.5, std::nullopt, {1}, 1000, 1),
                  std::invalid_argument);
}

TEST_CASE("curves built from stopping times") {
  const std::vector<StoppingTime> times{{1, false}, {4, false}, {10, true}, {2, false}};
  const auto c = curve_from_times(StopMode::norm, 2.0, {1, 2, 5, 10, 20}, times, 10);
  CHECK(c.grid == std::vector<std::int64_t>{1, 2, 5, 10});
  CHECK(c.survival == std::vector<double>{0.75, 0.5, 0.25, 0.25});
  CHECK(c.censored_fraction == 0.25);
}

TEST_CASE("exact power law fit") {
  for (double a : {2.0, 8.0}) {
    const auto fit = sqrt_tail_fit(power_law_curve(0.8, a));
    CHECK(fit.slope == Approx(-0.5));
    CHECK(fit.kappa_hat == Approx(0.8 / (1.0 + std::log(a))));
    CHECK_FALSE(fit.voided);
  }
}

TEST_CASE("heavy censoring voids the fit") {
  auto c = power_law_curve(0.8, 2.0);
  c.censored_fraction = 0.3;
  const auto fit = sqrt_tail_fit(c);
  CHECK(fit.voided);
  CHECK_FALSE(fit.warning.empty());
}

TEST_CASE("envelope stability") {
  CHECK(envelope_stable({1.0, 1.5, 1.9}));
  CHECK_FALSE(envelope_stable({1.0, 2.5}));
  CHECK_FALSE(envelope_stable({1.0, INFINITY}));
}

TEST_CASE("vector survival is dominated by norm survival") {
  const auto spec = EnsembleSpec::from_generator(3, 0.5, GeneratorLaw{-0.6, 0.6, -1, 0}, 0.2);
  const ConePoint x{0.5, 0.25, 0.25};
  const auto grid = log_grid(1000);
  const auto vec = survival_curve(spec, StopMode::vector, 4.0, x, grid, 5000, 2, 4);
  const auto norm = survival_curve(spec, StopMode::norm, 4.0, std::nullopt, grid, 5000, 2, 4);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(vec.survival[i] <= norm.survival[i]);
}

TEST_CASE("survival curves do not depend on the worker count") {
  const auto grid = log_grid(1000);
  const auto a = survival_curve(rank_one_mixture(), StopMode::norm, 8.0, std::nullopt, grid, 3000, 5, 1);
  const auto b = survival_curve(rank_one_mixture(), StopMode::norm, 8.0, std::nullopt, grid, 3000, 5, 6);
  CHECK(a.survival == b.survival);
}

TEST_CASE("CLT normalization for the rank-one mixture") {
  const auto r = clt_check(rank_one_mixture(), 10'000, 1000, 3, 4);
  CHECK(r.mean_pass);
  CHECK_FALSE(r.degenerate);
  CHECK(r.var_hat == Approx(std::log(2.0) * std::log(2.0)).epsilon(0.1));
  CHECK(r.ks_stat < 1.63 / std::sqrt(1000.0));
  CHECK(r.samples.size() == 1000);
}

TEST_CASE("CLT degenerate and subcritical cases") {
  const auto flat = equal_mixture(1.0, {ConeMatrix::constant(2, 0.5)}, kB);
  const auto d = clt_check(flat, 1000, 100, 1);
  CHECK(d.degenerate);
  CHECK(d.var_hat == 0.0);
  const auto sub = clt_check(quarter_atom(), 1000, 100, 1);
  CHECK(sub.mean_norm == Approx(-std::sqrt(1000.0) * std::log(2.0)));
  CHECK(sub.criticality_warning);
}
