#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "critmat/measure_estimation.hpp"
#include "critmat/oracle.hpp"

using namespace critmat;
using doctest::Approx;

namespace {

const ConePoint kB{1.0, 1.0};

EnsembleSpec rank_one_mixture() {
  return equal_mixture(1.0, {ConeMatrix::ones(2), ConeMatrix::constant(2, 0.25)}, kB);
}

// |X_n| >= |B| = 2 after one step, so the window must reach past 2
const HistogramConfig kWide{1.0, 8.0, true, 20};

OccupationHistogram synthetic(std::int64_t lo, std::int64_t hi,
                              const std::function<double(std::int64_t)>& count) {
  std::vector<std::pair<std::int64_t, std::uint64_t>> c;
  for (std::int64_t k = lo; k <= hi; ++k) c.emplace_back(k, std::llround(count(k)));
  return OccupationHistogram::from_radial_counts(2, {}, c);
}

double total_mass(const OccupationHistogram& h) {
  double s = 0.0;
  for (const auto& r : h.radial_rows()) s += r.normalized_mass;
  return s;
}

}  // namespace

TEST_CASE("histogram bookkeeping") {
  OccupationHistogram h(3);
  CHECK(h.cells() == 7);
  const std::vector<double> c{0.6, 0.3, 0.1};
  h.add(0.5, c, 0);
  h.add(-1.0, c, 1);
  h.add(1.0, c, 2);
  h.add(INFINITY, c, 3);
  h.add(-2e7, c, 3);
  CHECK(h.total_steps() == 5);
  CHECK(h.out_of_range() == 2);
  CHECK(h.binned_count() == h.total_steps() - h.out_of_range());
  CHECK(h.ref_count() == 2);
  CHECK(h.mass_between(-1.0, 1.0) == 1.0);
  CHECK(OccupationHistogram::direction_cell(std::vector<double>{1, 1, 1}) == 6);
  CHECK(OccupationHistogram::direction_cell(std::vector<double>{0.6, 0.3, 0.1}) == 0);
  CHECK(OccupationHistogram::direction_cell(std::vector<double>{0.1, 0.3, 0.6}) == 5);
  CHECK_THROWS_AS(OccupationHistogram(2, HistogramConfig{1.0, 1.0, true, 20}), std::invalid_argument);
}

TEST_CASE("histogram CSV export") {
  OccupationHistogram h(2, HistogramConfig{1.0, 2.0, false, 20});
  const std::vector<double> c{0.5, 0.5};
  for (int i = 0; i < 4; ++i) h.add(0.25, c, i);
  h.add(3.5, c, 0);
  std::istringstream in(h.to_csv());
  std::string line;
  std::getline(in, line);
  CHECK(line == "log2_radius_lo,log2_radius_hi,direction_cell,count,normalized_mass,stderr");
  std::getline(in, line);
  CHECK(line.rfind("0,1,0,4,1,", 0) == 0);
  std::getline(in, line);
  CHECK(line.rfind("3,4,0,1,0.25,", 0) == 0);
}

TEST_CASE("estimation preconditions") {
  HistogramConfig cfg;
  CHECK_THROWS_AS(estimate_invariant_measure(rank_one_mixture(), kB, 0, cfg, 1),
                  std::invalid_argument);
}

TEST_CASE("a fixed point inside the reference window carries all the mass") {
  const auto spec = equal_mixture(1.0, {ConeMatrix::constant(2, 0.25)}, ConePoint{0.25, 0.25});
  const auto h = estimate_invariant_measure(spec, ConePoint{0.5, 0.5}, 100'000, {}, 1);
  CHECK(h.ref_count() == 100'000);
  CHECK(total_mass(h) == 1.0);
}

TEST_CASE("reference window starvation is reported") {
  const auto spec = equal_mixture(1.0, {ConeMatrix::constant(2, 1.0 / 16)}, ConePoint{0, 0});
  CHECK_THROWS_AS(estimate_invariant_measure(spec, ConePoint{20, 0}, 100'000, {}, 1), MeasureError);
  CHECK_THROWS_AS(uniqueness_check(spec, {ConePoint{20, 0}, ConePoint{0, 20}}, {1}, 100'000, {}),
                  MeasureError);
}

TEST_CASE("reference mass is exactly one and rebinning preserves mass") {
  const auto h = estimate_invariant_measure(rank_one_mixture(), kB, 1'000'000, kWide, 3, 2, 2);
  CHECK(h.mass_between(-3.0, 3.0) == 1.0);
  CHECK(h.binned_count() + h.out_of_range() == h.total_steps());
  const auto c = h.coarsened();
  CHECK(std::abs(total_mass(c) - total_mass(h)) <= 1e-12 * total_mass(h));
  CHECK(c.ref_count() == h.ref_count());
  for (const auto& r : h.radial_rows()) {
    CHECK(std::isfinite(r.stderr_));
    CHECK(r.stderr_ >= 0.0);
  }
}

TEST_CASE("occupation counts match the scalar oracle on shared draws") {
  const auto spec = rank_one_mixture();
  const ConePoint x0{1, 0};
  const std::int64_t n = 1'000'000;
  const auto h = estimate_invariant_measure(spec, x0, n, kWide, 5);
  const auto path = scalar_log_radius_path(spec, rank_one_reduce(spec), 1.0, n, 5, 0);
  std::map<std::int64_t, std::uint64_t> bins;
  for (double u : path) ++bins[static_cast<std::int64_t>(std::floor(u / std::log(2.0)))];
  std::uint64_t mismatched = 0;
  for (const auto& r : h.radial_rows()) {
    const auto k = static_cast<std::int64_t>(r.log2_lo);
    const auto it = bins.find(k);
    const std::uint64_t ref = it == bins.end() ? 0 : it->second;
    mismatched += r.count > ref ? r.count - ref : ref - r.count;
  }
  CHECK(static_cast<double>(mismatched) <= 1e-4 * static_cast<double>(n));
}

TEST_CASE("constant tail profile") {
  const auto h = synthetic(-20, 40, [](std::int64_t) { return 1000.0; });
  const auto rep = tail_diagnostics(h);
  CHECK_FALSE(rep.points.empty());
  for (const auto& p : rep.points) {
    CHECK(p.l_hat == Approx(1.0));
    for (double q : p.ratios) CHECK(q == Approx(1.0));
    CHECK(p.sandwich_ratio == Approx(1.0));
  }
  CHECK(rep.c_hat == Approx(h.mass_between(-1, 1) / h.mass_between(-1, 1)));
  CHECK(rep.slowly_varying);
  CHECK(rep.sandwich_lower_ok);
  CHECK(rep.sandwich_stable);
  CHECK(rep.mass_increasing);
  CHECK(rep.unbounded_trend);
  for (std::size_t i = 1; i < rep.cumulative_mass.size(); ++i) {
    CHECK(rep.cumulative_mass[i] - rep.cumulative_mass[i - 1] == Approx(0.5));
  }
}

TEST_CASE("logarithmic tail profile") {
  const auto h = synthetic(-20, 60, [](std::int64_t k) { return 1000.0 * (k + 30); });
  const auto rep = tail_diagnostics(h, {}, TailOptions{{2.0}, 0.5, 2.0, 100, 0.7, 1.4});
  double prev = INFINITY;
  for (const auto& p : rep.points) {
    const double k = p.log2_t;
    CHECK(p.ratios[0] == Approx((2 * k + 61) / (2 * k + 59)));
    CHECK(p.ratios[0] > 1.0);
    CHECK(p.ratios[0] < prev);
    prev = p.ratios[0];
  }
  CHECK(rep.slowly_varying);
}

TEST_CASE("geometric tail profile is not slowly varying") {
  const auto h = synthetic(-10, 30, [](std::int64_t k) { return std::ldexp(1.0, 40 - static_cast<int>(k)); });
  const auto rep = tail_diagnostics(h, {}, TailOptions{{2.0}, 0.5, 2.0, 100, 0.7, 1.4});
  for (const auto& p : rep.points) CHECK(p.ratios[0] == Approx(0.5));
  CHECK_FALSE(rep.slowly_varying);
  CHECK_FALSE(rep.unbounded_trend);
}

TEST_CASE("tail diagnostics need enough annuli") {
  const auto h = synthetic(-3, 3, [](std::int64_t) { return 1000.0; });
  CHECK_THROWS_AS(tail_diagnostics(h), std::invalid_argument);
}

TEST_CASE("identical runs have zero total variation") {
  const auto res = uniqueness_check(rank_one_mixture(), {kB, kB}, {4}, 100'000, kWide);
  CHECK(res.tv[0][1] == 0.0);
  CHECK(res.pass);
  CHECK(res.histograms.size() == 2);
}

TEST_CASE("total variation of disjoint histograms is one") {
  OccupationHistogram p(2), q(2);
  const std::vector<double> c{0.7, 0.3};
  p.add(0.5, c, 0);
  q.add(-0.5, c, 0);
  CHECK(restricted_tv(p, q, -3, 3) == 1.0);
  CHECK(restricted_tv(p, p, -3, 3) == 0.0);
}
