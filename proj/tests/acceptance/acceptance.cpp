// Acceptance suite: every criterion at full size. Prints one PASS/FAIL line
// per criterion; exit status is nonzero when any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "cli.hpp"
#include "critmat/ensemble.hpp"
#include "critmat/fluctuation_stats.hpp"
#include "critmat/measure_estimation.hpp"
#include "critmat/oracle.hpp"
#include "critmat/parallel.hpp"
#include "critmat/projective_metric.hpp"
#include "critmat/simulator.hpp"
#include "critmat/statistics.hpp"
#include "../test_support.hpp"

using namespace critmat;
namespace fs = std::filesystem;

namespace {

unsigned g_workers = 1;

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  void require(bool ok, const std::string& what) {
    details.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
    pass = pass && ok;
  }
  void note(const std::string& what) { details.push_back("     " + what); }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string g(double v) { return fmt("%.6g", v); }

const ConePoint kB2{1.0, 1.0};

EnsembleSpec rank_one_mixture() {
  return equal_mixture(1.0, {ConeMatrix::ones(2), ConeMatrix::constant(2, 0.25)}, kB2);
}

CalibrationResult calibrated(const EnsembleSpec& spec, std::uint64_t seed) {
  CalibrationOptions opt;
  opt.workers = g_workers;
  return calibrate_critical(spec, seed, opt);
}

// d = 3 finitely supported S_0.5 law, calibrated to criticality
CalibrationResult full_rank_ensemble() {
  const auto raw = random_atom_mixture(3, 0.5, 8, -1.0, 1.0, ConePoint{1, 1, 1}, 2024);
  return calibrated(raw, 2024);
}

// ---- 1. algebraic suite ----

Outcome algebraic_suite() {
  Outcome o;
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<std::size_t> dims{2, 3, 8};
  const std::vector<double> deltas{0.1, 0.5, 1.0};
  const int total = 100'000;
  long sandwich = 0, lemma_prod = 0, lemma_vec = 0, closure = 0, margin = 0, samples = 0;
  for (int t = 0; t < total; ++t) {
    const std::size_t d = dims[t % 3];
    const double delta = deltas[(t / 3) % 3];
    const bool zero_rows = t % 2 == 1;
    const ConeMatrix a = testsupport::random_s_delta(gen, d, delta, zero_rows);
    const ConeMatrix b = testsupport::random_s_delta(gen, d, delta, zero_rows);
    const auto x = testsupport::random_cone_vector(gen, d);
    const double nx = testsupport::l1(x);
    const double nax = testsupport::l1(testsupport::naive_apply(testsupport::to_vec(a), x));
    if (!leq_rel(a.col_min() * nx, nax) || !leq_rel(nax, a.col_max() * nx)) ++sandwich;
    const ConeMatrix ab = compose(a, b);
    if (!leq_rel(delta * a.col_max() * b.col_max(), ab.col_max())) ++lemma_prod;
    if (!leq_rel(delta * a.col_max() * nx, nax)) ++lemma_vec;
    if (!leq_rel(delta, s_delta_margin(ab))) ++closure;
    if (!leq_rel(delta / static_cast<double>(d), cone_margin(a))) ++margin;
    ++samples;
  }
  o.note("matrices sampled: " + std::to_string(samples));
  o.require(sandwich == 0, "v(A)|x| <= |Ax| <= ||A|| |x|: " + std::to_string(sandwich) + " violations");
  o.require(lemma_prod == 0, "delta ||A|| ||B|| <= ||AB||: " + std::to_string(lemma_prod) + " violations");
  o.require(lemma_vec == 0, "delta ||A|| |x| <= |Ax|: " + std::to_string(lemma_vec) + " violations");
  o.require(closure == 0, "delta*(AB) >= delta: " + std::to_string(closure) + " violations");
  o.require(margin == 0, "cone_margin >= delta/d: " + std::to_string(margin) + " violations");
  return o;
}

// ---- 2. metric suite ----

std::vector<double> simplex_point(std::mt19937_64& gen, std::size_t d) {
  auto x = testsupport::random_cone_vector(gen, d);
  const double s = testsupport::l1(x);
  for (auto& v : x) v /= s;
  return x;
}

Outcome metric_suite() {
  Outcome o;
  std::mt19937_64 gen(202);
  const std::vector<std::size_t> dims{2, 3, 8};
  const std::vector<double> deltas{0.1, 0.5, 1.0};
  long sym = 0, tri = 0, bound = 0, l1 = 0, coef = 0, step = 0;
  for (int t = 0; t < 100'000; ++t) {
    const std::size_t d = dims[t % 3];
    const double delta = deltas[(t / 3) % 3];
    const auto x = simplex_point(gen, d), y = simplex_point(gen, d), z = simplex_point(gen, d);
    const double xy = hennion_distance(x, y);
    if (xy != hennion_distance(y, x)) ++sym;
    if (hennion_distance(x, z) > xy + hennion_distance(y, z) + 1e-12) ++tri;
    if (!(xy >= 0.0 && xy <= 1.0)) ++bound;
    double diff = 0.0;
    for (std::size_t i = 0; i < d; ++i) diff += std::abs(x[i] - y[i]);
    if (diff > 2.0 * xy + 1e-12) ++l1;
    const ConeMatrix a = testsupport::random_s_delta(gen, d, delta, t % 2 == 1);
    const double c = contraction_coefficient(a);
    if (c > contraction_bound(delta) + 1e-12) ++coef;
    const auto ax = projective_action(a, Direction::normalize(x)).direction;
    const auto ay = projective_action(a, Direction::normalize(y)).direction;
    if (hennion_distance(ax, ay) > c * xy + 1e-12) ++step;
  }
  o.require(sym == 0, "symmetry: " + std::to_string(sym) + " violations");
  o.require(tri == 0, "triangle inequality: " + std::to_string(tri) + " violations");
  o.require(bound == 0, "distance in [0, 1]: " + std::to_string(bound) + " violations");
  o.require(l1 == 0, "|x - y| <= 2 d(x, y): " + std::to_string(l1) + " violations");
  o.require(coef == 0, "[A] <= (1 - delta^4)/(1 + delta^4): " + std::to_string(coef) + " violations");
  o.require(step == 0, "d(A.x, A.y) <= [A] d(x, y): " + std::to_string(step) + " violations");

  const int paths = 10'000, n_max = 20;
  for (std::size_t d : dims) {
    for (double delta : deltas) {
      std::vector<double> s(n_max, 0.0), s2(n_max, 0.0);
      for (int p = 0; p < paths; ++p) {
        Direction x = Direction::normalize(simplex_point(gen, d));
        Direction y = Direction::normalize(simplex_point(gen, d));
        for (int n = 0; n < n_max; ++n) {
          const ConeMatrix a = testsupport::random_s_delta(gen, d, delta);
          x = projective_action(a, x).direction;
          y = projective_action(a, y).direction;
          const double v = hennion_distance(x, y);
          s[n] += v;
          s2[n] += v * v;
        }
      }
      const double rho = contraction_bound(delta);
      double worst = -INFINITY;
      bool ok = true;
      for (int n = 0; n < n_max; ++n) {
        const double m = s[n] / paths;
        const double se = std::sqrt(std::max(s2[n] / paths - m * m, 0.0) / paths);
        const double limit = std::pow(rho, n + 1) + 3.0 * se + 1e-12;
        ok = ok && m <= limit;
        worst = std::max(worst, m - limit);
      }
      o.require(ok, "mean contraction d=" + std::to_string(d) + " delta=" + g(delta) +
                        ": max(E d - rho^n - 3SE) = " + g(worst));
    }
  }
  return o;
}

// ---- 3. oracle equivalence ----

Outcome oracle_equivalence() {
  Outcome o;
  const auto spec = rank_one_mixture();
  const auto red = rank_one_reduce(spec);
  const std::int64_t n = 10'000;
  const int paths = 100;
  std::vector<double> worst(paths, 0.0);
  parallel_for(worst.size(), g_workers, [&](std::size_t p) {
    const ConePoint x0{0.25 + 0.01 * static_cast<double>(p), 1.0};
    const auto scalar = scalar_log_radius_path(spec, red, x0.norm(), n, 303, p);
    RandomStream rng(303, p);
    EnsembleSampler sampler(spec);
    TrajectoryState s(x0, false);
    for (std::int64_t k = 0; k < n; ++k) {
      const auto d = sampler.draw(rng);
      s.advance(d.a, d.b);
      worst[p] = std::max(worst[p], std::abs(std::expm1(s.log_radius() - scalar[k])));
    }
  });
  const double max_rel = *std::max_element(worst.begin(), worst.end());
  o.require(max_rel <= 1e-10, "|X_n| vs scalar recursion, " + std::to_string(paths) +
                                  " paths x 1e4 steps: max relative error " + g(max_rel));

  const std::int64_t n_max = 1000, reps = 100'000;
  const auto dp = first_passage_survival(red.walk, -std::log(2.0), n_max);
  o.require(dp[0] == 0.5, "oracle P(tau > 1) = " + g(dp[0]));
  o.require(std::abs((1.0 - dp[2]) - 0.625) <= 1e-15, "oracle P(tau <= 3) = " + g(1.0 - dp[2]));
  std::vector<std::int64_t> grid(n_max);
  for (std::int64_t i = 0; i < n_max; ++i) grid[i] = i + 1;
  const auto curve =
      survival_curve(spec, StopMode::norm, 2.0, std::nullopt, grid, reps, 404, g_workers, n_max);
  double max_z = 0.0;
  long outside = 0;
  for (std::int64_t i = 0; i < n_max; ++i) {
    const double se = std::sqrt(dp[i] * (1.0 - dp[i]) / static_cast<double>(reps));
    const double z = std::abs(curve.survival[i] - dp[i]) / se;
    max_z = std::max(max_z, z);
    if (z > 3.0) ++outside;
  }
  o.note("empirical P(tau > 1) = " + g(curve.survival[0]) + ", P(tau <= 3) = " +
         g(1.0 - curve.survival[2]));
  o.require(outside == 0, "survival within 3 SE of the oracle for n <= 1000 (1e5 paths): max |z| = " +
                              g(max_z));
  return o;
}

// ---- 4. sqrt(n) fluctuation tail ----

void tail_for(Outcome& o, const std::string& name, const EnsembleSpec& spec) {
  const auto grid = log_grid(10'000);
  std::vector<double> kappas;
  for (double a : {2.0, 8.0, 32.0}) {
    const auto curve = survival_curve(spec, StopMode::norm, a, std::nullopt, grid, 100'000, 505,
                                      g_workers, 10'000);
    const auto fit = sqrt_tail_fit(curve);
    kappas.push_back(fit.kappa_hat);
    o.require(fit.slope >= -0.65 && fit.slope <= -0.35,
              name + " a=" + g(a) + ": slope " + g(fit.slope) + " over n in [1e2, 1e4], kappa_hat " +
                  g(fit.kappa_hat));
    // kappa_hat restricted to each decade, for information
    std::string per_decade;
    for (double lo : {1.0, 10.0, 100.0, 1000.0}) {
      double k = 0.0;
      for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        const double n = static_cast<double>(curve.grid[i]);
        if (n >= lo && n <= 10.0 * lo) {
          k = std::max(k, curve.survival[i] * std::sqrt(n) / (1.0 + std::log(a)));
        }
      }
      per_decade += " " + g(k);
    }
    o.note(name + " a=" + g(a) + ": kappa per decade" + per_decade);
  }
  const auto [lo, hi] = std::minmax_element(kappas.begin(), kappas.end());
  o.require(envelope_stable(kappas), name + ": kappa_hat max/min across a = " + g(*hi / *lo));
}

Outcome sqrt_tail() {
  Outcome o;
  const auto r1 = calibrated(rank_one_mixture(), 4);
  o.require(std::abs(r1.final_gamma) <= 1e-3,
            "rank-one mixture gamma_hat " + g(r1.final_gamma) + " (rounds " +
                std::to_string(r1.rounds) + ")");
  tail_for(o, "rank-one", r1.spec);
  const auto r2 = full_rank_ensemble();
  o.require(std::abs(r2.final_gamma) <= 1e-3,
            "full-rank mixture gamma_hat " + g(r2.final_gamma) + " after scale " +
                g(r2.spec.scale()));
  tail_for(o, "full-rank", r2.spec);
  return o;
}

// ---- 5. conservativity and local contractivity ----

void contractivity_for(Outcome& o, const std::string& name, const EnsembleSpec& spec) {
  const std::int64_t n = 1'000'000;
  const std::size_t paths = 1000;
  const ConePoint x0 = ConePoint::basis(spec.dim(), 0);
  ObserverSet obs;
  obs.conservativity = obs.contractivity = obs.bernoulli = true;
  ObserverOptions opt;
  opt.epsilon = default_epsilon(spec, 606);
  opt.checkpoints = {n / 10, n};
  std::vector<std::optional<TrajectoryReport>> reps(paths);
  parallel_for(paths, g_workers, [&](std::size_t i) {
    reps[i] = run_trajectory(spec, x0, n, obs, 606, i, opt);
  });
  const double bound = std::log(10.0 * x0.norm());
  std::size_t below = 0, defined = 0, decreased = 0, grew = 0;
  for (const auto& r : reps) {
    if (r->conservativity->running_min_log_norm < bound) ++below;
    if (r->contractivity->defined) {
      ++defined;
      if (r->contractivity->decreased) ++decreased;
    }
    if (r->checkpoints.back().bernoulli_sum > r->checkpoints.front().bernoulli_sum) ++grew;
  }
  const double p = static_cast<double>(paths);
  const double f_dec = defined ? static_cast<double>(decreased) / static_cast<double>(defined) : 0.0;
  o.note(name + ": epsilon " + g(*opt.epsilon) + ", contractivity defined on " +
         std::to_string(defined) + " of " + std::to_string(paths) + " paths");
  o.require(below / p >= 0.99, name + ": running min below 10|x0| on " + g(below / p) + " of paths");
  o.require(defined >= 100 && f_dec >= 0.95,
            name + ": second-half median below first-half median on " + g(f_dec) +
                " of defined paths");
  o.require(grew / p >= 0.99, name + ": Bernoulli sum grew from 1e5 to 1e6 on " + g(grew / p) +
                                  " of paths");
}

Outcome conservativity() {
  Outcome o;
  contractivity_for(o, "rank-one", calibrated(rank_one_mixture(), 5).spec);
  contractivity_for(o, "full-rank", full_rank_ensemble().spec);
  return o;
}

// ---- 6. ladder structure ----

void ladder_for(Outcome& o, const std::string& name, const EnsembleSpec& spec) {
  const double a = 2.0;
  const std::size_t samples = 10'000;
  const ConePoint x0 = ConePoint::uniform(spec.dim());
  std::vector<std::optional<LadderSample>> out(samples);
  parallel_for(samples, g_workers, [&](std::size_t i) {
    try {
      out[i] = ladder_decomposition(spec, x0, a, 2, 10'000'000, 707, i);
    } catch (const CapExceeded&) {
    }
  });
  long bound_violations = 0, capped = 0;
  double recon = 0.0;
  std::vector<double> first, second;
  for (const auto& s : out) {
    if (!s || s->truncated) {
      ++capped;
      if (!s) continue;
    }
    const auto logs = s->block_product_log_norms();
    for (std::size_t k = 0; k < logs.size(); ++k) {
      if (!leq_rel(logs[k], -static_cast<double>(k + 1) * std::log(a))) ++bound_violations;
    }
    recon = std::max(recon, s->reconstruction_error(x0));
    if (!s->truncated && s->blocks.size() == 2) {
      first.push_back(s->blocks[0].log_norm_a);
      second.push_back(s->blocks[1].log_norm_a);
    }
  }
  o.note(name + ": " + std::to_string(capped) + " of " + std::to_string(samples) +
         " samples hit the 1e7 step cap");
  o.require(bound_violations == 0,
            name + ": ||A~_k...A~_1|| <= a^-k violations " + std::to_string(bound_violations));
  o.require(recon <= 1e-9, name + ": max reconstruction error " + g(recon));
  const double ks = ks_two_sample(first, second);
  const double crit = ks_critical_two_sample(first.size(), second.size(), 0.05);
  o.require(ks <= crit, name + ": KS(ln||A~_1||, ln||A~_2||) = " + g(ks) + " vs 5% critical " +
                            g(crit) + " on " + std::to_string(first.size()) + " pairs");
}

Outcome ladder_structure() {
  Outcome o;
  ladder_for(o, "rank-one", rank_one_mixture());
  ladder_for(o, "full-rank", full_rank_ensemble().spec);
  return o;
}

// ---- 7. invariant measure ----

Outcome invariant_measure() {
  Outcome o;
  const auto spec = rank_one_mixture();
  HistogramConfig cfg;
  cfg.ref_radius = 8.0;
  const auto u = uniqueness_check(spec, {ConePoint{1, 0}, ConePoint{0, 5}}, {7001, 7002},
                                  10'000'000, cfg, g_workers);
  double worst = 0.0;
  for (const auto& row : u.tv)
    for (double v : row) worst = std::max(worst, v);
  o.require(u.pass, "uniqueness: max pairwise TV on [1/8, 8] over 2 starts x 2 seeds = " + g(worst));

  OccupationHistogram merged = u.histograms[0];
  for (std::size_t i = 1; i < u.histograms.size(); ++i) merged.merge(u.histograms[i]);
  double lo = INFINITY, hi = 0.0;
  for (int k = 5; k <= 15; ++k) {
    const double m = merged.mass_between(k, k + 1);
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  o.require(lo > 0.0 && hi / lo <= 1.3,
            "annulus masses k in [5, 15]: min " + g(lo) + ", max " + g(hi) + ", ratio " + g(hi / lo));

  TailOptions opt;
  opt.sandwich_a = 1.0 / 16.0;
  opt.sandwich_b = 16.0;
  const auto rep = tail_diagnostics(merged, {}, opt);
  double rmin = INFINITY, rmax = 0.0;
  for (std::size_t i = rep.points.size() / 2; i < rep.points.size(); ++i) {
    for (double q : rep.points[i].ratios) {
      rmin = std::min(rmin, q);
      rmax = std::max(rmax, q);
    }
  }
  o.note(std::to_string(rep.annuli.size()) + " populated annuli, " +
         std::to_string(rep.points.size()) + " grid points");
  o.require(rep.slowly_varying, "slow variation on the upper half of the grid: ratios in [" + g(rmin) +
                                    ", " + g(rmax) + "]");
  o.require(rep.mass_increasing, "cumulative mass strictly increasing over populated annuli");
  o.note("unbounded-trend flag: " + std::string(rep.unbounded_trend ? "set" : "not set"));
  o.require(std::isfinite(rep.c_hat) && rep.sandwich_stable && rep.sandwich_lower_ok,
            "sandwich: c_hat " + g(rep.c_hat) + ", stable within 2 on the upper half");
  return o;
}

// ---- 8. reproducibility ----

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome reproducibility() {
  Outcome o;
  const std::string data = CRITMAT_TEST_DATA;
  const std::string mix = data + "/rank_one_mixture.json", gen = data + "/generator_d3.json";
  const std::vector<std::vector<std::string>> commands{
      {"--spec", gen, "--n", "2000", "--reps", "20", "check-hypotheses"},
      {"--spec", gen, "--n", "2000", "--reps", "50", "estimate-lyapunov"},
      {"--spec", gen, "--n", "2000", "--reps", "50", "calibrate"},
      {"--spec", mix, "--reps", "20000", "--grid", "10000", "--a", "2,8,32", "survival"},
      {"--spec", gen, "--n", "2000", "--reps", "500", "clt"},
      {"--spec", mix, "--reps", "1000", "--cap", "1000000", "ladder"},
      {"--spec", mix, "--n", "100000", "--reps", "16", "contractivity"},
      {"--spec", mix, "--n", "1000000", "--reps", "4", "--ref-radius", "8", "invariant-measure"},
      {"--spec", mix, "--n", "2000000", "--ref-radius", "8", "tail-report"},
      {"--spec", mix, "--reps", "20000", "--grid", "1000", "oracle-compare"},
  };
  const fs::path root = fs::temp_directory_path() / "critmat_acceptance_repro";
  fs::remove_all(root);
  std::ostringstream sink;
  for (const auto& args : commands) {
    const std::string cmd = args.back();
    std::vector<fs::path> dirs;
    bool ran = true;
    for (const char* w : {"1", "4", "4"}) {
      auto full = args;
      dirs.push_back(root / (cmd + "_" + std::to_string(dirs.size())));
      full.insert(full.end() - 1, {"--workers", w, "--seed", "31337", "--out", dirs.back().string()});
      full.insert(full.begin(), "critmat");
      std::vector<const char*> argv;
      for (const auto& a : full) argv.push_back(a.c_str());
      auto* out = std::cout.rdbuf(sink.rdbuf());
      int code = 1;
      try {
        const auto cfg = cli::parse_args(static_cast<int>(argv.size()), argv.data());
        code = cli::execute(*cfg);
      } catch (const std::exception&) {
      }
      std::cout.rdbuf(out);
      ran = ran && code != 1;
    }
    std::size_t files = 0, identical = 0;
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      const auto name = entry.path().filename();
      if (name == "metadata.json") continue;
      ++files;
      const std::string ref = slurp(entry.path());
      if (ref == slurp(dirs[1] / name) && ref == slurp(dirs[2] / name)) ++identical;
    }
    o.require(ran && files > 0 && identical == files,
              cmd + ": " + std::to_string(identical) + "/" + std::to_string(files) +
                  " payload files byte-identical across workers 1, 4 and a rerun");
  }
  fs::remove_all(root);
  return o;
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"critmat acceptance suite"};
  std::vector<int> selected;
  g_workers = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("--criterion", selected, "criterion number(s), default all")->delimiter(',');
  app.add_option("--workers", g_workers, "worker threads");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {1, "algebraic suite", algebraic_suite},
      {2, "metric suite", metric_suite},
      {3, "oracle equivalence", oracle_equivalence},
      {4, "sqrt(n) fluctuation tail", sqrt_tail},
      {5, "conservativity and local contractivity", conservativity},
      {6, "ladder structure", ladder_structure},
      {7, "invariant measure", invariant_measure},
      {8, "reproducibility", reproducibility},
  };
  bool all_pass = true;
  for (const auto& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) {
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& d : o.details) std::cout << "  " << d << "\n";
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.title << ") in "
              << fmt("%.1f", secs) << " s" << std::endl;
    all_pass = all_pass && o.pass;
  }
  return all_pass ? 0 : 1;
}
