#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "critmat/ensemble.hpp"
#include "critmat/fluctuation_stats.hpp"
#include "critmat/hypotheses.hpp"
#include "critmat/measure_estimation.hpp"
#include "critmat/oracle.hpp"
#include "critmat/parallel.hpp"
#include "critmat/simulator.hpp"
#include "critmat/statistics.hpp"
#include "json.hpp"

namespace critmat::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  json summary = json::object();
  bool ok = true;
  std::vector<std::pair<std::string, std::string>> files;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

ConePoint start_point(const RunConfig& c, std::size_t d) {
  if (c.x0.empty()) return ConePoint::basis(d, 0);
  if (c.x0.size() != d) {
    throw std::invalid_argument("--x0 needs " + std::to_string(d) + " coordinates");
  }
  return ConePoint(c.x0);
}

std::vector<std::int64_t> grid_of(const RunConfig& c, std::int64_t default_max) {
  if (c.grid.empty()) return log_grid(default_max);
  if (c.grid.size() == 1) return log_grid(c.grid.front());
  return c.grid;
}

std::optional<std::string> criticality_warning(const EnsembleSpec& spec, const RunConfig& c) {
  const auto g = estimate_lyapunov(spec, 10'000, 20, c.seed, c.workers, StreamTag::verification);
  if (std::abs(g.gamma) > 1e-3 + g.ci_half_width) {
    return "law does not look critical: gamma_hat = " + num(g.gamma);
  }
  return std::nullopt;
}

Outcome check_hypotheses_cmd(const RunConfig& c, const EnsembleSpec& spec) {
  HypothesisOptions opt;
  opt.workers = c.workers;
  if (c.reps) opt.lyapunov_reps = *c.reps;
  opt.a4_tol = c.tol;
  const auto r = check_hypotheses(spec, c.n.value_or(10'000), c.seed, opt);
  Outcome o;
  o.summary = {{"a1_sample_moment", r.a1_sample_moment},
               {"a1_hill_index", r.a1_hill_index},
               {"a2_heuristic", to_string(r.a2)},
               {"a2_min_spectral_radius", r.a2_min_spectral_radius},
               {"a2_max_spectral_radius", r.a2_max_spectral_radius},
               {"a2_note", r.a2_note},
               {"a3_pass", r.a3_pass},
               {"a3_min_margin", r.a3_min_margin},
               {"a4_gamma_hat", r.a4_gamma_hat},
               {"a4_ci_half_width", r.a4_ci_half_width},
               {"a4_pass", r.a4_pass},
               {"a5_fraction", r.a5_fraction},
               {"a5_pass", r.a5_pass},
               {"b_nonzero_prob", r.b_nonzero_prob},
               {"b_log_moment", r.b_log_moment},
               {"all_pass", r.all_pass()}};
  o.ok = r.all_pass();
  return o;
}

Outcome estimate_lyapunov_cmd(const RunConfig& c, const EnsembleSpec& spec) {
  const auto g = estimate_lyapunov(spec, c.n.value_or(10'000), c.reps.value_or(100), c.seed,
                                   c.workers);
  Outcome o;
  o.summary = {{"gamma_hat", g.gamma}, {"ci_half_width", g.ci_half_width},
               {"reps", g.per_rep.size()}};
  std::string csv = "rep,gamma\n";
  for (std::size_t r = 0; r < g.per_rep.size(); ++r) {
    csv += std::to_string(r) + "," + num(g.per_rep[r]) + "\n";
  }
  o.files.emplace_back("per_rep.csv", csv);
  return o;
}

Outcome calibrate_cmd(const RunConfig& c, const EnsembleSpec& spec) {
  CalibrationOptions opt;
  opt.target_tol = c.tol;
  opt.n = c.n.value_or(opt.n);
  opt.reps = c.reps.value_or(opt.reps);
  opt.workers = c.workers;
  Outcome o;
  try {
    const auto r = calibrate_critical(spec, c.seed, opt);
    o.summary = {{"scale", r.spec.scale()},
                 {"scale_multiplier", r.spec.scale() / spec.scale()},
                 {"initial_gamma", r.initial_gamma},
                 {"final_gamma", r.final_gamma},
                 {"final_ci_half_width", r.final_ci_half_width},
                 {"rounds", r.rounds},
                 {"a5_fraction", r.a5_fraction},
                 {"a5_pass", r.a5_pass}};
    o.files.emplace_back("calibrated_spec.json", ensemble_to_json(r.spec));
  } catch (const CalibrationError& e) {
    o.summary = {{"error", e.what()}, {"last_gamma", e.last_gamma()}};
    o.ok = false;
  }
  return o;
}

Outcome survival_cmd(const RunConfig& c, const EnsembleSpec& spec) {
  const StopMode mode = parse_stop_mode(c.mode);
  std::optional<ConePoint> x;
  if (!c.x0.empty()) x = start_point(c, spec.dim());
  const auto grid = grid_of(c, 10'000);
  const std::int64_t cap = c.cap.value_or(10'000'000);
  Outcome o;
  std::string csv = "a,n,survival,stderr\n";
  json curves = json::array();
  std::vector<double> kappas;
  for (double a : c.a) {
    const auto curve = survival_curve(spec, mode, a, x, grid, c.reps.value_or(10'000), c.seed,
                                      c.workers, cap);
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
      csv += num(a) + "," + std::to_string(curve.grid[i]) + "," + num(curve.survival[i]) + "," +
             num(curve.stderr_[i]) + "\n";
    }
    json entry = {{"a", a}, {"censored_fraction", curve.censored_fraction}, {"reps", curve.reps}};
    try {
      const auto fit = sqrt_tail_fit(curve);
      entry["slope"] = fit.slope;
      entry["kappa_hat"] = fit.kappa_hat;
      entry["fit_points"] = fit.points;
      entry["voided"] = fit.voided;
      if (!fit.warning.empty()) entry["warning"] = fit.warning;
      kappas.push_back(fit.kappa_hat);
    } catch (const std::invalid_argument& e) {
      entry["fit_error"] = e.what();
    }
    curves.push_back(entry);
  }
  o.summary = {{"mode", to_string(mode)}, {"cap", cap}, {"curves", curves}};
  if (kappas.size() >= 2) o.summary["envelope_stable"] = envelope_stable(kappas);
  if (auto w = criticality_warning(spec, c)) o.summary["warning"] = *w;
  o.files.emplace_back("survival.csv", csv);
  return o;
}

Outcome clt_cmd(const RunConfig& c, const EnsembleSpec& spec) {
  const auto r = clt_check(spec, c.n.value_or(10'000), c.reps.value_or(1000), c.seed, c.workers);
  Outcome o;
  o.summary = {{"mean_norm", r.mean_norm},         {"var_hat", r.var_hat},
               {"ks_stat", r.ks_stat},             {"mean_pass", r.mean_pass},
               {"degenerate", r.degenerate},       {"criticality_warning", r.criticality_warning}};
  std::string csv = "rep,log_norm_over_sqrt_n\n";
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    csv += std::to_string(i) + "," + num(r.samples[i]) + "\n";
  }
  o.files.emplace_back("clt_samples.csv", csv);
  o.ok = r.mean_pass && !r.degenerate;
  return o;
}

Outcome ladder_cmd(const RunConfig& c, const EnsembleSpec& spec) {
  const double a = c.a.front();
  const auto x0 = start_point(c, spec.dim());
  const std::int64_t samples = c.reps.value_or(1000);
  const std::int64_t cap = c.cap.value_or(100'000'000);
  std::vector<std::optional<LadderSample>> out(static_cast<std::size_t>(samples));
  parallel_for(out.size(), c.workers, [&](std::size_t i) {
    try {
      out[i] = ladder_decomposition(spec, x0, a, c.k_max, cap, c.seed, i);
    } catch (const CapExceeded&) {
    }
  });
  double excess = -INFINITY, recon = 0.0;
  std::int64_t exceeded = 0, truncated = 0;
  std::vector<double> first, second;
  std::string csv = "sample,block,tau,log_norm_a,log1p_norm_b\n";
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out[i]) {
      ++exceeded;
      continue;
    }
    const auto& s = *out[i];
    if (s.truncated) ++truncated;
    const auto logs = s.block_product_log_norms();
    for (std::size_t k = 0; k < logs.size(); ++k) {
      excess = std::max(excess, logs[k] + static_cast<double>(k + 1) * std::log(a));
    }
    recon = std::max(recon, s.reconstruction_error(x0));
    for (std::size_t k = 0; k < s.blocks.size(); ++k) {
      const auto& b = s.blocks[k];
      csv += std::to_string(i) + "," + std::to_string(k + 1) + "," + std::to_string(b.end) + "," +
             num(b.log_norm_a) + "," + num(b.log1p_norm_b) + "\n";
    }
    if (!s.truncated && s.blocks.size() >= 2) {
      first.push_back(s.blocks[0].log_norm_a);
      second.push_back(s.blocks[1].log_norm_a);
    }
  }
  Outcome o;
  const bool bound_ok = !(excess > 1e-12);
  const bool recon_ok = recon <= 1e-9;
  o.summary = {{"a", a},
               {"k_max", c.k_max},
               {"samples", samples},
               {"cap", cap},
               {"cap_exceeded", exceeded},
               {"truncated", truncated},
               {"max_log_excess_over_bound", excess},
               {"bound_ok", bound_ok},
               {"max_reconstruction_error", recon},
               {"reconstruction_ok", recon_ok}};
  bool ks_ok = true;
  if (!first.empty()) {
    const double ks = ks_two_sample(first, second);
    const double crit = ks_critical_two_sample(first.size(), second.size());
    ks_ok = ks <= crit;
    o.summary["ks_block1_vs_block2"] = ks;
    o.summary["ks_critical_5pct"] = crit;
    o.summary["ks_pass"] = ks_ok;
  }
  o.ok = bound_ok && recon_ok && ks_ok;
  o.files.emplace_back("blocks.csv", csv);
  return o;
}

Outcome contractivity_cmd(const RunConfig& c, const EnsembleSpec& spec) {
  const auto x0 = start_point(c, spec.dim());
  const std::int64_t n = c.n.value_or(1'000'000);
  const std::int64_t paths = c.reps.value_or(100);
  if (n < 10) throw std::invalid_argument("contractivity needs --n >= 10");
  ObserverSet obs;
  obs.conservativity = obs.contractivity = obs.bernoulli = true;
  ObserverOptions opt;
  opt.epsilon = default_epsilon(spec, c.seed);
  opt.checkpoints = {n / 10, n};
  std::vector<std::optional<TrajectoryReport>> reps(static_cast<std::size_t>(paths));
  parallel_for(reps.size(), c.workers, [&](std::size_t i) {
    reps[i] = run_trajectory(spec, x0, n, obs, c.seed, i, opt);
  });
  const double bound = std::log(10.0 * x0.norm());
  std::int64_t below = 0, defined = 0, decreased = 0, grew = 0;
  std::string csv =
      "path,running_min_log_norm,product_returns,defined,first_median,second_median,decreased,"
      "bernoulli_sum_decade,bernoulli_sum_final\n";
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const auto& r = *reps[i];
    const auto& ct = *r.contractivity;
    if (r.conservativity->running_min_log_norm < bound) ++below;
    if (ct.defined) ++defined;
    if (ct.decreased) ++decreased;
    const auto s1 = r.checkpoints.front().bernoulli_sum, s2 = r.checkpoints.back().bernoulli_sum;
    if (s2 > s1) ++grew;
    csv += std::to_string(i) + "," + num(r.conservativity->running_min_log_norm) + "," +
           std::to_string(r.conservativity->product_returns) + "," + (ct.defined ? "1" : "0") +
           "," + num(ct.first_median) + "," + num(ct.second_median) + "," +
           (ct.decreased ? "1" : "0") + "," + std::to_string(s1) + "," + std::to_string(s2) + "\n";
  }
  const double p = static_cast<double>(paths);
  const double f_below = static_cast<double>(below) / p;
  const double f_dec = defined ? static_cast<double>(decreased) / static_cast<double>(defined) : 0.0;
  const double f_grew = static_cast<double>(grew) / p;
  Outcome o;
  o.summary = {{"n", n},
               {"paths", paths},
               {"epsilon", *opt.epsilon},
               {"running_min_below_10x0_fraction", f_below},
               {"contractivity_defined_paths", defined},
               {"contractivity_decreased_fraction", f_dec},
               {"bernoulli_increased_fraction", f_grew}};
  o.ok = f_below >= 0.99 && defined > 0 && f_dec >= 0.95 && f_grew >= 0.99;
  o.files.emplace_back("paths.csv", csv);
  return o;
}

OccupationHistogram histogram_run(const RunConfig& c, const EnsembleSpec& spec) {
  HistogramConfig hc;
  hc.bin_width_log2 = c.bin_width;
  hc.ref_radius = c.ref_radius;
  return estimate_invariant_measure(spec, start_point(c, spec.dim()), c.n.value_or(1'000'000), hc,
                                    c.seed, c.reps.value_or(1), c.workers);
}

Outcome invariant_measure_cmd(const RunConfig& c, const EnsembleSpec& spec) {
  const auto h = histogram_run(c, spec);
  Outcome o;
  o.summary = {{"total_steps", h.total_steps()},
               {"ref_count", h.ref_count()},
               {"out_of_range", h.out_of_range()},
               {"ref_radius", h.config().ref_radius},
               {"bin_width_log2", h.config().bin_width_log2},
               {"populated_annuli", populated_annuli(h, c.min_count).size()}};
  o.files.emplace_back("histogram.csv", h.to_csv());
  return o;
}

Outcome tail_report_cmd(const RunConfig& c, const EnsembleSpec& spec) {
  const auto h = histogram_run(c, spec);
  TailOptions opt;
  if (c.sandwich.size() != 2) throw std::invalid_argument("--sandwich needs two values a,b");
  opt.sandwich_a = c.sandwich[0];
  opt.sandwich_b = c.sandwich[1];
  opt.min_count = c.min_count;
  const auto r = tail_diagnostics(h, {}, opt);
  std::string annuli = "log2_radius_lo,log2_radius_hi,count,normalized_mass,stderr,cumulative_mass\n";
  for (std::size_t i = 0; i < r.annuli.size(); ++i) {
    const auto& a = r.annuli[i];
    annuli += num(a.log2_lo) + "," + num(a.log2_hi) + "," + std::to_string(a.count) + "," +
              num(a.mass) + "," + num(a.stderr_) + "," + num(r.cumulative_mass[i]) + "\n";
  }
  std::string tail = "log2_t,l_hat,ratio_half,ratio_double,sandwich_mass,sandwich_ratio\n";
  for (const auto& p : r.points) {
    tail += num(p.log2_t) + "," + num(p.l_hat) + "," + num(p.ratios[0]) + "," +
            num(p.ratios[1]) + "," + num(p.sandwich_mass) + "," + num(p.sandwich_ratio) + "\n";
  }
  Outcome o;
  o.summary = {{"populated_annuli", r.annuli.size()},
               {"grid_points", r.points.size()},
               {"c_hat", r.c_hat},
               {"slowly_varying", r.slowly_varying},
               {"sandwich_lower_ok", r.sandwich_lower_ok},
               {"sandwich_stable", r.sandwich_stable},
               {"mass_increasing", r.mass_increasing},
               {"unbounded_trend", r.unbounded_trend}};
  o.ok = r.slowly_varying && r.sandwich_stable && r.mass_increasing && r.unbounded_trend &&
         std::isfinite(r.c_hat);
  o.files.emplace_back("annuli.csv", annuli);
  o.files.emplace_back("tail.csv", tail);
  o.files.emplace_back("histogram.csv", h.to_csv());
  return o;
}

Outcome oracle_compare_cmd(const RunConfig& c, const EnsembleSpec& spec) {
  const auto red = rank_one_reduce(spec);
  const double a = c.a.front();
  const std::int64_t n_max = c.grid.empty() ? 1000 : c.grid.back();
  const std::int64_t reps = c.reps.value_or(10'000);
  std::vector<std::int64_t> grid(static_cast<std::size_t>(n_max));
  for (std::int64_t i = 0; i < n_max; ++i) grid[static_cast<std::size_t>(i)] = i + 1;
  const auto curve =
      survival_curve(spec, StopMode::norm, a, std::nullopt, grid, reps, c.seed, c.workers, n_max);
  const auto dp = first_passage_survival(red.walk, -std::log(a), n_max);
  std::string csv = "n,empirical,stderr,oracle,abs_diff\n";
  double worst = 0.0;
  bool pass = true;
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    const double p = dp[i];
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(reps));
    const double diff = std::abs(curve.survival[i] - p);
    if (diff > 3.0 * se + 1e-12) pass = false;
    if (se > 0.0) worst = std::max(worst, diff / se);
    csv += std::to_string(curve.grid[i]) + "," + num(curve.survival[i]) + "," +
           num(curve.stderr_[i]) + "," + num(p) + "," + num(diff) + "\n";
  }
  Outcome o;
  o.summary = {{"a", a},         {"reps", reps},        {"n_max", n_max},
               {"max_z", worst}, {"within_3se", pass}, {"lattice_step", lattice_step(red.walk)}};
  o.ok = pass;
  o.files.emplace_back("oracle_compare.csv", csv);
  return o;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::optional<RunConfig> parse_args(int argc, const char* const* argv) {
  RunConfig c;
  CLI::App app{"critmat: critical affine recursions on the nonnegative cone"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::string spec;
  std::string out = c.output_dir.string();
  std::int64_t n = 0, reps = 0, cap = 0;
  app.add_option("--spec", spec, "ensemble spec (JSON)")->required();
  app.add_option("--seed", c.seed, "64-bit seed (CRITMAT_SEED overrides)");
  app.add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "output directory");
  auto* n_opt = app.add_option("--n", n, "steps or samples");
  auto* reps_opt = app.add_option("--reps", reps, "repetitions / paths");
  app.add_option("--a", c.a, "level(s) a, comma separated")->delimiter(',');
  auto* cap_opt = app.add_option("--cap", cap, "step cap");
  app.add_option("--grid", c.grid, "grid points, or a single n_max for a log grid")->delimiter(',');
  app.add_option("--x0", c.x0, "starting point, comma separated")->delimiter(',');
  app.add_option("--tol", c.tol, "tolerance");
  app.add_option("--mode", c.mode, "stopping mode: norm or vector");
  app.add_option("--k", c.k_max, "ladder blocks per sample");
  app.add_option("--ref-radius", c.ref_radius, "reference window radius R");
  app.add_option("--bin-width", c.bin_width, "radius bin width in octaves");
  app.add_option("--sandwich", c.sandwich, "sandwich constants a,b")->delimiter(',');
  app.add_option("--min-count", c.min_count, "count for a populated annulus");
  for (const auto& name : kCommands) app.add_subcommand(name, "run " + name);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw std::invalid_argument(e.what());
  }
  c.command = app.get_subcommands().front()->get_name();
  c.spec_path = spec;
  c.output_dir = out;
  if (*n_opt) c.n = n;
  if (*reps_opt) c.reps = reps;
  if (*cap_opt) c.cap = cap;
  if (const char* env = std::getenv("CRITMAT_SEED")) {
    try {
      std::size_t used = 0;
      c.seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string("CRITMAT_SEED is not an unsigned integer: ") + env);
    }
  }
  if (c.a.empty()) throw std::invalid_argument("--a needs at least one value");
  return c;
}

int execute(const RunConfig& c) {
  try {
    if (!fs::is_regular_file(c.spec_path)) {
      throw std::invalid_argument("spec file not found: " + c.spec_path.string());
    }
    if (fs::exists(c.output_dir) && !fs::is_directory(c.output_dir)) {
      throw std::invalid_argument("output path is not a directory: " + c.output_dir.string());
    }
    const EnsembleSpec spec = load_ensemble(c.spec_path);
    fs::create_directories(c.output_dir);

    Outcome o;
    if (c.command == "check-hypotheses") {
      o = check_hypotheses_cmd(c, spec);
    } else if (c.command == "estimate-lyapunov") {
      o = estimate_lyapunov_cmd(c, spec);
    } else if (c.command == "calibrate") {
      o = calibrate_cmd(c, spec);
    } else if (c.command == "survival") {
      o = survival_cmd(c, spec);
    } else if (c.command == "clt") {
      o = clt_cmd(c, spec);
    } else if (c.command == "ladder") {
      o = ladder_cmd(c, spec);
    } else if (c.command == "contractivity") {
      o = contractivity_cmd(c, spec);
    } else if (c.command == "invariant-measure") {
      o = invariant_measure_cmd(c, spec);
    } else if (c.command == "tail-report") {
      o = tail_report_cmd(c, spec);
    } else if (c.command == "oracle-compare") {
      o = oracle_compare_cmd(c, spec);
    } else {
      throw std::invalid_argument("unknown command " + c.command);
    }

    o.summary["command"] = c.command;
    o.summary["seed"] = c.seed;
    o.summary["property_ok"] = o.ok;
    for (const auto& [name, text] : o.files) write_file(c.output_dir / name, text);
    write_file(c.output_dir / "summary.json", o.summary.dump(2) + "\n");
    const json meta = {{"command", c.command},
                       {"timestamp", timestamp()},
                       {"workers", c.workers},
                       {"spec", c.spec_path.string()}};
    write_file(c.output_dir / "metadata.json", meta.dump(2) + "\n");
    std::cout << o.summary.dump(2) << "\n";
    return o.ok ? 0 : 2;
  } catch (const SpecError& e) {
    std::cerr << "error: " << c.spec_path.string() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace critmat::cli
