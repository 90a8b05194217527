#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace critmat::cli {

struct RunConfig {
  std::string command;
  std::filesystem::path spec_path;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::filesystem::path output_dir = "critmat-out";
  std::optional<std::int64_t> n;
  std::optional<std::int64_t> reps;
  std::vector<double> a{2.0};
  std::optional<std::int64_t> cap;
  std::vector<std::int64_t> grid;
  std::vector<double> x0;
  double tol = 1e-3;
  std::string mode = "norm";
  std::int64_t k_max = 2;
  double ref_radius = 2.0;
  double bin_width = 1.0;
  std::vector<double> sandwich{0.5, 2.0};
  std::uint64_t min_count = 100;
};

inline const std::vector<std::string> kCommands = {
    "check-hypotheses", "estimate-lyapunov", "calibrate", "survival",          "clt",
    "ladder",           "contractivity",     "invariant-measure", "tail-report", "oracle-compare"};

/// Parses argv; CRITMAT_SEED in the environment overrides --seed. Throws
/// std::invalid_argument on bad input; returns nullopt after --help.
std::optional<RunConfig> parse_args(int argc, const char* const* argv);

/// Runs one command. Returns 0 on success, 2 when a checked property fails
/// and 1 on errors.
int execute(const RunConfig& config);

}  // namespace critmat::cli
