#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "critmat/cone_algebra.hpp"
#include "critmat/random_stream.hpp"

namespace critmat {

struct Atom {
  double weight;
  ConeMatrix a;
  ConePoint b;
};

/// Continuous law: entries of A log-uniform on [10^lo, 10^hi], then each row
/// is clamped from below at delta * (row max). Coordinates of B are
/// log-uniform on their own range.
struct GeneratorLaw {
  double entry_log10_lo;
  double entry_log10_hi;
  double b_log10_lo;
  double b_log10_hi;
};

/// Law of the pairs (A_n, B_n) together with delta and a global scale that
/// multiplies every sampled A. Membership of the atoms in S_delta is not
/// enforced here; check_hypotheses reports it.
class EnsembleSpec {
 public:
  static EnsembleSpec from_atoms(double delta, std::vector<Atom> atoms, double scale = 1.0);
  static EnsembleSpec from_generator(std::size_t dim, double delta, GeneratorLaw law,
                                     double scale = 1.0);

  std::size_t dim() const noexcept { return dim_; }
  double delta() const noexcept { return delta_; }
  double scale() const noexcept { return scale_; }
  bool has_atoms() const noexcept { return !atoms_.empty(); }
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  const std::optional<GeneratorLaw>& generator() const noexcept { return generator_; }

  /// Same law with scale multiplied by `factor`.
  EnsembleSpec rescaled(double factor) const;
  EnsembleSpec with_b(const ConePoint& b) const;

 private:
  EnsembleSpec() = default;
  std::size_t dim_ = 0;
  double delta_ = 1.0;
  double scale_ = 1.0;
  std::vector<Atom> atoms_;
  std::optional<GeneratorLaw> generator_;
};

/// Convenience: a finitely supported law with equal weights and a common B.
EnsembleSpec equal_mixture(double delta, const std::vector<ConeMatrix>& matrices,
                           const ConePoint& b);

/// `count` atoms drawn once from the generator law (dim, delta, entry range),
/// each paired with `b`, equal weights. Deterministic in `seed`.
EnsembleSpec random_atom_mixture(std::size_t dim, double delta, std::size_t count,
                                 double entry_log10_lo, double entry_log10_hi, const ConePoint& b,
                                 std::uint64_t seed);

/// Generator projection: raises every entry of a row to at least
/// delta * (row max). Operates on a row-major d x d buffer in place.
void project_rows_to_s_delta(std::span<double> row_major, std::size_t dim, double delta);

/// Draws i.i.d. pairs from an EnsembleSpec. For finitely supported laws the
/// scaled atoms are built once and draws return references to them.
class EnsembleSampler {
 public:
  explicit EnsembleSampler(const EnsembleSpec& spec);

  struct Draw {
    const ConeMatrix& a;
    const ConePoint& b;
  };

  /// The references stay valid until the next call.
  Draw draw(RandomStream& rng);
  std::size_t draw_atom_index(RandomStream& rng);

  std::size_t dim() const noexcept { return dim_; }
  std::uint64_t rejections() const noexcept { return rejections_; }

  static constexpr std::uint64_t kMaxConsecutiveRejections = 1'000'000;

 private:
  std::size_t dim_;
  double delta_;
  double scale_;
  std::vector<ConeMatrix> scaled_atoms_;
  std::vector<ConePoint> atom_b_;
  std::discrete_distribution<std::size_t> pick_;
  std::optional<GeneratorLaw> law_;
  std::optional<ConeMatrix> generated_a_;
  std::optional<ConePoint> generated_b_;
  std::vector<double> buffer_;
  std::uint64_t rejections_ = 0;
};

std::pair<ConeMatrix, ConePoint> sample_pair(const EnsembleSpec& spec, RandomStream& rng);

struct LyapunovEstimate {
  double gamma;
  double ci_half_width;  // 95% half width from the spread across reps
  std::vector<double> per_rep;
};

/// gamma_hat = mean over reps of S_n(x) / n, with S_n the cocycle sum started
/// at the barycenter of the simplex. Rep r uses stream (seed, r, tag).
LyapunovEstimate estimate_lyapunov(const EnsembleSpec& spec, std::int64_t n, std::int64_t reps,
                                   std::uint64_t seed, unsigned workers = 1,
                                   StreamTag tag = StreamTag::main);

class CalibrationError : public std::runtime_error {
 public:
  CalibrationError(const std::string& what, double last_gamma)
      : std::runtime_error(what), last_gamma_(last_gamma) {}
  double last_gamma() const noexcept { return last_gamma_; }

 private:
  double last_gamma_;
};

struct CalibrationOptions {
  double target_tol = 1e-3;
  std::int64_t n = 10'000;
  std::int64_t reps = 400;
  int max_rounds = 5;
  unsigned workers = 1;
};

struct CalibrationResult {
  EnsembleSpec spec;
  double initial_gamma;
  double final_gamma;         // re-estimate on the calibrated law, fresh streams
  double final_ci_half_width;
  int rounds;
  double a5_fraction;  // fraction of atoms / samples with v(A) >= 1 + delta after scaling
  bool a5_pass;
};

/// Rescales the law by exp(-gamma_hat) until a fresh re-estimate satisfies
/// |gamma_hat| <= target_tol. Throws CalibrationError after max_rounds.
CalibrationResult calibrate_critical(const EnsembleSpec& spec, std::uint64_t seed,
                                     const CalibrationOptions& options = {});

/// Fraction of mass with v(A) >= 1 + delta (exact for atoms, sampled otherwise).
double a5_fraction(const EnsembleSpec& spec, std::uint64_t seed, std::int64_t samples = 10'000);

// ---- spec file (JSON) ----

class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

EnsembleSpec parse_ensemble_json(std::string_view text);
EnsembleSpec load_ensemble(const std::filesystem::path& path);
std::string ensemble_to_json(const EnsembleSpec& spec);

}  // namespace critmat
