#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "critmat/scaled_vector.hpp"

namespace critmat {

struct HistogramConfig {
  double bin_width_log2 = 1.0;  // radius bins [k w, (k+1) w) in log2 |x|
  double ref_radius = 2.0;      // reference window 1/R <= |x| < R
  bool direction_cells = true;
  int batches = 20;

  friend bool operator==(const HistogramConfig&, const HistogramConfig&) = default;
};

struct HistogramRow {
  double log2_lo;
  double log2_hi;
  int cell;  // -1 for radial rows aggregated over directions
  std::uint64_t count;
  double normalized_mass;
  double stderr_;
};

/// Occupation counts of a trajectory over log-radius bins times direction
/// cells. Masses are counts divided by the count in the reference window.
class OccupationHistogram {
 public:
  explicit OccupationHistogram(std::size_t dim, HistogramConfig config = {});

  /// Synthetic histogram from radial counts (index k -> count), one cell and
  /// one batch. The reference count is the sum over bins inside the window.
  static OccupationHistogram from_radial_counts(
      std::size_t dim, HistogramConfig config,
      const std::vector<std::pair<std::int64_t, std::uint64_t>>& counts);

  void add(double log2_radius, std::span<const double> coords, int batch);
  void add(const ScaledVector& x, int batch) { add(x.log2_norm(), x.coords(), batch); }
  void merge(const OccupationHistogram& other);
  /// Same data on radius bins twice as wide.
  OccupationHistogram coarsened() const;

  std::size_t dim() const noexcept { return dim_; }
  const HistogramConfig& config() const noexcept { return config_; }
  int cells() const noexcept { return cells_; }
  std::uint64_t total_steps() const noexcept { return total_; }
  std::uint64_t out_of_range() const noexcept { return out_of_range_; }
  std::uint64_t ref_count() const noexcept { return ref_count_; }
  std::uint64_t binned_count() const noexcept;

  /// Cell of the simplex partition: ordered (argmax, second argmax) pairs, plus
  /// a center cell for points within 1/(2d) of the barycenter in sup norm.
  static int direction_cell(std::span<const double> coords) noexcept;

  /// Rows with positive count, sorted by radius then cell.
  std::vector<HistogramRow> rows() const;
  /// Rows aggregated over direction cells, sorted by radius.
  std::vector<HistogramRow> radial_rows() const;
  /// Normalized mass of the radius bins contained in [log2_lo, log2_hi].
  double mass_between(double log2_lo, double log2_hi) const;
  std::uint64_t count_between(double log2_lo, double log2_hi) const;

  std::string to_csv() const;

 private:
  struct Entry {
    std::uint64_t count = 0;
    std::vector<std::uint64_t> batch;
  };

  std::int64_t key(std::int64_t radius_index, int cell) const noexcept {
    return radius_index * cells_ + cell;
  }
  std::int64_t radius_index_of(std::int64_t key) const noexcept;
  double stderr_of(std::uint64_t count, const std::vector<std::uint64_t>& batch) const;

  std::size_t dim_;
  HistogramConfig config_;
  int cells_;
  std::unordered_map<std::int64_t, Entry> bins_;
  std::vector<std::uint64_t> ref_batch_;
  std::uint64_t ref_count_ = 0;
  std::uint64_t total_ = 0;
  std::uint64_t out_of_range_ = 0;
};

}  // namespace critmat
