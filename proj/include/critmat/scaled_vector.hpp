#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "critmat/cone_algebra.hpp"

namespace critmat {

/// A vector stored as 2^exponent * coords. The l1 norm of coords is kept in
/// [2^-32, 2^32] by shifting with exact powers of two, so long products never
/// overflow and rescaling adds no rounding error. Coordinates may be signed
/// (used for differences of trajectories).
class ScaledVector {
 public:
  ScaledVector() = default;
  explicit ScaledVector(std::span<const double> coords, std::int64_t exponent = 0);

  std::size_t dim() const noexcept { return y_.size(); }
  std::int64_t exponent() const noexcept { return e_; }
  std::span<const double> coords() const noexcept { return y_; }
  bool is_zero() const noexcept { return l1_ == 0.0; }

  double log_norm() const noexcept;   // ln of the l1 norm, -inf for zero
  double log2_norm() const noexcept;
  double mantissa_norm() const noexcept { return l1_; }

  /// Exact test of |v| <= bound for bound > 0.
  bool norm_at_most(double bound) const noexcept;

  /// v <- A v.
  void apply(const ConeMatrix& a);
  /// v <- A v + b; recenters at b when b dominates beyond the exponent range.
  void apply_affine(const ConeMatrix& a, std::span<const double> b);
  /// v <- v + sign * w, aligning the two exponents.
  void add(const ScaledVector& w, double sign = 1.0);

  /// Coordinates as plain doubles; may overflow or underflow.
  std::vector<double> materialize() const;

 private:
  void renormalize() noexcept;

  std::vector<double> y_;
  std::vector<double> scratch_;
  std::int64_t e_ = 0;
  double l1_ = 0.0;
};

/// Tracks the columns of a matrix product A_n ... A_1 as scaled vectors.
class ProductBundle {
 public:
  explicit ProductBundle(std::size_t dim);

  std::size_t dim() const noexcept { return cols_.size(); }
  const ScaledVector& column(std::size_t j) const noexcept { return cols_[j]; }

  /// P <- A P.
  void left_multiply(const ConeMatrix& a);

  /// ln ||P||, the log of the largest column sum.
  double log_norm() const noexcept;
  bool norm_at_most(double bound) const noexcept;

  /// Diameter of the column directions in the Hennion distance.
  double direction_diameter() const;

  /// Materialized matrix; only meaningful when entries are in double range.
  ConeMatrix to_matrix() const;

 private:
  std::vector<ScaledVector> cols_;
};

}  // namespace critmat
