#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "critmat/cone_algebra.hpp"

namespace critmat {

/// A point of the simplex {x in R_+^d : |x| = 1}.
class Direction {
 public:
  /// Normalizes a nonzero cone vector onto the simplex.
  static Direction normalize(std::span<const double> x);
  explicit Direction(const ConePoint& x) : Direction(normalize(x.coords())) {}

  std::size_t dim() const noexcept { return coords_.size(); }
  double operator[](std::size_t i) const noexcept { return coords_[i]; }
  std::span<const double> coords() const noexcept { return coords_; }
  ConePoint point() const { return ConePoint(coords_); }

 private:
  Direction() = default;
  std::vector<double> coords_;
};

struct MetricConstants {
  double delta;
  double rho_delta;  // (1 - delta^4) / (1 + delta^4)

  static MetricConstants for_delta(double delta);
};

/// Uniform bound on the contraction coefficient of any matrix in S_delta.
double contraction_bound(double delta);

/// Hennion distance (1 - m(x,y) m(y,x)) / (1 + m(x,y) m(y,x)) between two
/// nonzero cone vectors. Scale invariant in both arguments, values in [0, 1].
double hennion_distance(std::span<const double> x, std::span<const double> y);
double hennion_distance(const Direction& x, const Direction& y);

struct ProjectiveImage {
  Direction direction;  // A . x = Ax / |Ax|
  double log_norm;      // rho(A, x) = ln |Ax|
};

ProjectiveImage projective_action(const ConeMatrix& a, const Direction& x);

/// [A], the diameter of A . X. The image of the simplex is the convex hull of
/// the column directions, so the maximum over column pairs is exact.
double contraction_coefficient(const ConeMatrix& a);

/// Replaces every all-zero row by the first row with a positive sum. The
/// result has a positive entry in each row and column and induces the same
/// distances as A on image pairs.
ConeMatrix complete_zero_rows(const ConeMatrix& a);

}  // namespace critmat
