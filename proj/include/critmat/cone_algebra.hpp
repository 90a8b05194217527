#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace critmat {

inline constexpr std::size_t kMinDim = 2;
inline constexpr std::size_t kMaxDim = 64;

/// Relative tolerance used by every inequality check in the library.
inline constexpr double kRelTol = 1e-12;

/// lhs <= rhs up to `tol` relative to the larger magnitude of the two sides.
inline bool leq_rel(double lhs, double rhs, double tol = kRelTol) noexcept {
  return lhs <= rhs + tol * std::max(std::abs(lhs), std::abs(rhs));
}

/// A vector of the nonnegative cone R_+^d, normed with |x| = sum_i x_i.
class ConePoint {
 public:
  explicit ConePoint(std::vector<double> coords);
  ConePoint(std::initializer_list<double> coords);

  static ConePoint zero(std::size_t dim);
  static ConePoint basis(std::size_t dim, std::size_t i);
  static ConePoint uniform(std::size_t dim);

  std::size_t dim() const noexcept { return coords_.size(); }
  double operator[](std::size_t i) const noexcept { return coords_[i]; }
  std::span<const double> coords() const noexcept { return coords_; }

  double norm() const noexcept;
  bool is_zero() const noexcept;

  friend bool operator==(const ConePoint&, const ConePoint&) = default;

 private:
  std::vector<double> coords_;
};

struct Norms {
  double col_max;  // ||A||, largest column sum
  double col_min;  // v(A), smallest column sum
  double frak_n;   // max(1 / v(A), ||A||)
};

/// Immutable d x d nonnegative matrix in which every column has a positive
/// entry. Column sums are cached at construction.
class ConeMatrix {
 public:
  ConeMatrix(std::size_t dim, std::vector<double> row_major);
  ConeMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static ConeMatrix identity(std::size_t dim);
  static ConeMatrix ones(std::size_t dim);
  static ConeMatrix constant(std::size_t dim, double value);

  std::size_t dim() const noexcept { return dim_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return a_[i * dim_ + j]; }
  std::span<const double> entries() const noexcept { return a_; }

  double col_max() const noexcept { return col_max_; }
  double col_min() const noexcept { return col_min_; }
  double row_sum(std::size_t i) const noexcept;

  ConeMatrix scaled(double c) const;

  // out = A x. Works for signed x as well; out must not alias x.
  void apply(std::span<const double> x, std::span<double> out) const noexcept;
  ConePoint operator*(const ConePoint& x) const;

  friend bool operator==(const ConeMatrix& a, const ConeMatrix& b) noexcept {
    return a.dim_ == b.dim_ && a.a_ == b.a_;
  }

 private:
  std::size_t dim_;
  std::vector<double> a_;
  double col_max_ = 0.0;
  double col_min_ = 0.0;
};

Norms norms(const ConeMatrix& a) noexcept;

/// Largest delta with A in S_delta: the minimum over nonzero rows of
/// (row min) / (row max). All-zero rows impose nothing and are skipped.
double s_delta_margin(const ConeMatrix& a) noexcept;

/// min over nonzero rows i and all columns j of A(i,j) / (row sum i).
/// For A in S_delta this is at least delta / d.
double cone_margin(const ConeMatrix& a) noexcept;

ConeMatrix compose(const ConeMatrix& a, const ConeMatrix& b);

}  // namespace critmat
