#include "critmat/cone_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace critmat {

namespace {

void check_dim(std::size_t dim) {
  if (dim < kMinDim || dim > kMaxDim) {
    throw std::invalid_argument("dimension must lie in [2, 64], got " + std::to_string(dim));
  }
}

}  // namespace

ConePoint::ConePoint(std::vector<double> coords) : coords_(std::move(coords)) {
  check_dim(coords_.size());
  for (double c : coords_) {
    if (!std::isfinite(c) || c < 0.0) {
      throw std::invalid_argument("cone point coordinates must be finite and nonnegative");
    }
  }
}

ConePoint::ConePoint(std::initializer_list<double> coords)
    : ConePoint(std::vector<double>(coords)) {}

ConePoint ConePoint::zero(std::size_t dim) { return ConePoint(std::vector<double>(dim, 0.0)); }

ConePoint ConePoint::basis(std::size_t dim, std::size_t i) {
  std::vector<double> c(dim, 0.0);
  if (i >= dim) throw std::invalid_argument("basis index out of range");
  c[i] = 1.0;
  return ConePoint(std::move(c));
}

ConePoint ConePoint::uniform(std::size_t dim) {
  return ConePoint(std::vector<double>(dim, 1.0 / static_cast<double>(dim)));
}

double ConePoint::norm() const noexcept {
  return std::accumulate(coords_.begin(), coords_.end(), 0.0);
}

bool ConePoint::is_zero() const noexcept {
  return std::all_of(coords_.begin(), coords_.end(), [](double c) { return c == 0.0; });
}

ConeMatrix::ConeMatrix(std::size_t dim, std::vector<double> row_major)
    : dim_(dim), a_(std::move(row_major)) {
  check_dim(dim_);
  if (a_.size() != dim_ * dim_) {
    throw std::invalid_argument("matrix needs " + std::to_string(dim_ * dim_) + " entries, got " +
                                std::to_string(a_.size()));
  }
  for (double v : a_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("matrix entries must be finite and nonnegative");
    }
  }
  col_max_ = 0.0;
  col_min_ = INFINITY;
  for (std::size_t j = 0; j < dim_; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) s += a_[i * dim_ + j];
    col_max_ = std::max(col_max_, s);
    col_min_ = std::min(col_min_, s);
  }
  if (!(col_min_ > 0.0)) {
    throw std::invalid_argument("matrix has a zero column (not in S)");
  }
}

ConeMatrix::ConeMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : ConeMatrix(rows.size(), [&] {
        std::vector<double> flat;
        for (const auto& r : rows) {
          if (r.size() != rows.size()) throw std::invalid_argument("matrix must be square");
          flat.insert(flat.end(), r.begin(), r.end());
        }
        return flat;
      }()) {}

ConeMatrix ConeMatrix::identity(std::size_t dim) {
  std::vector<double> a(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) a[i * dim + i] = 1.0;
  return ConeMatrix(dim, std::move(a));
}

ConeMatrix ConeMatrix::ones(std::size_t dim) { return constant(dim, 1.0); }

ConeMatrix ConeMatrix::constant(std::size_t dim, double value) {
  return ConeMatrix(dim, std::vector<double>(dim * dim, value));
}

double ConeMatrix::row_sum(std::size_t i) const noexcept {
  const double* row = a_.data() + i * dim_;
  return std::accumulate(row, row + dim_, 0.0);
}

ConeMatrix ConeMatrix::scaled(double c) const {
  if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("scale must be positive");
  std::vector<double> a = a_;
  for (double& v : a) v *= c;
  return ConeMatrix(dim_, std::move(a));
}

void ConeMatrix::apply(std::span<const double> x, std::span<double> out) const noexcept {
  const double* row = a_.data();
  for (std::size_t i = 0; i < dim_; ++i, row += dim_) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) s += row[j] * x[j];
    out[i] = s;
  }
}

ConePoint ConeMatrix::operator*(const ConePoint& x) const {
  if (x.dim() != dim_) throw std::invalid_argument("dimension mismatch in A x");
  std::vector<double> out(dim_);
  apply(x.coords(), out);
  return ConePoint(std::move(out));
}

Norms norms(const ConeMatrix& a) noexcept {
  return {a.col_max(), a.col_min(), std::max(1.0 / a.col_min(), a.col_max())};
}

double s_delta_margin(const ConeMatrix& a) noexcept {
  const std::size_t d = a.dim();
  double margin = 1.0;
  for (std::size_t i = 0; i < d; ++i) {
    double lo = INFINITY;
    double hi = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      lo = std::min(lo, a(i, j));
      hi = std::max(hi, a(i, j));
    }
    if (hi > 0.0) margin = std::min(margin, lo / hi);
  }
  return margin;
}

double cone_margin(const ConeMatrix& a) noexcept {
  const std::size_t d = a.dim();
  double margin = INFINITY;
  for (std::size_t i = 0; i < d; ++i) {
    const double s = a.row_sum(i);
    if (s <= 0.0) continue;
    for (std::size_t j = 0; j < d; ++j) margin = std::min(margin, a(i, j) / s);
  }
  return margin;
}

ConeMatrix compose(const ConeMatrix& a, const ConeMatrix& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("dimension mismatch in compose");
  const std::size_t d = a.dim();
  std::vector<double> c(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < d; ++j) c[i * d + j] += aik * b(k, j);
    }
  }
  return ConeMatrix(d, std::move(c));
}

}  // namespace critmat
