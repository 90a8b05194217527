#include "critmat/scaled_vector.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "critmat/projective_metric.hpp"

namespace critmat {

namespace {

constexpr int kLowBits = -32;
constexpr int kHighBits = 32;
// b is added without recentering while 2^-e |b| stays below 2^kRecenterBits
// relative to the current mantissa range.
constexpr int kRecenterBits = 900;

double l1(std::span<const double> v) noexcept {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

}  // namespace

ScaledVector::ScaledVector(std::span<const double> coords, std::int64_t exponent)
    : y_(coords.begin(), coords.end()), scratch_(coords.size()), e_(exponent) {
  for (double v : y_) {
    if (!std::isfinite(v)) throw std::invalid_argument("scaled vector needs finite coordinates");
  }
  renormalize();
}

void ScaledVector::renormalize() noexcept {
  l1_ = l1(y_);
  if (l1_ == 0.0) {
    e_ = 0;
    return;
  }
  const int k = std::ilogb(l1_);
  if (k < kLowBits || k > kHighBits) {
    for (double& v : y_) v = std::ldexp(v, -k);
    e_ += k;
    l1_ = l1(y_);
  }
}

double ScaledVector::log_norm() const noexcept {
  if (l1_ == 0.0) return -INFINITY;
  return static_cast<double>(e_) * std::numbers::ln2 + std::log(l1_);
}

double ScaledVector::log2_norm() const noexcept {
  if (l1_ == 0.0) return -INFINITY;
  return static_cast<double>(e_) + std::log2(l1_);
}

bool ScaledVector::norm_at_most(double bound) const noexcept {
  if (l1_ == 0.0) return true;
  // |v| = 2^e l1 <= bound  <=>  l1 <= 2^-e bound; ldexp is exact unless it
  // saturates, and saturation gives the right answer in both directions.
  const std::int64_t shift = std::clamp<std::int64_t>(-e_, -4000, 4000);
  return l1_ <= std::ldexp(bound, static_cast<int>(shift));
}

void ScaledVector::apply(const ConeMatrix& a) {
  a.apply(y_, scratch_);
  std::swap(y_, scratch_);
  renormalize();
}

void ScaledVector::apply_affine(const ConeMatrix& a, std::span<const double> b) {
  a.apply(y_, scratch_);
  const double nb = l1(b);
  if (nb == 0.0) {
    std::swap(y_, scratch_);
    renormalize();
    return;
  }
  const std::int64_t eb = std::ilogb(nb);
  if (l1_ == 0.0) {
    // X = 0: the new state is b itself
    e_ = 0;
    for (std::size_t i = 0; i < b.size(); ++i) y_[i] = b[i];
    renormalize();
    return;
  }
  if (eb - e_ <= kRecenterBits) {
    const int shift = static_cast<int>(std::max<std::int64_t>(-e_, -4000));
    for (std::size_t i = 0; i < b.size(); ++i) scratch_[i] += std::ldexp(b[i], shift);
    std::swap(y_, scratch_);
  } else {
    // b dominates: center the representation at b's magnitude instead
    const int shift = static_cast<int>(std::max<std::int64_t>(e_ - eb, -4000));
    for (std::size_t i = 0; i < b.size(); ++i) {
      y_[i] = std::ldexp(scratch_[i], shift) + std::ldexp(b[i], static_cast<int>(-eb));
    }
    e_ = eb;
  }
  renormalize();
}

void ScaledVector::add(const ScaledVector& w, double sign) {
  if (w.dim() != dim()) throw std::invalid_argument("scaled vector dimension mismatch");
  if (w.is_zero()) return;
  if (is_zero()) {
    y_ = w.y_;
    for (double& v : y_) v *= sign;
    e_ = w.e_;
    renormalize();
    return;
  }
  const std::int64_t e = std::max(e_, w.e_);
  const int mine = static_cast<int>(std::max<std::int64_t>(e_ - e, -4000));
  const int theirs = static_cast<int>(std::max<std::int64_t>(w.e_ - e, -4000));
  for (std::size_t i = 0; i < y_.size(); ++i) {
    y_[i] = std::ldexp(y_[i], mine) + sign * std::ldexp(w.y_[i], theirs);
  }
  e_ = e;
  renormalize();
}

std::vector<double> ScaledVector::materialize() const {
  std::vector<double> out(y_.size());
  const int e = static_cast<int>(std::clamp<std::int64_t>(e_, -4000, 4000));
  for (std::size_t i = 0; i < y_.size(); ++i) out[i] = std::ldexp(y_[i], e);
  return out;
}

ProductBundle::ProductBundle(std::size_t dim) {
  cols_.reserve(dim);
  std::vector<double> e(dim, 0.0);
  for (std::size_t j = 0; j < dim; ++j) {
    e[j] = 1.0;
    cols_.emplace_back(e);
    e[j] = 0.0;
  }
}

void ProductBundle::left_multiply(const ConeMatrix& a) {
  for (auto& c : cols_) c.apply(a);
}

double ProductBundle::log_norm() const noexcept {
  double m = -INFINITY;
  for (const auto& c : cols_) m = std::max(m, c.log_norm());
  return m;
}

bool ProductBundle::norm_at_most(double bound) const noexcept {
  return std::all_of(cols_.begin(), cols_.end(),
                     [bound](const ScaledVector& c) { return c.norm_at_most(bound); });
}

double ProductBundle::direction_diameter() const {
  double diam = 0.0;
  for (std::size_t i = 0; i < cols_.size(); ++i)
    for (std::size_t j = i + 1; j < cols_.size(); ++j)
      diam = std::max(diam, hennion_distance(cols_[i].coords(), cols_[j].coords()));
  return diam;
}

ConeMatrix ProductBundle::to_matrix() const {
  const std::size_t d = cols_.size();
  std::vector<double> m(d * d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto col = cols_[j].materialize();
    for (std::size_t i = 0; i < d; ++i) m[i * d + j] = col[i];
  }
  return ConeMatrix(d, std::move(m));
}

}  // namespace critmat
