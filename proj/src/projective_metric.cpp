#include "critmat/projective_metric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace critmat {

Direction Direction::normalize(std::span<const double> x) {
  if (x.size() < kMinDim || x.size() > kMaxDim) {
    throw std::invalid_argument("direction dimension must lie in [2, 64]");
  }
  double s = 0.0;
  for (double v : x) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("direction needs finite nonnegative coordinates");
    }
    s += v;
  }
  if (!(s > 0.0)) throw std::invalid_argument("cannot normalize the zero vector");
  Direction d;
  d.coords_.assign(x.begin(), x.end());
  for (double& v : d.coords_) v /= s;
  return d;
}

MetricConstants MetricConstants::for_delta(double delta) {
  return {delta, contraction_bound(delta)};
}

double contraction_bound(double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must lie in (0, 1]");
  const double d4 = delta * delta * delta * delta;
  return (1.0 - d4) / (1.0 + d4);
}

namespace {

// min over i with y_i > 0 of x_i / y_i
double min_ratio(std::span<const double> x, std::span<const double> y) noexcept {
  double m = INFINITY;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] > 0.0) m = std::min(m, x[i] / y[i]);
  }
  return m;
}

}  // namespace

double hennion_distance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("dimension mismatch in distance");
  const bool x_zero = std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; });
  const bool y_zero = std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; });
  if (x_zero || y_zero) throw std::invalid_argument("distance undefined for the zero vector");
  const double mm = min_ratio(x, y) * min_ratio(y, x);
  return (1.0 - mm) / (1.0 + mm);
}

double hennion_distance(const Direction& x, const Direction& y) {
  return hennion_distance(x.coords(), y.coords());
}

ProjectiveImage projective_action(const ConeMatrix& a, const Direction& x) {
  if (a.dim() != x.dim()) throw std::invalid_argument("dimension mismatch in projective action");
  std::vector<double> ax(a.dim());
  a.apply(x.coords(), ax);
  const double n = std::accumulate(ax.begin(), ax.end(), 0.0);
  return {Direction::normalize(ax), std::log(n)};
}

double contraction_coefficient(const ConeMatrix& a) {
  const std::size_t d = a.dim();
  std::vector<double> cols(d * d);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < d; ++i) cols[j * d + i] = a(i, j);
  double diam = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    std::span<const double> ci(cols.data() + i * d, d);
    for (std::size_t j = i + 1; j < d; ++j) {
      std::span<const double> cj(cols.data() + j * d, d);
      diam = std::max(diam, hennion_distance(ci, cj));
    }
  }
  return diam;
}

ConeMatrix complete_zero_rows(const ConeMatrix& a) {
  const std::size_t d = a.dim();
  std::size_t i0 = d;
  for (std::size_t i = 0; i < d; ++i) {
    if (a.row_sum(i) > 0.0) {
      i0 = i;
      break;
    }
  }
  if (i0 == d) throw std::invalid_argument("all rows are zero");
  std::vector<double> b(a.entries().begin(), a.entries().end());
  for (std::size_t i = 0; i < d; ++i) {
    if (a.row_sum(i) > 0.0) continue;
    for (std::size_t j = 0; j < d; ++j) b[i * d + j] = a(i0, j);
  }
  return ConeMatrix(d, std::move(b));
}

}  // namespace critmat
