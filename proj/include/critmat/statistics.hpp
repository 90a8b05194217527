#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace critmat {

double mean(std::span<const double> v);
/// Unbiased sample variance; 0 for fewer than two values.
double sample_variance(std::span<const double> v);
double median(std::vector<double> v);
/// Linear interpolation between order statistics, p in [0, 1].
double quantile(std::vector<double> v, double p);

struct LineFit {
  double slope;
  double intercept;
};

/// Ordinary least squares y = intercept + slope * x.
LineFit least_squares(std::span<const double> x, std::span<const double> y);

double normal_cdf(double z);

/// Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b|.
double ks_two_sample(std::vector<double> a, std::vector<double> b);
/// Asymptotic critical value of the two-sample statistic at level alpha.
double ks_critical_two_sample(std::size_t n, std::size_t m, double alpha = 0.05);
/// One-sample distance to a continuous cdf.
double ks_one_sample(std::vector<double> v, const std::function<double(double)>& cdf);

/// Hill estimator of the tail index 1/xi over the top `k` order statistics of
/// positive data; returns NaN when fewer than k + 1 positive values exist.
double hill_tail_index(std::vector<double> v, std::size_t k);

}  // namespace critmat
