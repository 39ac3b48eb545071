#pragma once

// Small statistics toolkit for the Monte Carlo estimators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace cpa {

/// Binomial proportion with its Wilson score interval.
struct Proportion {
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;
  double p = 0.0;
  double lo = 0.0;
  double hi = 1.0;
  // Binomial standard error sqrt(p(1-p)/trials).
  double se = 0.0;
};

Proportion wilson(std::uint64_t successes, std::uint64_t trials, double z = 1.959963984540054);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
template <class Cdf>
KsResult ks_one_sample(std::vector<double> sample, Cdf&& cdf);
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);
/// Asymptotic Kolmogorov distribution tail P(K > x).
double kolmogorov_tail(double x);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Least squares y = intercept + slope * x; r2 is the coefficient of determination.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> v);
double median(std::vector<double> v);
double quantile(std::vector<double> v, double q);
double pearson(std::span<const double> x, std::span<const double> y);

template <class Cdf>
KsResult ks_one_sample(std::vector<double> sample, Cdf&& cdf) {
  KsResult r;
  if (sample.empty()) return r;
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  r.statistic = d;
  const double sn = std::sqrt(n);
  r.p_value = kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d);
  return r;
}

}  // namespace cpa
