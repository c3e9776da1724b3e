#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace kdl {

struct MeanEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;  // trailing underscore: `stderr` is a libc macro
  std::size_t n = 0;
};

// Plain mean and standard error for independent samples.
MeanEstimate mean_iid(std::span<const double> xs);

// Batch-means estimate for a (possibly autocorrelated) series. The series is
// cut into `batches` contiguous blocks; the standard error is that of the
// block means. Falls back to fewer batches when the series is short, and
// reports stderr = +inf when fewer than two batches are possible.
MeanEstimate batch_means(std::span<const double> xs, std::size_t batches = 50);

double sample_variance(std::span<const double> xs);

// Variance estimate with its standard error (from the fourth central moment).
struct VarianceEstimate {
  double variance = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};
VarianceEstimate variance_with_error(std::span<const double> xs);

// One-sample Kolmogorov-Smirnov test of `xs` against a continuous CDF.
struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};
KsResult ks_test(std::vector<double> xs, const std::function<double(double)>& cdf);

// Two-sample Kolmogorov-Smirnov test.
KsResult ks_test_two_sample(std::vector<double> a, std::vector<double> b);

// Asymptotic Kolmogorov survival function Q(t) = P(sqrt(n) D > t).
double kolmogorov_survival(double t);

// Upper tail of the chi-square distribution.
double chi_square_sf(double statistic, double dof);

// Least-squares slope and intercept of y against x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace kdl
