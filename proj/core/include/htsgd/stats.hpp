#pragma once

#include <span>

namespace htsgd::stats {

double mean(std::span<const double> xs);
/// Sample (n-1) standard deviation; 0 for fewer than two values.
double sample_sd(std::span<const double> xs);
/// Linear-interpolation quantile (type 7); q in [0, 1].
double quantile(std::span<const double> xs, double q);
double median(std::span<const double> xs);
double iqr(std::span<const double> xs);
/// Least-squares slope of y on x.
double ols_slope(std::span<const double> x, std::span<const double> y);
/// Least-squares slope of log(y) on log(x); all values must be positive.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace htsgd::stats
