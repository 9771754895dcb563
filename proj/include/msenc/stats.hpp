#pragma once

#include <span>

namespace msenc {

// Standard normal CDF.
double normal_cdf(double x);

// Standard normal quantile, accurate to full double precision.
// Throws DataError outside (0, 1).
double normal_quantile(double p);

double mean(std::span<const double> xs);

// Unbiased sample variance (divides by n-1).
double sample_variance(std::span<const double> xs);

double sample_sd(std::span<const double> xs);

}  // namespace msenc
