#pragma once

namespace qosa {

/// Standard normal density.
double std_normal_pdf(double x);

/// Standard normal distribution function, absolute error below 1e-12.
/// Saturates to 0/1 in the far tails instead of raising.
double std_normal_cdf(double x);

/// Inverse of std_normal_cdf on (0,1). Rational approximation polished by
/// Halley iterations; the returned x satisfies |cdf(x) - p| <= 1e-10.
/// Throws std::domain_error for p outside (0,1).
double std_normal_quantile(double p);

}  // namespace qosa
