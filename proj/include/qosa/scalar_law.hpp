#pragma once

#include <cstdint>

#include "qosa/rng.hpp"

namespace qosa {

/// One-dimensional input distribution. Draws go through the inverse CDF so a
/// counter-based stream maps sample index -> value deterministically.
class ScalarLaw {
 public:
  enum class Kind { exponential, normal, lognormal };

  static ScalarLaw exponential(double rate);
  static ScalarLaw normal(double mean, double sd);
  static ScalarLaw lognormal(double log_mean, double log_sd);

  Kind kind() const { return kind_; }
  /// First parameter: rate / mean / log-mean.
  double param_a() const { return a_; }
  /// Second parameter: unused / sd / log-sd.
  double param_b() const { return b_; }

  double mean() const;
  double variance() const;
  double third_moment() const;  // E[X^3]
  double quantile(double p) const;
  double cdf(double x) const;

  double draw(const RandomStream& stream, std::uint64_t i) const {
    return quantile(stream.uniform_at(i));
  }

 private:
  ScalarLaw(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}

  Kind kind_;
  double a_;
  double b_;
};

}  // namespace qosa
