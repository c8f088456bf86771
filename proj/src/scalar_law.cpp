#include "qosa/scalar_law.hpp"

#include <cmath>
#include <stdexcept>

#include "qosa/normal.hpp"

namespace qosa {

ScalarLaw ScalarLaw::exponential(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("ScalarLaw: exponential rate must be positive");
  return ScalarLaw(Kind::exponential, rate, 0.0);
}

ScalarLaw ScalarLaw::normal(double mean, double sd) {
  if (!(sd > 0.0)) throw std::invalid_argument("ScalarLaw: normal sd must be positive");
  return ScalarLaw(Kind::normal, mean, sd);
}

ScalarLaw ScalarLaw::lognormal(double log_mean, double log_sd) {
  if (!(log_sd > 0.0)) throw std::invalid_argument("ScalarLaw: lognormal log-sd must be positive");
  return ScalarLaw(Kind::lognormal, log_mean, log_sd);
}

double ScalarLaw::mean() const {
  switch (kind_) {
    case Kind::exponential: return 1.0 / a_;
    case Kind::normal: return a_;
    case Kind::lognormal: return std::exp(a_ + 0.5 * b_ * b_);
  }
  return 0.0;
}

double ScalarLaw::variance() const {
  switch (kind_) {
    case Kind::exponential: return 1.0 / (a_ * a_);
    case Kind::normal: return b_ * b_;
    case Kind::lognormal: {
      double s2 = b_ * b_;
      return (std::exp(s2) - 1.0) * std::exp(2.0 * a_ + s2);
    }
  }
  return 0.0;
}

double ScalarLaw::third_moment() const {
  switch (kind_) {
    case Kind::exponential: return 6.0 / (a_ * a_ * a_);
    case Kind::normal: return a_ * a_ * a_ + 3.0 * a_ * b_ * b_;
    case Kind::lognormal: return std::exp(3.0 * a_ + 4.5 * b_ * b_);
  }
  return 0.0;
}

double ScalarLaw::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("ScalarLaw::quantile: p must lie in (0,1)");
  switch (kind_) {
    case Kind::exponential: return -std::log1p(-p) / a_;
    case Kind::normal: return a_ + b_ * std_normal_quantile(p);
    case Kind::lognormal: return std::exp(a_ + b_ * std_normal_quantile(p));
  }
  return 0.0;
}

double ScalarLaw::cdf(double x) const {
  switch (kind_) {
    case Kind::exponential: return x <= 0.0 ? 0.0 : -std::expm1(-a_ * x);
    case Kind::normal: return std_normal_cdf((x - a_) / b_);
    case Kind::lognormal: return x <= 0.0 ? 0.0 : std_normal_cdf((std::log(x) - a_) / b_);
  }
  return 0.0;
}

}  // namespace qosa
