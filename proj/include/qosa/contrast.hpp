#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

namespace qosa {

/// Quantile level restricted to the open interval (0,1).
class QuantileLevel {
 public:
  explicit QuantileLevel(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw std::invalid_argument("QuantileLevel: alpha must lie in (0,1)");
  }
  double value() const { return alpha_; }
  QuantileLevel complement() const { return QuantileLevel(1.0 - alpha_); }

 private:
  double alpha_;
};

/// Loss family selector: pinball(alpha) targets the alpha-quantile, squared
/// targets the mean.
class ContrastKind {
 public:
  static ContrastKind pinball(QuantileLevel alpha) { return ContrastKind(true, alpha.value()); }
  static ContrastKind squared() { return ContrastKind(false, 0.5); }

  bool is_pinball() const { return pinball_; }
  QuantileLevel alpha() const {
    if (!pinball_) throw std::logic_error("ContrastKind: squared loss has no quantile level");
    return QuantileLevel(alpha_);
  }

 private:
  ContrastKind(bool pinball, double alpha) : pinball_(pinball), alpha_(alpha) {}
  bool pinball_;
  double alpha_;
};

/// Pinball (check) loss (y - theta)(alpha - 1{y <= theta}); nonnegative, zero
/// iff y == theta.
inline double pinball_loss(double y, double theta, QuantileLevel alpha) {
  return (y - theta) * (alpha.value() - (y <= theta ? 1.0 : 0.0));
}

inline double squared_loss(double y, double theta) {
  double r = y - theta;
  return r * r;
}

/// 1-based order-statistic index of the type-1 empirical alpha-quantile:
/// ceil(alpha * n), clamped to [1, n].
inline std::size_t quantile_order_index(double alpha, std::size_t n) {
  double m = std::ceil(alpha * static_cast<double>(n));
  if (m < 1.0) return 1;
  if (m > static_cast<double>(n)) return n;
  return static_cast<std::size_t>(m);
}

/// Type-1 empirical quantile (left-continuous generalized inverse): the
/// ceil(alpha*n)-th order statistic. Requires sample sorted ascending.
double empirical_quantile(std::span<const double> sorted_sample, QuantileLevel alpha);

/// Mean of y * 1{y <= threshold} over the sample (no truncation of the
/// divisor: the full sample size stays in the denominator).
double truncated_expectation(std::span<const double> sample, double threshold);

/// Mean pinball loss (1/n) sum psi_alpha(y_i, theta).
double mean_pinball_loss(std::span<const double> sample, double theta, QuantileLevel alpha);

inline constexpr double kDegenerateContrast = 1e-14;

struct AverageContrast {
  double value;
  bool degenerate;  // value below kDegenerateContrast; normalizers must refuse
};

/// Empirical average contrast at the sample's own feature:
///  - pinball: alpha * mean - truncated_expectation(sample, empirical quantile)
///  - squared: population variance
AverageContrast average_contrast(std::span<const double> sample, const ContrastKind& kind);

}  // namespace qosa
