#include "qosa/contrast.hpp"

#include <algorithm>
#include <cassert>
#include <vector>

namespace qosa {

double empirical_quantile(std::span<const double> sorted_sample, QuantileLevel alpha) {
  if (sorted_sample.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
  assert(std::is_sorted(sorted_sample.begin(), sorted_sample.end()));
  return sorted_sample[quantile_order_index(alpha.value(), sorted_sample.size()) - 1];
}

double truncated_expectation(std::span<const double> sample, double threshold) {
  if (sample.empty()) throw std::invalid_argument("truncated_expectation: empty sample");
  double acc = 0.0;
  for (double y : sample)
    if (y <= threshold) acc += y;
  return acc / static_cast<double>(sample.size());
}

double mean_pinball_loss(std::span<const double> sample, double theta, QuantileLevel alpha) {
  if (sample.empty()) throw std::invalid_argument("mean_pinball_loss: empty sample");
  double acc = 0.0;
  for (double y : sample) acc += pinball_loss(y, theta, alpha);
  return acc / static_cast<double>(sample.size());
}

AverageContrast average_contrast(std::span<const double> sample, const ContrastKind& kind) {
  if (sample.empty()) throw std::invalid_argument("average_contrast: empty sample");
  const double n = static_cast<double>(sample.size());
  double value;
  if (kind.is_pinball()) {
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    double mean = 0.0;
    for (double y : sorted) mean += y;
    mean /= n;
    double q = empirical_quantile(sorted, kind.alpha());
    value = kind.alpha().value() * mean - truncated_expectation(sample, q);
  } else {
    double mean = 0.0;
    for (double y : sample) mean += y;
    mean /= n;
    double acc = 0.0;
    for (double y : sample) acc += squared_loss(y, mean);
    value = acc / n;
  }
  return AverageContrast{value, value < kDegenerateContrast};
}

}  // namespace qosa
