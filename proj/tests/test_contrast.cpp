#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <bit>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "qosa/contrast.hpp"
#include "qosa/quadrature.hpp"
#include "qosa/rng.hpp"

using namespace qosa;

TEST_CASE("pinball loss values") {
  CHECK(pinball_loss(1.0, 0.0, QuantileLevel(0.5)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(pinball_loss(0.0, 1.0, QuantileLevel(0.9)) == doctest::Approx(0.1).epsilon(1e-12));
  for (double theta : {-2.0, 0.0, 3.7})
    for (double a : {0.1, 0.5, 0.99}) CHECK(pinball_loss(theta, theta, QuantileLevel(a)) == 0.0);
  RandomStream s(1);
  for (int i = 0; i < 200; ++i) {
    double y = s.normal_at(2 * i), th = s.normal_at(2 * i + 1);
    double v = pinball_loss(y, th, QuantileLevel(0.3));
    CHECK(v >= 0.0);
    if (y != th) CHECK(v > 0.0);
  }
}

TEST_CASE("quantile level validation") {
  CHECK_THROWS_AS(QuantileLevel(0.0), std::invalid_argument);
  CHECK_THROWS_AS(QuantileLevel(1.0), std::invalid_argument);
  CHECK(QuantileLevel(0.25).complement().value() == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("empirical quantile is the ceil(alpha n) order statistic") {
  std::vector<double> s5 = {1, 2, 3, 4, 5};
  CHECK(empirical_quantile(s5, QuantileLevel(0.5)) == 3.0);
  std::vector<double> s4 = {1, 2, 3, 4};
  CHECK(empirical_quantile(s4, QuantileLevel(0.25)) == 1.0);
  // the map alpha -> order statistic is a right-continuous step function
  CHECK(empirical_quantile(s4, QuantileLevel(0.20)) ==
        empirical_quantile(s4, QuantileLevel(0.24)));
  CHECK(empirical_quantile(s4, QuantileLevel(0.26)) ==
        empirical_quantile(s4, QuantileLevel(0.49)));
  CHECK(empirical_quantile(s4, QuantileLevel(0.999)) == 4.0);
  CHECK_THROWS_AS(empirical_quantile(std::vector<double>{}, QuantileLevel(0.5)),
                  std::invalid_argument);
}

TEST_CASE("empirical quantile minimizes the empirical pinball loss") {
  RandomStream s(3);
  for (int rep = 0; rep < 20; ++rep) {
    std::size_t n = 1 + s.uniform_int_at(1000 + rep, 60);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = s.normal_at(100 * rep + i);
    std::vector<double> sorted = y;
    std::sort(sorted.begin(), sorted.end());
    QuantileLevel a(0.05 + 0.9 * s.uniform_at(5000 + rep));
    double q = empirical_quantile(sorted, a);
    double best = mean_pinball_loss(y, q, a);
    for (double theta : sorted) CHECK(best <= mean_pinball_loss(y, theta, a));
  }
}

TEST_CASE("truncated expectation") {
  std::vector<double> y = {-1.0, 0.0, 2.0, 5.0};
  CHECK(truncated_expectation(y, std::numeric_limits<double>::infinity()) ==
        doctest::Approx(1.5).epsilon(1e-15));
  CHECK(truncated_expectation(y, -2.0) == 0.0);
  CHECK(truncated_expectation(y, 0.0) == doctest::Approx(-0.25).epsilon(1e-15));

  // against E[Z 1{Z<=q}] = -pdf(q) for a standard normal population
  RandomStream s(11);
  const std::size_t n = 400'000;
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = s.normal_at(i);
  double est = truncated_expectation(z, 0.0);
  double se = 4.0 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(est - (-1.0 / std::sqrt(2.0 * M_PI))) < se);
}

TEST_CASE("average contrast") {
  std::vector<double> two = {0.0, 2.0};
  auto sq = average_contrast(two, ContrastKind::squared());
  CHECK(sq.value == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(!sq.degenerate);

  std::vector<double> constant(100, 3.3);
  CHECK(average_contrast(constant, ContrastKind::pinball(QuantileLevel(0.4))).degenerate);
  CHECK(average_contrast(constant, ContrastKind::squared()).degenerate);

  RandomStream s(13);
  const std::size_t n = 400'000;
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = s.normal_at(i);
  auto pin = average_contrast(z, ContrastKind::pinball(QuantileLevel(0.5)));
  double phi0 = 1.0 / std::sqrt(2.0 * M_PI);
  CHECK(std::abs(pin.value - phi0) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("truncated-expectation lower bound over fixed-probability events") {
  RandomStream s(17);
  for (int rep = 0; rep < 50; ++rep) {
    std::size_t n = 2 + s.uniform_int_at(7000 + rep, 11);  // up to 12 atoms
    std::vector<double> atoms(n);
    for (std::size_t i = 0; i < n; ++i) atoms[i] = s.normal_at(100 * rep + i) * 3.0;
    std::sort(atoms.begin(), atoms.end());
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + atoms[i];
    for (std::uint64_t mask = 1; mask < (1ull << n); ++mask) {
      double event_sum = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (mask & (1ull << i)) event_sum += atoms[i];
      CHECK(prefix[static_cast<std::size_t>(std::popcount(mask))] <= event_sum);
    }
  }
}

TEST_CASE("quantile equivariance under shift and positive scale") {
  RandomStream s(19);
  for (int rep = 0; rep < 20; ++rep) {
    std::size_t n = 5 + s.uniform_int_at(8000 + rep, 200);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = s.normal_at(300 * rep + i);
    std::sort(y.begin(), y.end());
    QuantileLevel a(0.05 + 0.9 * s.uniform_at(9000 + rep));
    double q = empirical_quantile(y, a);
    double c = s.normal_at(777) * 5.0, k = std::exp(s.normal_at(778));
    std::vector<double> shifted(n), scaled(n);
    for (std::size_t i = 0; i < n; ++i) {
      shifted[i] = y[i] + c;
      scaled[i] = y[i] * k;
    }
    CHECK(empirical_quantile(shifted, a) == q + c);
    CHECK(empirical_quantile(scaled, a) == q * k);
    // the pinball losses of matched (y, theta) pairs are unchanged by shifts
    CHECK(pinball_loss(y[0] + c, q + c, a) ==
          doctest::Approx(pinball_loss(y[0], q, a)).epsilon(1e-12));
  }
}

TEST_CASE("adaptive quadrature on known integrals") {
  auto r1 = integrate_adaptive([](double x) { return x * x; }, 0.0, 1.0);
  CHECK(r1.converged);
  CHECK(r1.value == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  auto r2 = integrate_adaptive([](double x) { return std::sin(x); }, 0.0, M_PI);
  CHECK(r2.value == doctest::Approx(2.0).epsilon(1e-13));
  auto r3 = integrate_adaptive([](double x) { return std::exp(-x * x); }, 0.0, 10.0);
  CHECK(r3.value == doctest::Approx(std::sqrt(M_PI) / 2.0).epsilon(1e-12));
  // oscillatory integrand on a budget too small to resolve it
  auto r4 = integrate_adaptive([](double x) { return std::sin(200.0 * x * x); }, 0.0, 10.0,
                               1e-14, 1e-14, 4);
  CHECK(!r4.converged);
  CHECK_THROWS_AS(integrate_adaptive([](double) { return 1.0; }, 1.0, 0.0),
                  std::invalid_argument);
}
