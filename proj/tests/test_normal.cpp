#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "qosa/normal.hpp"

using namespace qosa;

TEST_CASE("cdf reference values") {
  CHECK(std_normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std_normal_cdf(-1.0) == doctest::Approx(0.15865525393145707).epsilon(1e-12));
  CHECK(std_normal_cdf(-std::sqrt(5.0)) == doctest::Approx(0.012673659338734126).epsilon(1e-12));
  CHECK(std_normal_cdf(1.0) + std_normal_cdf(-1.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("cdf saturates in the tails") {
  CHECK(std_normal_cdf(-40.0) == 0.0);
  CHECK(std_normal_cdf(40.0) == 1.0);
  CHECK(std_normal_cdf(-10.0) > 0.0);
}

TEST_CASE("quantile reference values and round trip") {
  CHECK(std_normal_quantile(0.5) == 0.0);
  CHECK(std_normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(std_normal_quantile(std_normal_cdf(1.96)) == doctest::Approx(1.96).epsilon(1e-9));
  for (double x = -6.0; x <= 6.0; x += 0.37) {
    double back = std_normal_quantile(std_normal_cdf(x));
    CHECK(std::abs(back - x) < 1e-8);
    CHECK(std::abs(std_normal_cdf(back) - std_normal_cdf(x)) < 1e-12);
  }
}

TEST_CASE("upper-half quantiles are exact negations of their complements") {
  for (double p : {0.69, 0.877, 0.989})
    CHECK(std_normal_quantile(p) == -std_normal_quantile(1.0 - p));
}

TEST_CASE("quantile rejects levels outside (0,1)") {
  CHECK_THROWS_AS(std_normal_quantile(0.0), std::domain_error);
  CHECK_THROWS_AS(std_normal_quantile(1.0), std::domain_error);
  CHECK_THROWS_AS(std_normal_quantile(-0.2), std::domain_error);
  CHECK_THROWS_AS(std_normal_quantile(std::nan("")), std::domain_error);
}

TEST_CASE("deep-tail quantiles stay accurate") {
  for (double p : {1e-12, 1e-8, 1e-4}) {
    double x = std_normal_quantile(p);
    CHECK(std::abs(std_normal_cdf(x) - p) <= 1e-10);
  }
}
