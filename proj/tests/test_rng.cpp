#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <set>

#include "doctest.h"
#include "qosa/rng.hpp"
#include "qosa/scalar_law.hpp"

using namespace qosa;

TEST_CASE("identical (seed, substream) gives identical draws") {
  RandomStream a(42, 3), b(42, 3);
  for (std::uint64_t i = 0; i < 1000; ++i) {
    CHECK(a.bits_at(i) == b.bits_at(i));
    CHECK(a.uniform_at(i) == b.uniform_at(i));
  }
}

TEST_CASE("substreams and seeds decorrelate") {
  RandomStream a(42, 0), b(42, 1), c(43, 0);
  int same_ab = 0, same_ac = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    same_ab += a.bits_at(i) == b.bits_at(i);
    same_ac += a.bits_at(i) == c.bits_at(i);
  }
  CHECK(same_ab == 0);
  CHECK(same_ac == 0);
  CHECK(a.substream(1).bits_at(7) == b.bits_at(7));
}

TEST_CASE("uniforms stay strictly inside (0,1)") {
  RandomStream s(7);
  for (std::uint64_t i = 0; i < 100000; ++i) {
    double u = s.uniform_at(i);
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("uniform integers respect the bound") {
  RandomStream s(9);
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 3000; ++i) {
    std::uint64_t v = s.uniform_int_at(i, 7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("sample moments match the law") {
  const std::size_t n = 1'000'000;
  const double bound = 4.0 / std::sqrt(static_cast<double>(n));
  RandomStream s(2021);
  double mean = 0.0, var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double z = s.normal_at(i);
    mean += z;
    var += z * z;
  }
  mean /= n;
  var = var / n - mean * mean;
  CHECK(std::abs(mean) < bound);
  CHECK(std::abs(var - 1.0) < 3.0 * bound);

  ScalarLaw expo = ScalarLaw::exponential(2.0);
  double emean = 0.0;
  for (std::size_t i = 0; i < n; ++i) emean += expo.draw(s.substream(5), i);
  emean /= n;
  CHECK(std::abs(emean - 0.5) < bound);
}

TEST_CASE("scalar law quantile and cdf are inverse") {
  for (const ScalarLaw& law : {ScalarLaw::exponential(0.7), ScalarLaw::normal(1.0, 2.0),
                               ScalarLaw::lognormal(0.5, 0.8)}) {
    for (double p : {0.05, 0.3, 0.5, 0.9})
      CHECK(law.cdf(law.quantile(p)) == doctest::Approx(p).epsilon(1e-9));
  }
  CHECK_THROWS_AS(ScalarLaw::exponential(0.0), std::invalid_argument);
  CHECK_THROWS_AS(ScalarLaw::normal(0.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(ScalarLaw::exponential(1.0).quantile(1.0), std::domain_error);
}
