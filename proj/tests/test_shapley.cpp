#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "qosa/rng.hpp"
#include "qosa/shapley.hpp"

using namespace qosa;

namespace {

CostTable random_table(int d, std::uint64_t seed) {
  RandomStream s(seed);
  std::vector<double> costs(std::size_t{1} << d, 0.0);
  for (std::size_t m = 1; m < costs.size(); ++m) costs[m] = 2.0 * s.uniform_at(m) - 0.5;
  return CostTable(d, std::move(costs));
}

std::vector<double> brute_force(const CostTable& t) {
  const int d = t.dim();
  std::vector<int> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> acc(static_cast<std::size_t>(d), 0.0);
  std::size_t count = 0;
  do {
    std::uint64_t mask = 0;
    double prev = 0.0;
    for (int p : perm) {
      mask |= 1ull << p;
      acc[static_cast<std::size_t>(p)] += t.cost(mask) - prev;
      prev = t.cost(mask);
    }
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (auto& v : acc) v /= static_cast<double>(count);
  return acc;
}

}  // namespace

TEST_CASE("table validation") {
  CHECK_THROWS_AS(CostTable(2, {0.0, 1.0}), std::invalid_argument);          // wrong size
  CHECK_THROWS_AS(CostTable(2, {0.5, 1.0, 1.0, 2.0}), std::invalid_argument);  // c(empty) != 0
  CHECK_THROWS_AS(CostTable(2, {0.0, 1.0, std::nan(""), 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(CostTable(26, std::vector<double>(1, 0.0)), std::invalid_argument);
}

TEST_CASE("two players split as (a + t - b)/2") {
  const double a = 0.3, b = 0.9, t = 1.4;
  CostTable table(2, {0.0, a, b, t});
  auto sh = shapley_exact(table);
  CHECK(sh.values[0] == doctest::Approx((a + t - b) / 2.0).epsilon(1e-15));
  CHECK(sh.values[1] == doctest::Approx((b + t - a) / 2.0).epsilon(1e-15));
}

TEST_CASE("additive cost functions pay each player its own weight") {
  const int d = 6;
  RandomStream s(5);
  std::vector<double> w(d);
  for (int i = 0; i < d; ++i) w[static_cast<std::size_t>(i)] = s.uniform_at(i) * 4.0 - 1.0;
  std::vector<double> costs(std::size_t{1} << d, 0.0);
  for (std::size_t m = 0; m < costs.size(); ++m)
    for (int i = 0; i < d; ++i)
      if (m & (1ull << i)) costs[m] += w[static_cast<std::size_t>(i)];
  auto sh = shapley_exact(CostTable(d, std::move(costs)));
  for (int i = 0; i < d; ++i)
    CHECK(sh.values[static_cast<std::size_t>(i)] ==
          doctest::Approx(w[static_cast<std::size_t>(i)]).epsilon(1e-13));
}

TEST_CASE("costs that depend only on the coalition size give equal values") {
  const int d = 5;
  std::vector<double> costs(std::size_t{1} << d);
  for (std::size_t m = 0; m < costs.size(); ++m)
    costs[m] = std::sqrt(static_cast<double>(std::popcount(m)));
  auto sh = shapley_exact(CostTable(d, std::move(costs)));
  for (int i = 1; i < d; ++i)
    CHECK(sh.values[static_cast<std::size_t>(i)] == doctest::Approx(sh.values[0]).epsilon(1e-14));
}

TEST_CASE("exact engine equals the all-permutations average up to d = 5") {
  for (int d = 1; d <= 5; ++d) {
    CostTable t = random_table(d, 100 + static_cast<std::uint64_t>(d));
    auto fast = shapley_exact(t);
    auto slow = brute_force(t);
    for (int i = 0; i < d; ++i)
      CHECK(fast.values[static_cast<std::size_t>(i)] ==
            doctest::Approx(slow[static_cast<std::size_t>(i)]).epsilon(1e-12));
    CHECK(std::accumulate(fast.values.begin(), fast.values.end(), 0.0) ==
          doctest::Approx(t.grand_cost()).epsilon(1e-12));
  }
}

TEST_CASE("permutation sampler: efficiency is structural") {
  CostTable t = random_table(7, 9);
  for (std::size_t m : {2u, 9u, 101u}) {
    auto sh = shapley_permutation(t, m, RandomStream(3));
    CHECK(std::accumulate(sh.values.begin(), sh.values.end(), 0.0) ==
          doctest::Approx(t.grand_cost()).epsilon(1e-12));
  }
}

TEST_CASE("permutation sampler: consistent with the exact values") {
  CostTable t = random_table(6, 11);
  auto exact = shapley_exact(t);
  auto est = shapley_permutation(t, 40'000, RandomStream(17));
  CHECK(est.permutations == 40'000);
  for (int i = 0; i < 6; ++i) {
    double se = est.std_errors[static_cast<std::size_t>(i)];
    CHECK(se > 0.0);
    CHECK(std::abs(est.values[static_cast<std::size_t>(i)] -
                   exact.values[static_cast<std::size_t>(i)]) < 3.0 * se);
  }
}

TEST_CASE("permutation sampler: single player gets the grand cost") {
  CostTable t(1, {0.0, 2.5});
  for (std::size_t m : {1u, 8u}) {
    auto sh = shapley_permutation(t, m, RandomStream(0));
    CHECK(sh.values[0] == doctest::Approx(2.5).epsilon(1e-15));
  }
}

TEST_CASE("sampler accepts a cost oracle") {
  auto cost = [](const Coalition& c) { return static_cast<double>(c.size()); };
  auto sh = shapley_permutation(4, cost, 50, RandomStream(2));
  for (double v : sh.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("deterministic across repeated calls and exec modes") {
  CostTable t = random_table(6, 21);
  auto a = shapley_permutation(t, 999, RandomStream(5), Exec::parallel);
  auto b = shapley_permutation(t, 999, RandomStream(5), Exec::serial);
  CHECK(a.values == b.values);
  CHECK(a.std_errors == b.std_errors);
  auto c = shapley_exact(t, Exec::parallel);
  auto d = shapley_exact(t, Exec::serial);
  CHECK(c.values == d.values);
}
