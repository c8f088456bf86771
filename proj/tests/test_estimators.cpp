#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "qosa/analytic.hpp"
#include "qosa/estimators.hpp"
#include "qosa/models.hpp"

using namespace qosa;

namespace {

EstimatorConfig config(std::size_t n, std::uint64_t seed = 1) {
  EstimatorConfig cfg;
  cfg.n_pooled = n;
  cfg.stream = RandomStream(seed);
  return cfg;
}

ModelSpec gaussian2(double beta1, double beta2, double rho = 0.0) {
  Eigen::VectorXd beta(2), mu(2);
  beta << beta1, beta2;
  mu << 0.0, 0.0;
  Eigen::MatrixXd sigma(2, 2);
  sigma << 1.0, 2.0 * rho, 2.0 * rho, 4.0;
  return ModelSpec::linear_gaussian(0.0, beta, mu, sigma);
}

}  // namespace

TEST_CASE("config validation") {
  EstimatorConfig cfg = config(100);
  cfg.n_batches = 4;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = config(20);
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // too small for 16 batches
  cfg = config(1000);
  cfg.k_neighbors = 2000;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK(config(1000).neighbors_for(1000) == 100);  // ceil(1000^(2/3))
}

TEST_CASE("first-order and total match the closed forms, exact path") {
  auto m = ModelSpec::builtin("gaussian2d");
  auto cfg = config(100'000);
  auto s1 = estimate_first_order_qosa(m, 0, QuantileLevel(0.5), cfg);
  CHECK(s1.method == CondMethod::exact);
  CHECK(std::abs(s1.value - 0.10557280900008414) < 0.02);
  CHECK(s1.std_error > 0.0);
  CHECK(s1.std_error < 0.01);
  auto t1 = estimate_total_qosa(m, 0, QuantileLevel(0.5), cfg);
  CHECK(std::abs(t1.value - 0.4472135954999579) < 0.02);
  // the truncated-expectation rewrite estimates the same quantity
  auto cfg2 = cfg;
  cfg2.use_truncated_rewrite = true;
  auto s1t = estimate_first_order_qosa(m, 0, QuantileLevel(0.5), cfg2);
  CHECK(std::abs(s1t.value - s1.value) < 0.01);
}

TEST_CASE("inert and all-explaining inputs") {
  auto m = gaussian2(1.0, 0.0);  // Y = X1: second input is inert
  auto cfg = config(50'000);
  auto s2 = estimate_first_order_qosa(m, 1, QuantileLevel(0.7), cfg);
  CHECK(std::abs(s2.value) <= 3.0 * std::max(s2.std_error, 1e-12));
  auto t2 = estimate_total_qosa(m, 1, QuantileLevel(0.7), cfg);
  CHECK(std::abs(t2.value) <= 3.0 * std::max(t2.std_error, 1e-12));
  // conditioning on X1 reproduces Y exactly, so its index is exactly 1
  auto s1 = estimate_first_order_qosa(m, 0, QuantileLevel(0.7), cfg);
  CHECK(s1.value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("group indices anchor at the empty and full sets") {
  auto m = ModelSpec::builtin("lognormal2d:rho=0.75");
  auto cfg = config(20'000);
  auto g_full = estimate_group_qosa(m, Coalition::full_set(2), QuantileLevel(0.3), cfg);
  CHECK(g_full.value == 1.0);
  auto g_empty = estimate_group_qosa(m, Coalition::empty_set(2), QuantileLevel(0.3), cfg);
  CHECK(g_empty.value == 0.0);
  CHECK(g_empty.std_error == 0.0);
}

TEST_CASE("pair interaction assembles from group and singleton indices") {
  auto m = ModelSpec::builtin("gaussian2d");
  auto cfg = config(50'000);
  auto s12 = estimate_second_order_qosa(m, 0, 1, QuantileLevel(0.5), cfg);
  auto s1 = estimate_first_order_qosa(m, 0, QuantileLevel(0.5), cfg);
  auto s2 = estimate_first_order_qosa(m, 1, QuantileLevel(0.5), cfg);
  // group({1,2}) is exactly 1 here, so the three indices close to 1 exactly
  CHECK(s1.value + s2.value + s12.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(estimate_second_order_qosa(m, 1, 1, QuantileLevel(0.5), cfg),
                  std::invalid_argument);
}

TEST_CASE("quantile-distance estimates against the closed forms") {
  auto m = ModelSpec::builtin("laplace");
  auto cfg = config(100'000);
  auto e1 = estimate_kucherenko(m, 0, QuantileLevel(0.5), 1, cfg);
  CHECK(std::abs(e1.value - std::log(2.0)) < 0.01);
  auto e2 = estimate_kucherenko(m, 0, QuantileLevel(0.5), 2, cfg);
  CHECK(std::abs(e2.value - 1.0941586527983107) < 0.02);
  CHECK_THROWS_AS(estimate_kucherenko(m, 0, QuantileLevel(0.5), 3, cfg), std::invalid_argument);

  // exchangeable product model: normalized indices split evenly
  auto prod = ModelSpec::exponential_product(1.3, 1.3);
  auto norm = estimate_kucherenko_normalized(prod, QuantileLevel(0.7), 1, cfg);
  for (const auto& q : norm)
    CHECK(std::abs(q.value - 0.5) <= 3.0 * std::max(q.std_error, 1e-12));
}

TEST_CASE("coalition costs: anchors, sharing, and the total identity") {
  auto m = ModelSpec::builtin("gaussian2d");
  auto cfg = config(100'000);
  CoalitionCostEstimator est(m, QuantileLevel(0.5), cfg);
  CHECK(est.cost(Coalition::empty_set(2)).value == 0.0);
  CHECK(est.cost(Coalition::full_set(2)).value == 1.0);
  // c({i}) is the total index of input i
  CHECK(std::abs(est.cost(Coalition::single(2, 0)).value - 0.4472135954999579) < 0.02);
  auto table = est.table();
  CHECK(table.cost(std::uint64_t{0}) == 0.0);
  CHECK(table.grand_cost() == 1.0);
  CHECK(est.batch_tables().size() == 16);
  // first cost function: same anchors, no monotonicity contract
  auto first = est.first_cost_table();
  CHECK(first.cost(std::uint64_t{0}) == 0.0);
  CHECK(first.grand_cost() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("shapley estimates against the closed forms") {
  auto m = ModelSpec::builtin("gaussian2d");
  auto cfg = config(100'000);
  auto sh = qose_estimate(m, QuantileLevel(0.5), cfg);
  CHECK(std::abs(sh.values[0] - 0.27639320225002106) < 0.02);
  CHECK(sh.values[0] + sh.values[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sh.std_errors[0] > 0.0);
}

TEST_CASE("knn path agrees within a looser band") {
  auto m = ModelSpec::builtin("gaussian2d");
  auto cfg = config(50'000);
  cfg.method = CondMethod::knn;
  auto all = estimate_all_qosa(m, QuantileLevel(0.5), cfg);
  CHECK(all.method == CondMethod::knn);
  CHECK(std::abs(all.first_order[0].value - 0.10557280900008414) < 0.05);
  CHECK(std::abs(all.total[0].value - 0.4472135954999579) < 0.05);
  CHECK(std::abs(all.qose.values[0] - 0.27639320225002106) < 0.05);
}

TEST_CASE("knn is the fallback when no exact conditionals exist") {
  std::vector<AdditiveTerm> terms = {
      {AdditiveTerm::Map::cubic, 0.0, 1.0, ScalarLaw::normal(0.0, 1.0)},
      {AdditiveTerm::Map::linear, 0.0, 1.0, ScalarLaw::exponential(1.0)},
      {AdditiveTerm::Map::cubic, 0.0, 0.5, ScalarLaw::normal(0.0, 1.0)}};
  auto m = ModelSpec::additive(0.0, terms);
  auto cfg = config(20'000);
  auto s = estimate_first_order_qosa(m, 0, QuantileLevel(0.5), cfg);
  CHECK(s.method == CondMethod::knn);
  CHECK(s.value > -0.05);
  CHECK(s.value < 1.05);
  // requesting the exact path must fail loudly
  auto cfg2 = cfg;
  cfg2.method = CondMethod::exact;
  CHECK_THROWS_AS(estimate_first_order_qosa(m, 0, QuantileLevel(0.5), cfg2),
                  std::invalid_argument);
}

TEST_CASE("multi-coordinate knn conditioning works on subsampled queries") {
  std::vector<AdditiveTerm> terms = {
      {AdditiveTerm::Map::cubic, 0.0, 1.0, ScalarLaw::normal(0.0, 1.0)},
      {AdditiveTerm::Map::linear, 0.0, 2.0, ScalarLaw::normal(0.0, 1.0)},
      {AdditiveTerm::Map::cubic, 0.0, 0.7, ScalarLaw::normal(0.0, 1.0)}};
  auto m = ModelSpec::additive(0.0, terms);
  auto cfg = config(20'000);
  cfg.method = CondMethod::knn;
  cfg.knn_queries = 1500;
  auto g = estimate_group_qosa(m, Coalition::of(3, {0, 1}), QuantileLevel(0.5), cfg);
  CHECK(g.n_effective == 1500);
  CHECK(g.value > 0.3);  // two of three inputs explain most of the dispersion
  CHECK(g.value < 1.05);
}

TEST_CASE("degenerate outputs are refused") {
  auto m = gaussian2(0.0, 0.0);
  auto cfg = config(5'000);
  CHECK_THROWS_AS(estimate_first_order_qosa(m, 0, QuantileLevel(0.5), cfg), std::runtime_error);
}

TEST_CASE("fixed seed reproduces results bit for bit") {
  auto m = ModelSpec::builtin("lognormal2d:rho=0.75");
  auto cfg = config(30'000, 99);
  auto a = estimate_all_qosa(m, QuantileLevel(0.9), cfg);
  auto b = estimate_all_qosa(m, QuantileLevel(0.9), cfg);
  CHECK(a.first_order[0].value == b.first_order[0].value);
  CHECK(a.qose.values[1] == b.qose.values[1]);
  auto cfg_other = config(30'000, 100);
  auto c = estimate_all_qosa(m, QuantileLevel(0.9), cfg_other);
  CHECK(a.first_order[0].value != c.first_order[0].value);
}

TEST_CASE("variance pipeline on the linear benchmark") {
  auto m = ModelSpec::builtin("gaussian2d");
  auto cfg = config(100'000);
  auto v = variance_shapley_and_sobol(m, cfg);
  CHECK(std::abs(v.sobol_first[0].value - 0.2) < 0.02);
  CHECK(std::abs(v.sobol_first[1].value - 0.8) < 0.02);
  CHECK(std::abs(v.sobol_total[0].value - 0.2) < 0.02);
  CHECK(std::abs(v.shapley.values[0] - 0.2) < 0.02);
  CHECK(v.shapley.values[0] + v.shapley.values[1] == doctest::Approx(1.0).epsilon(1e-12));
  // knn-mean variant stays consistent
  auto cfg2 = cfg;
  cfg2.n_pooled = 50'000;
  cfg2.method = CondMethod::knn;
  auto vk = variance_shapley_and_sobol(m, cfg2);
  CHECK(std::abs(vk.sobol_first[0].value - 0.2) < 0.05);
  CHECK(std::abs(vk.shapley.values[1] - 0.8) < 0.05);
}

TEST_CASE("exact-path sample size can be overridden separately") {
  auto m = ModelSpec::builtin("gaussian2d");
  auto cfg = config(50'000);
  cfg.n_outer = 4'000;
  auto s = estimate_first_order_qosa(m, 0, QuantileLevel(0.5), cfg);
  CHECK(s.n_effective == 4'000);
  cfg.method = CondMethod::knn;  // the data-driven path keeps n_pooled
  auto k = estimate_first_order_qosa(m, 0, QuantileLevel(0.5), cfg);
  CHECK(k.n_effective == 50'000);
}
