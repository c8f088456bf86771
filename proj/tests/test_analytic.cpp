#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "qosa/analytic.hpp"
#include "qosa/models.hpp"
#include "qosa/normal.hpp"

using namespace qosa;

namespace {
const double kSqrt5 = std::sqrt(5.0);
}

TEST_CASE("linear Gaussian first-order and total indices") {
  auto m = ModelSpec::builtin("gaussian2d");
  auto p1 = gaussian_linear_qosa(m, 0);
  auto p2 = gaussian_linear_qosa(m, 1);
  CHECK(p1.first_order == doctest::Approx(1.0 - 2.0 / kSqrt5).epsilon(1e-14));
  CHECK(p1.total == doctest::Approx(1.0 / kSqrt5).epsilon(1e-14));
  CHECK(p2.first_order == doctest::Approx(1.0 - 1.0 / kSqrt5).epsilon(1e-14));
  CHECK(p2.total == doctest::Approx(2.0 / kSqrt5).epsilon(1e-14));
}

TEST_CASE("linear Gaussian indices at the degenerate correlations") {
  for (double rho : {1.0, -1.0}) {
    auto m = ModelSpec::builtin("gaussian2d").with_correlation(rho);
    for (int i = 0; i < 2; ++i) {
      auto p = gaussian_linear_qosa(m, i);
      CHECK(p.first_order == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(p.total == doctest::Approx(0.0).epsilon(1e-14));
    }
    auto sh = gaussian_linear_qose(m);
    CHECK(sh[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(sh[1] == doctest::Approx(0.5).epsilon(1e-14));
  }
}

TEST_CASE("lognormal indices at the median") {
  auto m = ModelSpec::builtin("lognormal2d");
  QuantileLevel half(0.5);
  auto p = lognormal_qosa(m, 0, half);
  CHECK(p.first_order == doctest::Approx(0.020677053072427953).epsilon(1e-10));
  CHECK(p.total == doctest::Approx(0.7004438660248967).epsilon(1e-10));
  auto sh = lognormal_qose(m, half);
  CHECK(sh[0] == doctest::Approx(0.36056045954866234).epsilon(1e-10));
  CHECK(sh[0] + sh[1] == doctest::Approx(1.0).epsilon(1e-13));
  // sandwich ordering for this configuration
  CHECK(p.first_order <= sh[0]);
  CHECK(sh[0] <= p.total);
}

TEST_CASE("lognormal: an inert co-input pushes the first-order index to 1") {
  Eigen::VectorXd beta(2), mu(2);
  beta << 2.0, 0.0;
  mu << 0.0, 0.0;
  Eigen::MatrixXd sigma(2, 2);
  sigma << 1.0, 0.0, 0.0, 4.0;
  auto m = ModelSpec::log_linear_gaussian(0.0, beta, mu, sigma);
  auto p = lognormal_qosa(m, 0, QuantileLevel(0.3));
  CHECK(p.first_order == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("shapley effects: symmetry and efficiency for equal loadings") {
  const int d = 5;
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(d, d) * 2.25;
  Eigen::VectorXd beta = Eigen::VectorXd::Ones(d) * 0.7;
  auto m = ModelSpec::linear_gaussian(1.0, beta, Eigen::VectorXd::Zero(d), sigma);
  auto sh = gaussian_linear_qose(m);
  for (double v : sh) CHECK(v == doctest::Approx(1.0 / d).epsilon(1e-13));
}

TEST_CASE("dimension cap on exact enumeration") {
  const int d = 16;
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd beta = Eigen::VectorXd::Ones(d);
  auto m = ModelSpec::linear_gaussian(0.0, beta, Eigen::VectorXd::Zero(d), sigma);
  CHECK_THROWS_AS(gaussian_linear_qose(m, 15), std::invalid_argument);
  CHECK_NOTHROW(gaussian_linear_qose(m, 16));
}

TEST_CASE("analytic cost tables anchor at 0 and 1") {
  auto lin = ModelSpec::builtin("gaussian2d:rho=0.4");
  CostTable t = gaussian_linear_cost_table(lin);
  CHECK(t.cost(std::uint64_t{0}) == 0.0);
  CHECK(t.grand_cost() == 1.0);
  auto log = ModelSpec::builtin("lognormal2d:rho=0.4");
  CostTable tl = lognormal_cost_table(log, QuantileLevel(0.8));
  CHECK(tl.cost(std::uint64_t{0}) == 0.0);
  CHECK(tl.grand_cost() == 1.0);
  // aggregation of the analytic table reproduces the closed-form effects
  auto sh = shapley_exact(tl).values;
  auto direct = lognormal_qose(log, QuantileLevel(0.8));
  for (int i = 0; i < 2; ++i) CHECK(sh[i] == doctest::Approx(direct[i]).epsilon(1e-13));
}

TEST_CASE("quantile-distance indices for the exponential difference") {
  auto k = laplace_kucherenko(QuantileLevel(0.5));
  CHECK(k.qbar_abs[0] == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(k.qbar_abs[1] == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(k.qbar_sq[0] == doctest::Approx(1.0941586527983107).epsilon(1e-14));
  CHECK(k.q_abs[0] == doctest::Approx(0.5).epsilon(1e-14));

  // constant below one half for the first input
  auto a = laplace_kucherenko(QuantileLevel(0.1));
  auto b = laplace_kucherenko(QuantileLevel(0.49));
  CHECK(a.qbar_abs[0] == b.qbar_abs[0]);
  CHECK(a.qbar_sq[0] == b.qbar_sq[0]);
  // and mirrored for the second input above one half
  auto c = laplace_kucherenko(QuantileLevel(0.51));
  auto d = laplace_kucherenko(QuantileLevel(0.93));
  CHECK(c.qbar_abs[1] == d.qbar_abs[1]);
}

TEST_CASE("exponential product: quadrature oracle") {
  // cdf against the Bessel-function closed form
  for (double z : {0.01, 0.3, 1.0, 4.0}) {
    double quad = exponential_product_cdf(1.0, 1.0, z);
    double bessel = 1.0 - 2.0 * std::sqrt(z) * std::cyl_bessel_k(1, 2.0 * std::sqrt(z));
    CHECK(quad == doctest::Approx(bessel).epsilon(1e-10));
  }
  // quantile inverts the cdf, and respects the rate scaling
  for (double a : {0.1, 0.6, 0.96}) {
    double q = exponential_product_quantile(0.1, 1.0, QuantileLevel(a));
    CHECK(exponential_product_cdf(0.1, 1.0, q) == doctest::Approx(a).epsilon(1e-9));
    CHECK(exponential_product_quantile(1.0, 1.0, QuantileLevel(a)) ==
          doctest::Approx(0.1 * q).epsilon(1e-12));
  }
  // truncated expectation saturates at the mean
  CHECK(exponential_product_truncated_expectation(2.0, 1.0, 1e9) ==
        doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("exponential product: indices sum to one and ignore the rates") {
  for (double a : {0.3, 0.9, 0.97}) {
    auto p = exponential_product_qosa(0.1, 1.0, QuantileLevel(a));
    CHECK(p.first_order + p.total == doctest::Approx(1.0).epsilon(1e-12));
    auto q = exponential_product_qosa(5.0, 0.2, QuantileLevel(a));
    CHECK(p.first_order == doctest::Approx(q.first_order).epsilon(1e-9));
  }
}

TEST_CASE("exponential product: unique high-level crossing") {
  // the total index falls below the first-order one only near the top
  CHECK(exponential_product_qosa(0.1, 1.0, QuantileLevel(0.94)).total > 0.5);
  CHECK(exponential_product_qosa(0.1, 1.0, QuantileLevel(0.98)).total < 0.5);
}

TEST_CASE("analytic index sets per model family") {
  auto gs = analytic_indices(ModelSpec::builtin("gaussian2d"), QuantileLevel(0.4));
  CHECK(gs.first_order.size() == 2);
  CHECK(gs.qose.size() == 2);
  CHECK(!gs.kucherenko);
  CHECK(std::accumulate(gs.qose.begin(), gs.qose.end(), 0.0) ==
        doctest::Approx(1.0).epsilon(1e-12));

  auto ps = analytic_indices(ModelSpec::builtin("expo-product"), QuantileLevel(0.4));
  CHECK(ps.first_order[0] == ps.first_order[1]);
  CHECK(ps.qose[0] == 0.5);

  auto ls = analytic_indices(ModelSpec::builtin("laplace"), QuantileLevel(0.4));
  CHECK(ls.first_order.empty());
  CHECK(ls.kucherenko.has_value());

  std::vector<AdditiveTerm> terms = {
      {AdditiveTerm::Map::linear, 0.0, 1.0, ScalarLaw::normal(0.0, 1.0)},
      {AdditiveTerm::Map::cubic, 0.0, 1.0, ScalarLaw::normal(0.0, 1.0)}};
  auto as = analytic_indices(ModelSpec::additive(0.0, terms), QuantileLevel(0.4));
  CHECK(as.first_order.empty());
  CHECK(!as.kucherenko);
}

TEST_CASE("degenerate output is rejected") {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(2, 2);
  auto m = ModelSpec::linear_gaussian(3.0, beta, Eigen::VectorXd::Zero(2), sigma);
  CHECK_THROWS_AS(gaussian_linear_qosa(m, 0), std::runtime_error);
}
