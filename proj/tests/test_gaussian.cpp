#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "qosa/coalition.hpp"
#include "qosa/gaussian.hpp"

using namespace qosa;

namespace {

Eigen::MatrixXd sigma2(double s1, double s2, double rho) {
  Eigen::MatrixXd m(2, 2);
  m << s1 * s1, rho * s1 * s2, rho * s1 * s2, s2 * s2;
  return m;
}

}  // namespace

TEST_CASE("coalition bit algebra") {
  Coalition c = Coalition::of(4, {0, 2});
  CHECK(c.size() == 2);
  CHECK(c.contains(0));
  CHECK(!c.contains(1));
  CHECK(c.complement() == Coalition::of(4, {1, 3}));
  CHECK(c.with(1).size() == 3);
  CHECK(c.without(0) == Coalition::single(4, 2));
  CHECK(c.label() == "1+3");
  CHECK(Coalition::empty_set(4).label() == "{}");
  CHECK(Coalition::full_set(4).mask() == 0xF);
  CHECK(c.subset_of(Coalition::full_set(4)));
  CHECK_THROWS_AS(Coalition(4, 0x10), std::invalid_argument);
  CHECK_THROWS_AS(Coalition::single(4, 4), std::out_of_range);
}

TEST_CASE("construction rejects bad covariances") {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, 0.2, 1.0;
  CHECK_THROWS_AS(GaussianLaw(mu, asym), std::invalid_argument);
  CHECK_THROWS_AS(GaussianLaw(mu, sigma2(1.0, 2.0, 1.0)), std::invalid_argument);  // singular
  CHECK_THROWS_AS(GaussianLaw(mu, sigma2(1.0, 2.0, 1.0 - 1e-14)), std::invalid_argument);
  CHECK_NOTHROW(GaussianLaw(mu, sigma2(1.0, 2.0, 0.99)));
  Eigen::MatrixXd negdef = -Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(GaussianLaw(mu, negdef), std::invalid_argument);
}

TEST_CASE("cholesky factor reconstructs the covariance") {
  GaussianLaw law(Eigen::VectorXd::Zero(2), sigma2(1.0, 2.0, 0.75));
  Eigen::MatrixXd back = law.cholesky_factor() * law.cholesky_factor().transpose();
  CHECK((back - law.covariance()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("conditional law: diagonal covariance means independence") {
  Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(3, 3);
  diag.diagonal() << 1.0, 4.0, 9.0;
  Eigen::VectorXd mu(3);
  mu << 1.0, 2.0, 3.0;
  GaussianLaw law(mu, diag);
  Eigen::VectorXd v(1);
  v << 10.0;
  GaussianLaw cond = law.conditional(Coalition::single(3, 1), v);
  CHECK(cond.mean()[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(cond.mean()[1] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(cond.covariance()(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cond.covariance()(1, 1) == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(std::abs(cond.covariance()(0, 1)) < 1e-14);
}

TEST_CASE("conditional variance matches the 2-d closed form") {
  GaussianLaw law(Eigen::VectorXd::Zero(2), sigma2(1.0, 2.0, 0.75));
  Eigen::VectorXd v(1);
  v << 0.5;
  GaussianLaw cond = law.conditional(Coalition::single(2, 0), v);
  CHECK(cond.covariance()(0, 0) == doctest::Approx(4.0 * (1.0 - 0.75 * 0.75)).epsilon(1e-12));
  CHECK(cond.mean()[0] == doctest::Approx(0.75 * 2.0 * 0.5).epsilon(1e-12));
  // the conditional covariance does not depend on the conditioning value
  Eigen::VectorXd w(1);
  w << -3.0;
  CHECK(law.conditional(Coalition::single(2, 0), w).covariance()(0, 0) ==
        cond.covariance()(0, 0));
}

TEST_CASE("conditioning argument validation") {
  GaussianLaw law(Eigen::VectorXd::Zero(2), sigma2(1.0, 1.0, 0.3));
  Eigen::VectorXd v(1);
  v << 0.0;
  CHECK_THROWS_AS(law.conditional(Coalition::empty_set(2), Eigen::VectorXd(0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(law.conditional(Coalition::full_set(2), v), std::invalid_argument);
  CHECK_THROWS_AS(law.conditional(Coalition::single(2, 0), Eigen::VectorXd(2)),
                  std::invalid_argument);
}

TEST_CASE("sampling is reproducible and matches moments") {
  GaussianLaw law(Eigen::VectorXd::Ones(2), sigma2(1.0, 2.0, 0.5));
  RandomStream stream(77);
  const std::size_t n = 1'000'000;
  Eigen::MatrixXd a = law.sample(n, stream);
  Eigen::MatrixXd b = law.sample(n, stream, Exec::serial);
  CHECK(a == b);  // order of generation never matters

  Eigen::RowVectorXd mean = a.colwise().mean();
  Eigen::MatrixXd centered = a.rowwise() - mean;
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(mean[i] - 1.0) < 4.0 * std::sqrt(law.covariance()(i, i) / n));
    for (int j = 0; j < 2; ++j) {
      double sii = law.covariance()(i, i), sjj = law.covariance()(j, j),
             sij = law.covariance()(i, j);
      double se = std::sqrt((sii * sjj + sij * sij) / static_cast<double>(n));
      CHECK(std::abs(cov(i, j) - sij) < 5.0 * se);
    }
  }
}
