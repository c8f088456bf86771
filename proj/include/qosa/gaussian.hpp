#pragma once

#include <Eigen/Dense>

#include "qosa/coalition.hpp"
#include "qosa/kernels.hpp"
#include "qosa/rng.hpp"

namespace qosa {

/// Multivariate normal law N(mu, sigma). sigma must be symmetric and
/// positive-definite; matrices whose smallest eigenvalue falls below
/// 1e-12 times the largest are rejected at construction.
class GaussianLaw {
 public:
  GaussianLaw(Eigen::VectorXd mu, Eigen::MatrixXd sigma);

  int dim() const { return static_cast<int>(mu_.size()); }
  const Eigen::VectorXd& mean() const { return mu_; }
  const Eigen::MatrixXd& covariance() const { return sigma_; }
  /// Lower-triangular Cholesky factor L with L L^T = sigma.
  const Eigen::MatrixXd& cholesky_factor() const { return chol_; }

  /// Exact law of X_{complement of given} | X_given = values. Coordinates of
  /// the result follow the complement's members in ascending original order.
  /// The conditional covariance does not depend on `values`.
  GaussianLaw conditional(const Coalition& given, const Eigen::VectorXd& values) const;

  /// Conditional covariance block only (cheaper when values are irrelevant).
  Eigen::MatrixXd conditional_covariance(const Coalition& given) const;

  /// n draws, one per row. Row r consumes normal deviates at stream counters
  /// [r*d, (r+1)*d), so output is independent of execution order.
  Eigen::MatrixXd sample(std::size_t n, const RandomStream& stream,
                         Exec exec = Exec::parallel) const;

 private:
  Eigen::VectorXd mu_;
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd chol_;
};

}  // namespace qosa
