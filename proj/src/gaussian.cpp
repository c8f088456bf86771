#include "qosa/gaussian.hpp"

#include <stdexcept>

namespace qosa {

GaussianLaw::GaussianLaw(Eigen::VectorXd mu, Eigen::MatrixXd sigma)
    : mu_(std::move(mu)), sigma_(std::move(sigma)) {
  const auto d = mu_.size();
  if (d < 1) throw std::invalid_argument("GaussianLaw: dimension must be at least 1");
  if (sigma_.rows() != d || sigma_.cols() != d)
    throw std::invalid_argument("GaussianLaw: covariance shape does not match mean");
  if (!sigma_.isApprox(sigma_.transpose(), 1e-12))
    throw std::invalid_argument("GaussianLaw: covariance must be symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma_, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || lo < 1e-12 * hi)
    throw std::invalid_argument("GaussianLaw: covariance is singular or nearly singular");

  Eigen::LLT<Eigen::MatrixXd> llt(sigma_);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("GaussianLaw: Cholesky factorization failed");
  chol_ = llt.matrixL();
}

GaussianLaw GaussianLaw::conditional(const Coalition& given, const Eigen::VectorXd& values) const {
  if (given.dim() != dim()) throw std::invalid_argument("GaussianLaw::conditional: dimension mismatch");
  if (given.empty() || given.full())
    throw std::invalid_argument("GaussianLaw::conditional: conditioning set must be nonempty and proper");
  const auto idx_g = given.members();
  const auto idx_r = given.complement().members();
  if (values.size() != static_cast<Eigen::Index>(idx_g.size()))
    throw std::invalid_argument("GaussianLaw::conditional: values length mismatch");

  const auto ng = static_cast<Eigen::Index>(idx_g.size());
  const auto nr = static_cast<Eigen::Index>(idx_r.size());
  Eigen::MatrixXd s_gg(ng, ng), s_rg(nr, ng), s_rr(nr, nr);
  Eigen::VectorXd mu_g(ng), mu_r(nr);
  for (Eigen::Index a = 0; a < ng; ++a) {
    mu_g[a] = mu_[idx_g[a]];
    for (Eigen::Index b = 0; b < ng; ++b) s_gg(a, b) = sigma_(idx_g[a], idx_g[b]);
  }
  for (Eigen::Index a = 0; a < nr; ++a) {
    mu_r[a] = mu_[idx_r[a]];
    for (Eigen::Index b = 0; b < ng; ++b) s_rg(a, b) = sigma_(idx_r[a], idx_g[b]);
    for (Eigen::Index b = 0; b < nr; ++b) s_rr(a, b) = sigma_(idx_r[a], idx_r[b]);
  }

  Eigen::LLT<Eigen::MatrixXd> llt(s_gg);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("GaussianLaw::conditional: conditioning block is singular");
  // mean_r + S_rg S_gg^{-1} (v - mu_g), S_rr - S_rg S_gg^{-1} S_gr
  Eigen::MatrixXd gain = llt.solve(s_rg.transpose()).transpose();
  Eigen::VectorXd cond_mean = mu_r + gain * (values - mu_g);
  Eigen::MatrixXd cond_cov = s_rr - gain * s_rg.transpose();
  cond_cov = 0.5 * (cond_cov + cond_cov.transpose());  // keep exactly symmetric
  return GaussianLaw(std::move(cond_mean), std::move(cond_cov));
}

Eigen::MatrixXd GaussianLaw::conditional_covariance(const Coalition& given) const {
  Eigen::VectorXd values = Eigen::VectorXd::Zero(given.size());
  const auto idx_g = given.members();
  for (std::size_t a = 0; a < idx_g.size(); ++a) values[static_cast<Eigen::Index>(a)] = mu_[idx_g[a]];
  return conditional(given, values).covariance();
}

Eigen::MatrixXd GaussianLaw::sample(std::size_t n, const RandomStream& stream, Exec exec) const {
  const int d = dim();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), d);
  for_each_index(n, exec, [&](std::size_t r) {
    Eigen::VectorXd z(d);
    for (int j = 0; j < d; ++j)
      z[j] = stream.normal_at(static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(d) +
                              static_cast<std::uint64_t>(j));
    out.row(static_cast<Eigen::Index>(r)) = (mu_ + chol_ * z).transpose();
  });
  return out;
}

}  // namespace qosa
