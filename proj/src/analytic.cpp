#include "qosa/analytic.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "qosa/models.hpp"
#include "qosa/normal.hpp"
#include "qosa/quadrature.hpp"

namespace qosa {

double gaussian_conditional_scale(const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma,
                                  const Coalition& coalition) {
  const int d = static_cast<int>(beta.size());
  if (coalition.dim() != d) throw std::invalid_argument("gaussian_conditional_scale: dimension mismatch");
  if (coalition.empty()) return 0.0;
  if (coalition.full()) return std::sqrt(std::max(0.0, beta.dot(sigma * beta)));

  if (d == 2) {
    // closed 2-d form, continuous through |rho| = 1
    const int i = coalition.contains(0) ? 0 : 1;
    const double s1 = std::sqrt(sigma(0, 0)), s2 = std::sqrt(sigma(1, 1));
    const double rho = sigma(0, 1) / (s1 * s2);
    const double si = (i == 0) ? s1 : s2;
    return std::abs(beta[i]) * si * std::sqrt(std::max(0.0, 1.0 - rho * rho));
  }

  const auto idx_j = coalition.members();
  const auto idx_c = coalition.complement().members();
  const auto nj = static_cast<Eigen::Index>(idx_j.size());
  const auto nc = static_cast<Eigen::Index>(idx_c.size());
  Eigen::MatrixXd s_jj(nj, nj), s_jc(nj, nc), s_cc(nc, nc);
  Eigen::VectorXd beta_j(nj);
  for (Eigen::Index a = 0; a < nj; ++a) {
    beta_j[a] = beta[idx_j[a]];
    for (Eigen::Index b = 0; b < nj; ++b) s_jj(a, b) = sigma(idx_j[a], idx_j[b]);
    for (Eigen::Index b = 0; b < nc; ++b) s_jc(a, b) = sigma(idx_j[a], idx_c[b]);
  }
  for (Eigen::Index a = 0; a < nc; ++a)
    for (Eigen::Index b = 0; b < nc; ++b) s_cc(a, b) = sigma(idx_c[a], idx_c[b]);

  Eigen::LLT<Eigen::MatrixXd> llt(s_cc);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("gaussian_conditional_scale: complement block is singular");
  Eigen::MatrixXd schur = s_jj - s_jc * llt.solve(s_jc.transpose());
  return std::sqrt(std::max(0.0, beta_j.dot(schur * beta_j)));
}

namespace {

void require_gaussian_kind(const ModelSpec& model, ModelSpec::Kind kind, const char* what) {
  if (model.kind() != kind) throw std::invalid_argument(std::string(what) + ": wrong model kind");
}

double output_scale(const ModelSpec& model) {
  double s = gaussian_conditional_scale(model.beta(), model.sigma(),
                                        Coalition::full_set(model.dim()));
  if (!(s > 0.0)) throw std::runtime_error("analytic: degenerate output (zero dispersion)");
  return s;
}

/// All conditional scales B(mask), mask over subsets of {1..d}.
std::vector<double> all_conditional_scales(const ModelSpec& model, int cap) {
  const int d = model.dim();
  if (d > cap) throw std::invalid_argument("analytic: dimension above the exact enumeration cap");
  std::vector<double> b(std::size_t{1} << d);
  for (std::uint64_t mask = 0; mask < b.size(); ++mask)
    b[mask] = gaussian_conditional_scale(model.beta(), model.sigma(),
                                         Coalition(d, mask));
  return b;
}

CostTable scale_cost_table(const ModelSpec& model, int cap,
                           const std::function<double(double)>& g) {
  std::vector<double> costs = all_conditional_scales(model, cap);
  const double total = g(costs.back());
  for (auto& c : costs) c = g(c) / total;
  costs[0] = 0.0;  // exact by definition; g(0)/total only vanishes to rounding
  return CostTable(model.dim(), std::move(costs));
}

}  // namespace

QosaPair gaussian_linear_qosa(const ModelSpec& model, int i) {
  require_gaussian_kind(model, ModelSpec::Kind::linear_gaussian, "gaussian_linear_qosa");
  const int d = model.dim();
  const double sigma_y = output_scale(model);
  const Coalition self = Coalition::single(d, i);
  double b_others = gaussian_conditional_scale(model.beta(), model.sigma(), self.complement());
  double b_self = gaussian_conditional_scale(model.beta(), model.sigma(), self);
  return {1.0 - b_others / sigma_y, b_self / sigma_y};
}

QosaPair lognormal_qosa(const ModelSpec& model, int i, QuantileLevel alpha) {
  require_gaussian_kind(model, ModelSpec::Kind::log_linear_gaussian, "lognormal_qosa");
  const int d = model.dim();
  const double sigma = output_scale(model);
  const double z = std_normal_quantile(alpha.value());
  const double denom = alpha.value() - std_normal_cdf(z - sigma);
  const Coalition self = Coalition::single(d, i);
  double b_others = gaussian_conditional_scale(model.beta(), model.sigma(), self.complement());
  double b_self = gaussian_conditional_scale(model.beta(), model.sigma(), self);
  double first = 1.0 - (alpha.value() - std_normal_cdf(z - b_others)) / denom;
  double total = (alpha.value() - std_normal_cdf(z - b_self)) / denom;
  return {first, total};
}

CostTable gaussian_linear_cost_table(const ModelSpec& model, int cap) {
  require_gaussian_kind(model, ModelSpec::Kind::linear_gaussian, "gaussian_linear_cost_table");
  return scale_cost_table(model, cap, [](double b) { return b; });
}

CostTable lognormal_cost_table(const ModelSpec& model, QuantileLevel alpha, int cap) {
  require_gaussian_kind(model, ModelSpec::Kind::log_linear_gaussian, "lognormal_cost_table");
  const double a = alpha.value();
  const double z = std_normal_quantile(a);
  return scale_cost_table(model, cap, [a, z](double b) { return a - std_normal_cdf(z - b); });
}

std::vector<double> gaussian_linear_qose(const ModelSpec& model, int cap) {
  return shapley_exact(gaussian_linear_cost_table(model, cap)).values;
}

std::vector<double> lognormal_qose(const ModelSpec& model, QuantileLevel alpha, int cap) {
  return shapley_exact(lognormal_cost_table(model, alpha, cap)).values;
}

KucherenkoIndices laplace_kucherenko(QuantileLevel alpha) {
  const double a = alpha.value();
  const double log2 = std::log(2.0);
  const double g1 = (a >= 0.5) ? -std::log(2.0 * a * (1.0 - a)) : log2;
  const double g2 = (a >= 0.5) ? log2 : -std::log(2.0 * a * (1.0 - a));
  KucherenkoIndices k;
  k.qbar_abs = {g1 + 2.0 * std::exp(-g1) - 1.0, g2 + 2.0 * std::exp(-g2) - 1.0};
  k.qbar_sq = {g1 * g1 - 2.0 * g1 + 2.0, g2 * g2 - 2.0 * g2 + 2.0};
  const double sum_abs = k.qbar_abs[0] + k.qbar_abs[1];
  const double sum_sq = k.qbar_sq[0] + k.qbar_sq[1];
  k.q_abs = {k.qbar_abs[0] / sum_abs, k.qbar_abs[1] / sum_abs};
  k.q_sq = {k.qbar_sq[0] / sum_sq, k.qbar_sq[1] / sum_sq};
  return k;
}

namespace {

// Both integrands are bounded by t e^{-t} (the second factor lives in [0,1]),
// so a fixed cutoff keeps the truncated tail mass below 1e-24 for every
// threshold.
constexpr double kExpTailCut = 60.0;

// CDF and truncated moment of a product of unit-rate exponentials depend on
// the scaled argument z = lambda * delta * q only.
double product_cdf_scaled(double z) {
  if (z <= 0.0) return 0.0;
  auto integrand = [z](double t) { return std::exp(-t - z / t); };
  auto r = integrate_adaptive(integrand, 1e-300, kExpTailCut, 1e-13, 1e-11);
  if (!r.converged) throw std::runtime_error("exponential_product_cdf: quadrature did not converge");
  return 1.0 - r.value;
}

// H(w) = E[Z 1{Z <= w}] for Z the unit product; inner factor integrates the
// second exponential analytically.
double product_truncated_scaled(double w) {
  if (w <= 0.0) return 0.0;
  auto integrand = [w](double t) {
    double u = w / t;
    return t * std::exp(-t) * (1.0 - std::exp(-u) * (1.0 + u));
  };
  auto r = integrate_adaptive(integrand, 1e-300, kExpTailCut, 1e-13, 1e-11);
  if (!r.converged)
    throw std::runtime_error("exponential_product_truncated_expectation: quadrature did not converge");
  return r.value;
}

double product_quantile_scaled(double a) {
  double lo = 0.0, hi = 1.0;
  while (product_cdf_scaled(hi) < a) {
    hi *= 4.0;
    if (hi > 1e12) throw std::runtime_error("exponential_product_quantile: bracketing failed");
  }
  for (int it = 0; it < 200 && (hi - lo) > 1e-15 * std::max(1.0, hi); ++it) {
    double mid = 0.5 * (lo + hi);
    (product_cdf_scaled(mid) < a ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double exponential_product_cdf(double lambda, double delta, double q) {
  return product_cdf_scaled(lambda * delta * q);
}

double exponential_product_quantile(double lambda, double delta, QuantileLevel alpha) {
  return product_quantile_scaled(alpha.value()) / (lambda * delta);
}

double exponential_product_truncated_expectation(double lambda, double delta, double threshold) {
  return product_truncated_scaled(lambda * delta * threshold) / (lambda * delta);
}

QosaPair exponential_product_qosa(double lambda, double delta, QuantileLevel alpha) {
  if (!(lambda > 0.0 && delta > 0.0))
    throw std::invalid_argument("exponential_product_qosa: rates must be positive");
  const double a = alpha.value();
  const double z = product_quantile_scaled(a);
  const double truncated = product_truncated_scaled(z);  // lambda*delta*E[Y 1{Y<=q}]
  const double total = (a - 1.0) * std::log1p(-a) / (a - truncated);
  return {1.0 - total, total};
}

AnalyticIndexSet analytic_indices(const ModelSpec& model, QuantileLevel alpha) {
  AnalyticIndexSet out;
  out.alpha = alpha.value();
  const int d = model.dim();
  switch (model.kind()) {
    case ModelSpec::Kind::linear_gaussian: {
      for (int i = 0; i < d; ++i) {
        QosaPair p = gaussian_linear_qosa(model, i);
        out.first_order.push_back(p.first_order);
        out.total.push_back(p.total);
      }
      out.qose = gaussian_linear_qose(model);
      break;
    }
    case ModelSpec::Kind::log_linear_gaussian: {
      for (int i = 0; i < d; ++i) {
        QosaPair p = lognormal_qosa(model, i, alpha);
        out.first_order.push_back(p.first_order);
        out.total.push_back(p.total);
      }
      out.qose = lognormal_qose(model, alpha);
      break;
    }
    case ModelSpec::Kind::exponential_product: {
      QosaPair p = exponential_product_qosa(model.rate_lambda(), model.rate_delta(), alpha);
      out.first_order = {p.first_order, p.first_order};
      out.total = {p.total, p.total};
      // exchangeable up to a positive rescaling, so the effects split evenly
      out.qose = {0.5, 0.5};
      break;
    }
    case ModelSpec::Kind::exponential_difference: {
      if (model.rate_lambda() == 1.0 && model.rate_delta() == 1.0)
        out.kucherenko = laplace_kucherenko(alpha);
      break;  // no closed-form QOSA/QOSE for this family
    }
    case ModelSpec::Kind::additive:
      break;  // estimators only
  }
  return out;
}

}  // namespace qosa
