#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <vector>

#include "qosa/coalition.hpp"
#include "qosa/contrast.hpp"
#include "qosa/shapley.hpp"

namespace qosa {

class ModelSpec;

struct QosaPair {
  double first_order;
  double total;
};

/// Conditional scale of the linear form contributed by coalition J:
/// sqrt(beta_J^T (Sigma_JJ - Sigma_J,-J Sigma_-J,-J^{-1} Sigma_-J,J) beta_J).
/// In two dimensions the closed form covers |rho| = 1 as a continuous limit.
double gaussian_conditional_scale(const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma,
                                  const Coalition& coalition);

/// First-order and total index of input i for a linear model with Gaussian
/// inputs; the values are the same at every quantile level.
QosaPair gaussian_linear_qosa(const ModelSpec& model, int i);

/// Same pair for the exponential of a linear Gaussian form (lognormal output).
QosaPair lognormal_qosa(const ModelSpec& model, int i, QuantileLevel alpha);

/// Quantile-oriented Shapley effects via exact coalition enumeration
/// (dimension capped; throws above the cap).
std::vector<double> gaussian_linear_qose(const ModelSpec& model, int exact_dim_cap = 15);
std::vector<double> lognormal_qose(const ModelSpec& model, QuantileLevel alpha,
                                   int exact_dim_cap = 15);

/// Normalized analytic coalition-cost tables (cost of J = explanatory power
/// of J for the output quantile, with cost(full set) = 1). Aggregating these
/// with shapley_exact reproduces the closed-form effects above.
CostTable gaussian_linear_cost_table(const ModelSpec& model, int exact_dim_cap = 15);
CostTable lognormal_cost_table(const ModelSpec& model, QuantileLevel alpha,
                               int exact_dim_cap = 15);

/// Quantile-distance indices for Y = X1 - X2 with unit-rate exponential
/// inputs: mean absolute / squared distance between the conditional and
/// unconditional quantile, plus their across-input normalizations.
struct KucherenkoIndices {
  std::array<double, 2> qbar_abs;  // E|q(Y) - q(Y|X_i)|
  std::array<double, 2> qbar_sq;   // E[(q(Y) - q(Y|X_i))^2]
  std::array<double, 2> q_abs;     // normalized over inputs
  std::array<double, 2> q_sq;
};
KucherenkoIndices laplace_kucherenko(QuantileLevel alpha);

/// Product of two independent exponentials: both inputs share the same
/// first-order and total index, and they sum to one.
QosaPair exponential_product_qosa(double lambda, double delta, QuantileLevel alpha);

/// Distribution machinery for the exponential-product output, evaluated by
/// deterministic adaptive quadrature. Throws on non-convergence.
double exponential_product_cdf(double lambda, double delta, double q);
double exponential_product_quantile(double lambda, double delta, QuantileLevel alpha);
double exponential_product_truncated_expectation(double lambda, double delta, double threshold);

/// Closed-form indices available for a model at one quantile level. Empty
/// vectors mean "no closed form for this family".
struct AnalyticIndexSet {
  double alpha;
  std::vector<double> first_order;
  std::vector<double> total;
  std::vector<double> qose;
  std::optional<KucherenkoIndices> kucherenko;
};
AnalyticIndexSet analytic_indices(const ModelSpec& model, QuantileLevel alpha);

}  // namespace qosa
