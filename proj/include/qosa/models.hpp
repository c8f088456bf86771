#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qosa/coalition.hpp"
#include "qosa/contrast.hpp"
#include "qosa/gaussian.hpp"
#include "qosa/kernels.hpp"
#include "qosa/rng.hpp"
#include "qosa/scalar_law.hpp"

namespace qosa {

/// One addend of an additive model: map(law-draw), map in {linear, cubic}.
struct AdditiveTerm {
  enum class Map { linear, cubic };

  Map map;
  double a;  // offset
  double b;  // slope / cubic coefficient
  ScalarLaw law;

  double apply(double x) const {
    return map == Map::linear ? a + b * x : a + b * x * x * x;
  }
  bool is_constant() const { return b == 0.0; }
  /// Exact alpha-quantile of apply(X); maps are monotone in x.
  double quantile(double alpha) const;
  double mean() const;
};

/// Conditional law of beta0 + beta^T X given X_given = v for Gaussian inputs:
/// N(c0 + w.v, sd^2). Precomputed once per conditioning set, then evaluated
/// per sample row.
struct LinearConditional {
  Eigen::VectorXd w;  // aligned with given.members()
  double c0;
  double sd;

  double mean_at(std::span<const double> values) const {
    double m = c0;
    for (Eigen::Index j = 0; j < w.size(); ++j) m += w[j] * values[static_cast<std::size_t>(j)];
    return m;
  }
};

/// A deterministic model Y = eta(X) together with the law of its inputs.
class ModelSpec {
 public:
  enum class Kind {
    linear_gaussian,
    log_linear_gaussian,
    exponential_product,
    exponential_difference,
    additive
  };

  static ModelSpec linear_gaussian(double beta0, Eigen::VectorXd beta, Eigen::VectorXd mu,
                                   Eigen::MatrixXd sigma);
  static ModelSpec log_linear_gaussian(double beta0, Eigen::VectorXd beta, Eigen::VectorXd mu,
                                       Eigen::MatrixXd sigma);
  static ModelSpec exponential_product(double lambda, double delta);
  static ModelSpec exponential_difference(double lambda, double delta);
  static ModelSpec additive(double m0, std::vector<AdditiveTerm> terms);

  /// Built-in model ids: "gaussian2d", "lognormal2d" (optionally with
  /// ":rho=<r>"), "expo-product", "laplace".
  static ModelSpec builtin(const std::string& id);
  static ModelSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  const std::string& id() const { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }

  double evaluate(std::span<const double> x) const;

  /// n input draws, one row per sample; row r consumes stream counters
  /// [r*d, (r+1)*d).
  Eigen::MatrixXd sample_inputs(std::size_t n, const RandomStream& stream,
                                Exec exec = Exec::parallel) const;

  bool has_gaussian_inputs() const {
    return kind_ == Kind::linear_gaussian || kind_ == Kind::log_linear_gaussian;
  }
  /// Gaussian input law; throws for non-Gaussian kinds or singular covariance.
  const GaussianLaw& input_law() const;

  /// 2-d Gaussian-input models only: same model with the input correlation
  /// replaced (marginal scales kept).
  ModelSpec with_correlation(double rho) const;
  double correlation() const;

  bool supports_exact_conditional_quantile(const Coalition& given) const;
  /// Exact alpha-quantile of Y | X_given = values. For the full conditioning
  /// set this is evaluate(values) bit-for-bit.
  double conditional_output_quantile_exact(const Coalition& given, std::span<const double> values,
                                           QuantileLevel alpha) const;

  bool supports_exact_conditional_mean(const Coalition& given) const;
  double conditional_output_mean_exact(const Coalition& given,
                                       std::span<const double> values) const;

  /// Exact unconditional alpha-quantile of Y (the product model goes through
  /// the quadrature-based CDF).
  double output_quantile_exact(QuantileLevel alpha) const;
  double output_mean_exact() const;

  LinearConditional linear_conditional(const Coalition& given) const;

  // raw parameters (Gaussian kinds)
  double beta0() const { return beta0_; }
  const Eigen::VectorXd& beta() const { return beta_; }
  const Eigen::VectorXd& mu() const { return mu_; }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  // rates (exponential kinds)
  double rate_lambda() const { return lambda_; }
  double rate_delta() const { return delta_; }
  // additive pieces
  double m0() const { return m0_; }
  const std::vector<AdditiveTerm>& terms() const { return terms_; }

 private:
  ModelSpec() = default;

  double additive_remainder_quantile(const Coalition& given, double alpha) const;

  Kind kind_ = Kind::linear_gaussian;
  int dim_ = 0;
  std::string id_;

  // linear / log-linear
  double beta0_ = 0.0;
  Eigen::VectorXd beta_;
  Eigen::VectorXd mu_;
  Eigen::MatrixXd sigma_;
  std::shared_ptr<const GaussianLaw> law_;  // null when sigma is singular

  // exponential product / difference
  double lambda_ = 1.0;
  double delta_ = 1.0;

  // additive
  double m0_ = 0.0;
  std::vector<AdditiveTerm> terms_;
};

}  // namespace qosa
