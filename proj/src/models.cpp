#include "qosa/models.hpp"

#include <cmath>
#include <stdexcept>

#include "qosa/analytic.hpp"
#include "qosa/normal.hpp"

namespace qosa {

double AdditiveTerm::quantile(double alpha) const {
  if (is_constant()) return a;
  double q = (b > 0.0) ? law.quantile(alpha) : law.quantile(1.0 - alpha);
  return apply(q);
}

double AdditiveTerm::mean() const {
  return map == Map::linear ? a + b * law.mean() : a + b * law.third_moment();
}

namespace {

void check_gaussian_params(const Eigen::VectorXd& beta, const Eigen::VectorXd& mu,
                           const Eigen::MatrixXd& sigma) {
  if (beta.size() < 1) throw std::invalid_argument("ModelSpec: beta must be nonempty");
  if (mu.size() != beta.size() || sigma.rows() != beta.size() || sigma.cols() != beta.size())
    throw std::invalid_argument("ModelSpec: beta/mu/sigma dimensions disagree");
  if (!sigma.isApprox(sigma.transpose(), 1e-12))
    throw std::invalid_argument("ModelSpec: sigma must be symmetric");
}

std::shared_ptr<const GaussianLaw> try_make_law(const Eigen::VectorXd& mu,
                                                const Eigen::MatrixXd& sigma) {
  try {
    return std::make_shared<const GaussianLaw>(mu, sigma);
  } catch (const std::invalid_argument&) {
    return nullptr;  // singular: analytic paths still work off the raw matrix
  }
}

}  // namespace

ModelSpec ModelSpec::linear_gaussian(double beta0, Eigen::VectorXd beta, Eigen::VectorXd mu,
                                     Eigen::MatrixXd sigma) {
  check_gaussian_params(beta, mu, sigma);
  ModelSpec m;
  m.kind_ = Kind::linear_gaussian;
  m.dim_ = static_cast<int>(beta.size());
  m.beta0_ = beta0;
  m.beta_ = std::move(beta);
  m.mu_ = std::move(mu);
  m.sigma_ = std::move(sigma);
  m.law_ = try_make_law(m.mu_, m.sigma_);
  m.id_ = "linear_gaussian";
  return m;
}

ModelSpec ModelSpec::log_linear_gaussian(double beta0, Eigen::VectorXd beta, Eigen::VectorXd mu,
                                         Eigen::MatrixXd sigma) {
  ModelSpec m = linear_gaussian(beta0, std::move(beta), std::move(mu), std::move(sigma));
  m.kind_ = Kind::log_linear_gaussian;
  m.id_ = "log_linear_gaussian";
  return m;
}

ModelSpec ModelSpec::exponential_product(double lambda, double delta) {
  if (!(lambda > 0.0 && delta > 0.0))
    throw std::invalid_argument("ModelSpec: exponential rates must be positive");
  ModelSpec m;
  m.kind_ = Kind::exponential_product;
  m.dim_ = 2;
  m.lambda_ = lambda;
  m.delta_ = delta;
  m.id_ = "exponential_product";
  return m;
}

ModelSpec ModelSpec::exponential_difference(double lambda, double delta) {
  ModelSpec m = exponential_product(lambda, delta);
  m.kind_ = Kind::exponential_difference;
  m.id_ = "exponential_difference";
  return m;
}

ModelSpec ModelSpec::additive(double m0, std::vector<AdditiveTerm> terms) {
  if (terms.empty()) throw std::invalid_argument("ModelSpec: additive model needs terms");
  ModelSpec m;
  m.kind_ = Kind::additive;
  m.dim_ = static_cast<int>(terms.size());
  m.m0_ = m0;
  m.terms_ = std::move(terms);
  m.id_ = "additive";
  return m;
}

double ModelSpec::evaluate(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_)
    throw std::invalid_argument("ModelSpec::evaluate: input dimension mismatch");
  switch (kind_) {
    case Kind::linear_gaussian: {
      double acc = beta0_;
      for (int j = 0; j < dim_; ++j) acc += beta_[j] * x[static_cast<std::size_t>(j)];
      return acc;
    }
    case Kind::log_linear_gaussian: {
      double acc = beta0_;
      for (int j = 0; j < dim_; ++j) acc += beta_[j] * x[static_cast<std::size_t>(j)];
      return std::exp(acc);
    }
    case Kind::exponential_product:
      return x[0] * x[1];
    case Kind::exponential_difference:
      return x[0] - x[1];
    case Kind::additive: {
      double acc = m0_;
      for (int j = 0; j < dim_; ++j) acc += terms_[static_cast<std::size_t>(j)].apply(x[static_cast<std::size_t>(j)]);
      return acc;
    }
  }
  return 0.0;
}

Eigen::MatrixXd ModelSpec::sample_inputs(std::size_t n, const RandomStream& stream,
                                         Exec exec) const {
  if (has_gaussian_inputs()) return input_law().sample(n, stream, exec);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), dim_);
  const std::uint64_t d = static_cast<std::uint64_t>(dim_);
  if (kind_ == Kind::additive) {
    for_each_index(n, exec, [&](std::size_t r) {
      for (int j = 0; j < dim_; ++j)
        out(static_cast<Eigen::Index>(r), j) =
            terms_[static_cast<std::size_t>(j)].law.draw(stream, r * d + static_cast<std::uint64_t>(j));
    });
  } else {
    const ScalarLaw laws[2] = {ScalarLaw::exponential(lambda_), ScalarLaw::exponential(delta_)};
    for_each_index(n, exec, [&](std::size_t r) {
      out(static_cast<Eigen::Index>(r), 0) = laws[0].draw(stream, r * d);
      out(static_cast<Eigen::Index>(r), 1) = laws[1].draw(stream, r * d + 1);
    });
  }
  return out;
}

const GaussianLaw& ModelSpec::input_law() const {
  if (!has_gaussian_inputs())
    throw std::logic_error("ModelSpec::input_law: model has no Gaussian input law");
  if (!law_)
    throw std::runtime_error("ModelSpec::input_law: covariance is singular; sampling unavailable");
  return *law_;
}

ModelSpec ModelSpec::with_correlation(double rho) const {
  if (!has_gaussian_inputs() || dim_ != 2)
    throw std::invalid_argument("ModelSpec::with_correlation: requires a 2-d Gaussian-input model");
  if (!(rho >= -1.0 && rho <= 1.0))
    throw std::invalid_argument("ModelSpec::with_correlation: rho must lie in [-1,1]");
  double s1 = std::sqrt(sigma_(0, 0)), s2 = std::sqrt(sigma_(1, 1));
  Eigen::MatrixXd sigma(2, 2);
  sigma << s1 * s1, rho * s1 * s2, rho * s1 * s2, s2 * s2;
  ModelSpec m = *this;
  m.sigma_ = sigma;
  m.law_ = try_make_law(m.mu_, m.sigma_);
  return m;
}

double ModelSpec::correlation() const {
  if (!has_gaussian_inputs() || dim_ != 2)
    throw std::invalid_argument("ModelSpec::correlation: requires a 2-d Gaussian-input model");
  return sigma_(0, 1) / std::sqrt(sigma_(0, 0) * sigma_(1, 1));
}

LinearConditional ModelSpec::linear_conditional(const Coalition& given) const {
  if (!has_gaussian_inputs())
    throw std::logic_error("ModelSpec::linear_conditional: requires Gaussian inputs");
  if (given.dim() != dim_) throw std::invalid_argument("linear_conditional: dimension mismatch");

  LinearConditional lc;
  if (given.empty()) {
    lc.w = Eigen::VectorXd(0);
    lc.c0 = beta0_ + beta_.dot(mu_);
    lc.sd = std::sqrt(std::max(0.0, beta_.dot(sigma_ * beta_)));
    return lc;
  }
  if (given.full()) {
    lc.w = beta_;
    lc.c0 = beta0_;
    lc.sd = 0.0;
    return lc;
  }
  const auto idx_g = given.members();
  const auto idx_r = given.complement().members();
  const auto ng = static_cast<Eigen::Index>(idx_g.size());
  const auto nr = static_cast<Eigen::Index>(idx_r.size());
  Eigen::MatrixXd s_gg(ng, ng), s_rg(nr, ng), s_rr(nr, nr);
  Eigen::VectorXd mu_g(ng), mu_r(nr), beta_g(ng), beta_r(nr);
  for (Eigen::Index a = 0; a < ng; ++a) {
    mu_g[a] = mu_[idx_g[a]];
    beta_g[a] = beta_[idx_g[a]];
    for (Eigen::Index b = 0; b < ng; ++b) s_gg(a, b) = sigma_(idx_g[a], idx_g[b]);
  }
  for (Eigen::Index a = 0; a < nr; ++a) {
    mu_r[a] = mu_[idx_r[a]];
    beta_r[a] = beta_[idx_r[a]];
    for (Eigen::Index b = 0; b < ng; ++b) s_rg(a, b) = sigma_(idx_r[a], idx_g[b]);
    for (Eigen::Index b = 0; b < nr; ++b) s_rr(a, b) = sigma_(idx_r[a], idx_r[b]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(s_gg);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("linear_conditional: conditioning block is singular");
  Eigen::MatrixXd gain = llt.solve(s_rg.transpose()).transpose();  // nr x ng
  lc.w = beta_g + gain.transpose() * beta_r;
  lc.c0 = beta0_ + beta_r.dot(mu_r) - beta_r.dot(gain * mu_g);
  Eigen::MatrixXd cond_cov = s_rr - gain * s_rg.transpose();
  lc.sd = std::sqrt(std::max(0.0, beta_r.dot(cond_cov * beta_r)));
  return lc;
}

double ModelSpec::additive_remainder_quantile(const Coalition& given, double alpha) const {
  // quantile of the sum of the non-conditioned terms
  const auto rest = given.complement().members();
  if (rest.empty()) return 0.0;
  if (rest.size() == 1) return terms_[static_cast<std::size_t>(rest[0])].quantile(alpha);
  // multiple remaining terms: closed form only for all-linear normal terms
  double mean = 0.0, var = 0.0;
  for (int j : rest) {
    const auto& t = terms_[static_cast<std::size_t>(j)];
    if (t.map != AdditiveTerm::Map::linear || t.law.kind() != ScalarLaw::Kind::normal)
      throw std::logic_error("additive model: no exact quantile for this conditioning set");
    mean += t.a + t.b * t.law.mean();
    var += t.b * t.b * t.law.variance();
  }
  return mean + std::sqrt(var) * std_normal_quantile(alpha);
}

bool ModelSpec::supports_exact_conditional_quantile(const Coalition& given) const {
  if (given.dim() != dim_) return false;
  if (given.full()) return true;
  switch (kind_) {
    case Kind::linear_gaussian:
    case Kind::log_linear_gaussian:
      return true;
    case Kind::exponential_product:
    case Kind::exponential_difference:
      return true;
    case Kind::additive: {
      const auto rest = given.complement().members();
      if (rest.size() <= 1) return true;
      for (int j : rest) {
        const auto& t = terms_[static_cast<std::size_t>(j)];
        if (!t.is_constant() &&
            (t.map != AdditiveTerm::Map::linear || t.law.kind() != ScalarLaw::Kind::normal))
          return false;
      }
      return true;
    }
  }
  return false;
}

double ModelSpec::conditional_output_quantile_exact(const Coalition& given,
                                                    std::span<const double> values,
                                                    QuantileLevel alpha) const {
  if (given.dim() != dim_)
    throw std::invalid_argument("conditional_output_quantile_exact: dimension mismatch");
  if (values.size() != static_cast<std::size_t>(given.size()))
    throw std::invalid_argument("conditional_output_quantile_exact: values length mismatch");
  if (given.full()) return evaluate(values);  // degenerate conditional: Y itself
  if (given.empty()) return output_quantile_exact(alpha);
  const double a = alpha.value();
  switch (kind_) {
    case Kind::linear_gaussian: {
      LinearConditional lc = linear_conditional(given);
      return lc.mean_at(values) + lc.sd * std_normal_quantile(a);
    }
    case Kind::log_linear_gaussian: {
      LinearConditional lc = linear_conditional(given);
      return std::exp(lc.mean_at(values) + lc.sd * std_normal_quantile(a));
    }
    case Kind::exponential_product:
      // conditioned on one factor x > 0: quantile scales with x
      return given.contains(0) ? values[0] * (-std::log1p(-a) / delta_)
                               : values[0] * (-std::log1p(-a) / lambda_);
    case Kind::exponential_difference:
      return given.contains(0) ? values[0] + std::log(a) / delta_
                               : -values[0] - std::log1p(-a) / lambda_;
    case Kind::additive: {
      double acc = m0_;
      const auto idx_g = given.members();
      for (std::size_t j = 0; j < idx_g.size(); ++j)
        acc += terms_[static_cast<std::size_t>(idx_g[j])].apply(values[j]);
      return acc + additive_remainder_quantile(given, a);
    }
  }
  throw std::logic_error("conditional_output_quantile_exact: unsupported model kind");
}

bool ModelSpec::supports_exact_conditional_mean(const Coalition& given) const {
  return given.dim() == dim_;
}

double ModelSpec::conditional_output_mean_exact(const Coalition& given,
                                                std::span<const double> values) const {
  if (given.dim() != dim_)
    throw std::invalid_argument("conditional_output_mean_exact: dimension mismatch");
  if (values.size() != static_cast<std::size_t>(given.size()))
    throw std::invalid_argument("conditional_output_mean_exact: values length mismatch");
  if (given.full()) return evaluate(values);
  if (given.empty()) return output_mean_exact();
  switch (kind_) {
    case Kind::linear_gaussian:
      return linear_conditional(given).mean_at(values);
    case Kind::log_linear_gaussian: {
      LinearConditional lc = linear_conditional(given);
      return std::exp(lc.mean_at(values) + 0.5 * lc.sd * lc.sd);
    }
    case Kind::exponential_product:
      return given.contains(0) ? values[0] / delta_ : values[0] / lambda_;
    case Kind::exponential_difference:
      return given.contains(0) ? values[0] - 1.0 / delta_ : 1.0 / lambda_ - values[0];
    case Kind::additive: {
      double acc = m0_;
      const auto idx_g = given.members();
      for (std::size_t j = 0; j < idx_g.size(); ++j)
        acc += terms_[static_cast<std::size_t>(idx_g[j])].apply(values[j]);
      for (int j : given.complement().members()) acc += terms_[static_cast<std::size_t>(j)].mean();
      return acc;
    }
  }
  throw std::logic_error("conditional_output_mean_exact: unsupported model kind");
}

double ModelSpec::output_quantile_exact(QuantileLevel alpha) const {
  const double a = alpha.value();
  switch (kind_) {
    case Kind::linear_gaussian: {
      double sd = std::sqrt(std::max(0.0, beta_.dot(sigma_ * beta_)));
      return beta0_ + beta_.dot(mu_) + sd * std_normal_quantile(a);
    }
    case Kind::log_linear_gaussian: {
      double sd = std::sqrt(std::max(0.0, beta_.dot(sigma_ * beta_)));
      return std::exp(beta0_ + beta_.dot(mu_) + sd * std_normal_quantile(a));
    }
    case Kind::exponential_product:
      return exponential_product_quantile(lambda_, delta_, alpha);
    case Kind::exponential_difference: {
      // P(Y <= 0) = lambda / (lambda + delta)
      double p0 = lambda_ / (lambda_ + delta_);
      if (a <= p0) return std::log(a / p0) / delta_;
      return -std::log((1.0 - a) * (lambda_ + delta_) / delta_) / lambda_;
    }
    case Kind::additive: {
      double q = additive_remainder_quantile(Coalition::empty_set(dim_), a);
      return m0_ + q;
    }
  }
  throw std::logic_error("output_quantile_exact: unsupported model kind");
}

double ModelSpec::output_mean_exact() const {
  switch (kind_) {
    case Kind::linear_gaussian:
      return beta0_ + beta_.dot(mu_);
    case Kind::log_linear_gaussian: {
      double var = std::max(0.0, beta_.dot(sigma_ * beta_));
      return std::exp(beta0_ + beta_.dot(mu_) + 0.5 * var);
    }
    case Kind::exponential_product:
      return 1.0 / (lambda_ * delta_);
    case Kind::exponential_difference:
      return 1.0 / lambda_ - 1.0 / delta_;
    case Kind::additive: {
      double acc = m0_;
      for (const auto& t : terms_) acc += t.mean();
      return acc;
    }
  }
  return 0.0;
}

// ---- builtins and JSON ----

namespace {

ModelSpec benchmark_gaussian_2d(bool log_output, double rho) {
  Eigen::VectorXd beta(2), mu(2);
  beta << 1.0, 1.0;
  mu << 0.0, 0.0;
  Eigen::MatrixXd sigma(2, 2);
  sigma << 1.0, 2.0 * rho, 2.0 * rho, 4.0;
  return log_output ? ModelSpec::log_linear_gaussian(0.0, beta, mu, sigma)
                    : ModelSpec::linear_gaussian(0.0, beta, mu, sigma);
}

ScalarLaw law_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "exponential") return ScalarLaw::exponential(j.at("rate").get<double>());
  if (kind == "normal") return ScalarLaw::normal(j.at("mean").get<double>(), j.at("sd").get<double>());
  if (kind == "lognormal")
    return ScalarLaw::lognormal(j.at("log_mean").get<double>(), j.at("log_sd").get<double>());
  throw std::invalid_argument("unknown scalar law kind: " + kind);
}

nlohmann::json law_to_json(const ScalarLaw& law) {
  switch (law.kind()) {
    case ScalarLaw::Kind::exponential: return {{"kind", "exponential"}, {"rate", law.param_a()}};
    case ScalarLaw::Kind::normal:
      return {{"kind", "normal"}, {"mean", law.param_a()}, {"sd", law.param_b()}};
    case ScalarLaw::Kind::lognormal:
      return {{"kind", "lognormal"}, {"log_mean", law.param_a()}, {"log_sd", law.param_b()}};
  }
  return {};
}

}  // namespace

ModelSpec ModelSpec::builtin(const std::string& id) {
  std::string name = id;
  double rho = 0.0;
  if (auto pos = id.find(':'); pos != std::string::npos) {
    name = id.substr(0, pos);
    std::string arg = id.substr(pos + 1);
    if (arg.rfind("rho=", 0) != 0)
      throw std::invalid_argument("unknown builtin model argument: " + arg);
    rho = std::stod(arg.substr(4));
  }
  ModelSpec m = [&] {
    if (name == "gaussian2d") return benchmark_gaussian_2d(false, rho);
    if (name == "lognormal2d") return benchmark_gaussian_2d(true, rho);
    if (name == "expo-product") return exponential_product(0.1, 1.0);
    if (name == "laplace") return exponential_difference(1.0, 1.0);
    throw std::invalid_argument("unknown builtin model: " + name);
  }();
  m.set_id(id);
  return m;
}

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
  if (j.contains("schema") && j.at("schema").get<int>() != 1)
    throw std::invalid_argument("unsupported model schema version");
  const std::string kind = j.at("kind").get<std::string>();
  ModelSpec m = [&]() -> ModelSpec {
    if (kind == "linear_gaussian" || kind == "log_linear_gaussian") {
      auto beta_v = j.at("beta").get<std::vector<double>>();
      auto mu_v = j.at("mu").get<std::vector<double>>();
      auto sig_v = j.at("sigma").get<std::vector<std::vector<double>>>();
      const auto d = static_cast<Eigen::Index>(beta_v.size());
      Eigen::VectorXd beta(d), mu(d);
      Eigen::MatrixXd sigma(d, d);
      for (Eigen::Index i = 0; i < d; ++i) {
        beta[i] = beta_v[static_cast<std::size_t>(i)];
        mu[i] = mu_v.at(static_cast<std::size_t>(i));
        const auto& row = sig_v.at(static_cast<std::size_t>(i));
        for (Eigen::Index k = 0; k < d; ++k) sigma(i, k) = row.at(static_cast<std::size_t>(k));
      }
      double beta0 = j.value("beta0", 0.0);
      return kind == "linear_gaussian" ? linear_gaussian(beta0, beta, mu, sigma)
                                       : log_linear_gaussian(beta0, beta, mu, sigma);
    }
    if (kind == "exponential_product")
      return exponential_product(j.at("lambda").get<double>(), j.at("delta").get<double>());
    if (kind == "exponential_difference")
      return exponential_difference(j.at("lambda").get<double>(), j.at("delta").get<double>());
    if (kind == "additive") {
      std::vector<AdditiveTerm> terms;
      for (const auto& tj : j.at("terms")) {
        const std::string map = tj.at("map").get<std::string>();
        if (map != "linear" && map != "cubic")
          throw std::invalid_argument("unknown additive map: " + map);
        terms.push_back(AdditiveTerm{map == "linear" ? AdditiveTerm::Map::linear
                                                     : AdditiveTerm::Map::cubic,
                                     tj.value("a", 0.0), tj.at("b").get<double>(),
                                     law_from_json(tj.at("law"))});
      }
      return additive(j.value("m0", 0.0), std::move(terms));
    }
    throw std::invalid_argument("unknown model kind: " + kind);
  }();
  if (j.contains("id")) m.set_id(j.at("id").get<std::string>());
  return m;
}

nlohmann::json ModelSpec::to_json() const {
  nlohmann::json j;
  j["schema"] = 1;
  j["id"] = id_;
  switch (kind_) {
    case Kind::linear_gaussian:
    case Kind::log_linear_gaussian: {
      j["kind"] = kind_ == Kind::linear_gaussian ? "linear_gaussian" : "log_linear_gaussian";
      j["beta0"] = beta0_;
      j["beta"] = std::vector<double>(beta_.data(), beta_.data() + beta_.size());
      j["mu"] = std::vector<double>(mu_.data(), mu_.data() + mu_.size());
      std::vector<std::vector<double>> sig;
      for (Eigen::Index r = 0; r < sigma_.rows(); ++r) {
        std::vector<double> row;
        for (Eigen::Index c = 0; c < sigma_.cols(); ++c) row.push_back(sigma_(r, c));
        sig.push_back(std::move(row));
      }
      j["sigma"] = sig;
      break;
    }
    case Kind::exponential_product:
    case Kind::exponential_difference:
      j["kind"] = kind_ == Kind::exponential_product ? "exponential_product"
                                                     : "exponential_difference";
      j["lambda"] = lambda_;
      j["delta"] = delta_;
      break;
    case Kind::additive: {
      j["kind"] = "additive";
      j["m0"] = m0_;
      nlohmann::json terms = nlohmann::json::array();
      for (const auto& t : terms_) {
        terms.push_back({{"map", t.map == AdditiveTerm::Map::linear ? "linear" : "cubic"},
                         {"a", t.a},
                         {"b", t.b},
                         {"law", law_to_json(t.law)}});
      }
      j["terms"] = terms;
      break;
    }
  }
  return j;
}

}  // namespace qosa
