#include "qosa/checks.hpp"

#include <omp.h>  // omp_set_num_threads in the thread-count determinism check

#include <algorithm>
#include <array>
#include <bit>
#include <limits>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

#include "qosa/analytic.hpp"
#include "qosa/contrast.hpp"
#include "qosa/estimators.hpp"
#include "qosa/gaussian.hpp"
#include "qosa/models.hpp"
#include "qosa/normal.hpp"
#include "qosa/quadrature.hpp"
#include "qosa/rng.hpp"
#include "qosa/sweep.hpp"

namespace qosa::checks {

namespace {

using clock_type = std::chrono::steady_clock;

CheckResult timed(const std::string& name, double tolerance,
                  const std::function<std::pair<double, std::string>()>& body) {
  auto t0 = clock_type::now();
  double measured = 0.0;
  std::string detail;
  bool threw = false;
  try {
    std::tie(measured, detail) = body();
  } catch (const std::exception& e) {
    threw = true;
    detail = std::string("exception: ") + e.what();
    measured = std::numeric_limits<double>::infinity();
  }
  double secs = std::chrono::duration<double>(clock_type::now() - t0).count();
  return CheckResult{name, measured, tolerance, !threw && measured <= tolerance, detail, secs};
}

Eigen::MatrixXd random_pd_sigma(int d, const RandomStream& s) {
  Eigen::MatrixXd a(d, d);
  std::uint64_t c = 0;
  for (int r = 0; r < d; ++r)
    for (int k = 0; k < d; ++k) a(r, k) = s.normal_at(c++);
  Eigen::MatrixXd sig = a * a.transpose();
  sig += 0.5 * d * Eigen::MatrixXd::Identity(d, d);
  return sig;
}

Eigen::VectorXd random_vector(int d, const RandomStream& s, std::uint64_t offset = 1000) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = s.normal_at(offset + static_cast<std::uint64_t>(i));
  return v;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::vector<std::pair<double, double>> curve(const std::vector<ResultRow>& rows,
                                             const std::string& index, const std::string& input,
                                             bool x_is_rho) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : rows)
    if (r.index == index && r.input == input)
      pts.emplace_back(x_is_rho ? r.rho.value_or(0.0) : r.alpha, r.value);
  std::sort(pts.begin(), pts.end());
  return pts;
}

}  // namespace

// ===== probability core =====

CheckResult normal_quantile_roundtrip(const Context&) {
  return timed("normal-quantile-roundtrip", 1e-8, [] {
    double worst = 0.0;
    for (double x = -6.0; x <= 6.0; x += 0.01)
      worst = std::max(worst, std::abs(std_normal_quantile(std_normal_cdf(x)) - x));
    // spot values against high-precision references
    worst = std::max(worst, std::abs(std_normal_cdf(0.0) - 0.5) * 1e4);
    worst = std::max(worst, std::abs(std_normal_cdf(-1.0) - 0.15865525393145707) * 1e4);
    worst = std::max(worst,
                     std::abs(std_normal_cdf(-std::sqrt(5.0)) - 0.012673659338734126) * 1e4);
    worst = std::max(worst, std::abs(std_normal_quantile(0.975) - 1.959963984540054) * 10);
    return std::pair{worst, std::string("max |quantile(cdf(x)) - x| on [-6,6]")};
  });
}

CheckResult cholesky_roundtrip(const Context& ctx) {
  return timed("cholesky-roundtrip", 1e-10, [&] {
    double worst = 0.0;
    for (int d = 2; d <= 8; ++d)
      for (int rep = 0; rep < 5; ++rep) {
        RandomStream s(ctx.seed, 100 + static_cast<std::uint64_t>(10 * d + rep));
        GaussianLaw law(Eigen::VectorXd::Zero(d), random_pd_sigma(d, s));
        const auto& l = law.cholesky_factor();
        Eigen::MatrixXd back = l * l.transpose();
        double rel = (back - law.covariance()).cwiseAbs().maxCoeff() /
                     law.covariance().cwiseAbs().maxCoeff();
        worst = std::max(worst, rel);
      }
    return std::pair{worst, std::string("max entrywise relative reconstruction error")};
  });
}

CheckResult gaussian_conditional_composition(const Context& ctx) {
  return timed("gaussian-conditional-composition", 1e-10, [&] {
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
      const int d = 5;
      RandomStream s(ctx.seed, 200 + static_cast<std::uint64_t>(rep));
      GaussianLaw law(random_vector(d, s), random_pd_sigma(d, s));
      Eigen::VectorXd v1(2), v2(2);
      v1 << 0.3, -1.1;
      v2 << 0.7, 0.2;
      // condition on {1,3}, then on what was {0,4}; compare with {0,1,3,4}
      GaussianLaw first = law.conditional(Coalition::of(d, {1, 3}), v1);
      // remaining coordinates are (0,2,4) -> positions (0,1,2)
      GaussianLaw second = first.conditional(Coalition::of(3, {0, 2}), v2);
      Eigen::VectorXd v_joint(4);
      v_joint << v2[0], v1[0], v1[1], v2[1];  // ordered by original index 0,1,3,4
      GaussianLaw direct = law.conditional(Coalition::of(d, {0, 1, 3, 4}), v_joint);
      worst = std::max(worst, (second.mean() - direct.mean()).cwiseAbs().maxCoeff());
      worst = std::max(worst,
                       (second.covariance() - direct.covariance()).cwiseAbs().maxCoeff());
      // conditional covariance must not depend on the conditioning values
      GaussianLaw other_values = law.conditional(Coalition::of(d, {1, 3}), v2);
      worst = std::max(worst,
                       (other_values.covariance() - first.covariance()).cwiseAbs().maxCoeff());
    }
    return std::pair{worst, std::string("max moment difference, two-step vs direct")};
  });
}

CheckResult gaussian_conditional_regression(const Context& ctx) {
  return timed("gaussian-conditional-regression", 0.01, [&] {
    const int d = 3;
    RandomStream s(ctx.seed, 300);
    GaussianLaw law(random_vector(d, s), random_pd_sigma(d, s));
    const std::size_t n = 1'000'000;
    Eigen::MatrixXd x = law.sample(n, s.substream(301), ctx.exec);
    // regress X_0 on (X_1, X_2); the fit must match the conditional law
    Eigen::MatrixXd design(n, 3);
    design.col(0).setOnes();
    design.col(1) = x.col(1);
    design.col(2) = x.col(2);
    Eigen::VectorXd coef =
        (design.transpose() * design).ldlt().solve(design.transpose() * x.col(0));
    Eigen::VectorXd resid = x.col(0) - design * coef;
    double resid_var = resid.squaredNorm() / static_cast<double>(n);

    Eigen::VectorXd probe(2);
    probe << 0.4, -0.8;
    GaussianLaw cond = law.conditional(Coalition::of(d, {1, 2}), probe);
    double fitted = coef[0] + coef[1] * probe[0] + coef[2] * probe[1];
    double worst = std::abs(fitted - cond.mean()[0]);
    worst = std::max(worst, std::abs(resid_var - cond.covariance()(0, 0)));
    return std::pair{worst, std::string("regression (n=1e6) vs Schur conditional moments")};
  });
}

CheckResult gaussian_sample_moments(const Context& ctx) {
  return timed("gaussian-sample-moments", 1.0, [&] {
    const std::size_t n = 1'000'000;
    RandomStream s(ctx.seed, 400);
    double bound = 4.0 / std::sqrt(static_cast<double>(n));
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += s.normal_at(i);
    mean /= static_cast<double>(n);
    double worst = std::abs(mean) / bound;

    ScalarLaw expo = ScalarLaw::exponential(1.0);
    double emean = 0.0;
    RandomStream se(ctx.seed, 401);
    for (std::size_t i = 0; i < n; ++i) emean += expo.draw(se, i);
    emean /= static_cast<double>(n);
    worst = std::max(worst, std::abs(emean - 1.0) / bound);

    const int d = 3;
    RandomStream sg(ctx.seed, 402);
    GaussianLaw law(random_vector(d, sg), random_pd_sigma(d, sg));
    Eigen::MatrixXd x = law.sample(n, sg.substream(403), ctx.exec);
    Eigen::RowVectorXd m = x.colwise().mean();
    Eigen::MatrixXd centered = x.rowwise() - m;
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        double saa = law.covariance()(a, a), sbb = law.covariance()(b, b),
               sab = law.covariance()(a, b);
        double se_ab = std::sqrt((saa * sbb + sab * sab) / static_cast<double>(n));
        worst = std::max(worst, std::abs(cov(a, b) - sab) / (5.0 * se_ab));
      }
    return std::pair{worst, std::string("max deviation over its sampling allowance")};
  });
}

CheckResult stream_determinism(const Context& ctx) {
  return timed("stream-determinism", 0.0, [&] {
    RandomStream a(ctx.seed, 7), b(ctx.seed, 7), c(ctx.seed, 8);
    double worst = 0.0;
    bool any_diff = false;
    for (std::uint64_t i = 0; i < 10000; ++i) {
      if (a.bits_at(i) != b.bits_at(i)) worst = 1.0;
      if (a.bits_at(i) != c.bits_at(i)) any_diff = true;
      double u = a.uniform_at(i);
      if (!(u > 0.0 && u < 1.0)) worst = 1.0;
    }
    if (!any_diff) worst = 1.0;
    return std::pair{worst, std::string("identical streams match; substreams differ")};
  });
}

// ===== contrast =====

CheckResult pinball_argmin(const Context& ctx) {
  return timed("pinball-argmin", 0.0, [&] {
    double worst = 0.0;
    for (int rep = 0; rep < 30; ++rep) {
      RandomStream s(ctx.seed, 500 + static_cast<std::uint64_t>(rep));
      std::size_t n = 1 + s.uniform_int_at(0, 200);
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = s.normal_at(i + 1) * 3.0;
      std::vector<double> sorted = y;
      std::sort(sorted.begin(), sorted.end());
      QuantileLevel a(0.02 + 0.96 * s.uniform_at(5000));
      double q = empirical_quantile(sorted, a);
      double at_q = mean_pinball_loss(y, q, a);
      for (double theta : sorted)
        worst = std::max(worst, at_q - mean_pinball_loss(y, theta, a));
      for (double theta = -4.0; theta <= 4.0; theta += 0.37)
        worst = std::max(worst, at_q - mean_pinball_loss(y, theta, a));
    }
    return std::pair{worst, std::string("max excess of loss at empirical quantile")};
  });
}

CheckResult lemma_truncated_expectation(const Context& ctx) {
  return timed("lemma-truncated-expectation", 0.0, [&] {
    double worst = -1.0;
    for (int rep = 0; rep < 200; ++rep) {
      RandomStream s(ctx.seed, 600 + static_cast<std::uint64_t>(rep));
      std::size_t n = 2 + s.uniform_int_at(0, 9);  // up to 10 atoms
      std::vector<double> atoms(n);
      for (std::size_t i = 0; i < n; ++i) atoms[i] = s.normal_at(i) * 2.0;
      std::sort(atoms.begin(), atoms.end());
      // prefix sums of the sorted atoms = E[X 1{X <= q^{k/n}}] * n
      std::vector<double> prefix(n + 1, 0.0);
      for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + atoms[i];
      for (std::uint64_t mask = 1; mask < (1ull << n); ++mask) {
        int k = std::popcount(mask);
        double event_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i)  // ascending atom order keeps fp monotone
          if (mask & (1ull << i)) event_sum += atoms[i];
        worst = std::max(worst, prefix[static_cast<std::size_t>(k)] - event_sum);
      }
    }
    return std::pair{std::max(worst, 0.0) > 0.0 ? worst : 0.0,
                     std::string("max of E[X 1{X<=q}] - E[X 1_E] over all events")};
  });
}

CheckResult quantile_translation_scaling(const Context& ctx) {
  return timed("quantile-translation-scaling", 0.0, [&] {
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
      RandomStream s(ctx.seed, 700 + static_cast<std::uint64_t>(rep));
      std::size_t n = 3 + s.uniform_int_at(0, 400);
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = s.normal_at(i) * 5.0;
      std::sort(y.begin(), y.end());
      QuantileLevel a(0.02 + 0.96 * s.uniform_at(9000));
      double c = s.normal_at(9001) * 10.0;
      double k = std::exp(s.normal_at(9002));
      double q = empirical_quantile(y, a);
      std::vector<double> shifted(n), scaled(n);
      for (std::size_t i = 0; i < n; ++i) {
        shifted[i] = y[i] + c;
        scaled[i] = y[i] * k;
      }
      worst = std::max(worst, std::abs(empirical_quantile(shifted, a) - (q + c)));
      worst = std::max(worst, std::abs(empirical_quantile(scaled, a) - q * k));
    }
    return std::pair{worst, std::string("translation/positive-scale equivariance, exact")};
  });
}

CheckResult ineq_quantile_nonnegative(const Context& ctx) {
  return timed("avg-contrast-nonnegative", 0.0, [&] {
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
      RandomStream s(ctx.seed, 800 + static_cast<std::uint64_t>(rep));
      std::size_t n = 100 + s.uniform_int_at(0, 1900);
      std::vector<double> y(n);
      bool heavy = (rep % 3 == 0);
      for (std::size_t i = 0; i < n; ++i)
        y[i] = heavy ? std::exp(s.normal_at(i)) : s.normal_at(i) * 2.0 + 1.0;
      QuantileLevel a(0.05 + 0.9 * s.uniform_at(9100));
      auto ac = average_contrast(y, ContrastKind::pinball(a));
      worst = std::max(worst, -ac.value);
    }
    return std::pair{worst, std::string("alpha*E[Y] - E[Y 1{Y<=q}] stays nonnegative")};
  });
}

CheckResult lognormal_monotone_map(const Context& ctx) {
  return timed("quantile-monotone-map", 0.0, [&] {
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      RandomStream s(ctx.seed, 900 + static_cast<std::uint64_t>(rep));
      std::size_t n = 10 + s.uniform_int_at(0, 500);
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = s.normal_at(i);
      std::sort(y.begin(), y.end());
      QuantileLevel a(0.02 + 0.96 * s.uniform_at(9200));
      std::vector<double> ey(n);
      for (std::size_t i = 0; i < n; ++i) ey[i] = std::exp(y[i]);
      worst = std::max(worst,
                       std::abs(empirical_quantile(ey, a) - std::exp(empirical_quantile(y, a))));
    }
    return std::pair{worst, std::string("quantile of exp(Y) equals exp(quantile of Y)")};
  });
}

// ===== analytic closed forms =====

CheckResult analytic_self_consistency(const Context&) {
  return timed("analytic-self-consistency", 1e-12, [] {
    auto model = ModelSpec::builtin("gaussian2d");
    auto t0 = clock_type::now();
    QosaPair p = gaussian_linear_qosa(model, 0);
    std::vector<double> sh = gaussian_linear_qose(model);
    double runtime = std::chrono::duration<double>(clock_type::now() - t0).count();
    const double s5 = std::sqrt(5.0);
    double worst = std::abs(p.first_order - (1.0 - 2.0 / s5));
    worst = std::max(worst, std::abs(p.total - 1.0 / s5));
    worst = std::max(worst, std::abs(sh[0] - (0.5 - 1.0 / s5 + 0.5 / s5)));
    worst = std::max(worst, std::abs(sh[0] + sh[1] - 1.0));
    if (runtime >= 1e-3) worst = std::max(worst, 1.0);
    return std::pair{worst, "runtime " + fmt(runtime * 1e3) + " ms (limit 1)"};
  });
}

CheckResult alpha_invariance_gaussian(const Context&) {
  return timed("alpha-invariance-gaussian", 0.0, [] {
    auto model = ModelSpec::builtin("gaussian2d").with_correlation(0.4);
    double worst = 0.0;
    AnalyticIndexSet base = analytic_indices(model, QuantileLevel(0.5));
    for (double a : {0.05, 0.95}) {
      AnalyticIndexSet other = analytic_indices(model, QuantileLevel(a));
      for (int i = 0; i < 2; ++i) {
        worst = std::max(worst, std::abs(base.first_order[i] - other.first_order[i]));
        worst = std::max(worst, std::abs(base.total[i] - other.total[i]));
        worst = std::max(worst, std::abs(base.qose[i] - other.qose[i]));
      }
    }
    return std::pair{worst, std::string("linear Gaussian indices identical across levels")};
  });
}

CheckResult location_invariance(const Context& ctx) {
  return timed("location-invariance", 0.0, [&] {
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
      RandomStream s(ctx.seed, 1000 + static_cast<std::uint64_t>(rep));
      const int d = 2 + static_cast<int>(s.uniform_int_at(0, 4));
      Eigen::MatrixXd sigma = random_pd_sigma(d, s);
      Eigen::VectorXd beta = random_vector(d, s);
      auto base = ModelSpec::log_linear_gaussian(0.0, beta, Eigen::VectorXd::Zero(d), sigma);
      auto moved =
          ModelSpec::log_linear_gaussian(7.25, beta, random_vector(d, s, 2000) * 3.0, sigma);
      QuantileLevel a(0.3);
      for (int i = 0; i < d; ++i) {
        QosaPair p0 = lognormal_qosa(base, i, a), p1 = lognormal_qosa(moved, i, a);
        worst = std::max(worst, std::abs(p0.first_order - p1.first_order));
        worst = std::max(worst, std::abs(p0.total - p1.total));
      }
      auto q0 = lognormal_qose(base, a), q1 = lognormal_qose(moved, a);
      for (int i = 0; i < d; ++i) worst = std::max(worst, std::abs(q0[i] - q1[i]));
    }
    return std::pair{worst, std::string("offset and input means never enter the indices")};
  });
}

CheckResult qose_efficiency_random(const Context& ctx) {
  return timed("qose-efficiency", 1e-12, [&] {
    double worst = 0.0;
    for (int d = 2; d <= 8; ++d)
      for (int rep = 0; rep < 3; ++rep) {
        RandomStream s(ctx.seed, 1100 + static_cast<std::uint64_t>(10 * d + rep));
        Eigen::MatrixXd sigma = random_pd_sigma(d, s);
        Eigen::VectorXd beta = random_vector(d, s);
        auto lin = ModelSpec::linear_gaussian(0.0, beta, Eigen::VectorXd::Zero(d), sigma);
        auto log = ModelSpec::log_linear_gaussian(0.0, beta, Eigen::VectorXd::Zero(d), sigma);
        auto shl = gaussian_linear_qose(lin);
        auto shg = lognormal_qose(log, QuantileLevel(0.7));
        worst = std::max(worst, std::abs(std::accumulate(shl.begin(), shl.end(), 0.0) - 1.0));
        worst = std::max(worst, std::abs(std::accumulate(shg.begin(), shg.end(), 0.0) - 1.0));
      }
    return std::pair{worst, std::string("effects sum to 1 for random covariances up to d=8")};
  });
}

CheckResult qose_two_routes(const Context& ctx) {
  return timed("qose-two-routes", 1e-10, [&] {
    double worst = 0.0;
    // independent route: direct weighted subset sum, no cost-table machinery
    auto direct = [](const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma, int i,
                     const std::function<double(double)>& g) {
      const int d = static_cast<int>(beta.size());
      double total = 0.0;
      for (std::uint64_t mask = 0; mask < (1ull << d); ++mask) {
        if (mask & (1ull << i)) continue;
        int k = std::popcount(mask);
        double binom = 1.0;
        for (int j = 0; j < k; ++j) binom = binom * static_cast<double>(d - 1 - j) / (j + 1);
        double with_i = gaussian_conditional_scale(beta, sigma,
                                                   Coalition(d, mask | (1ull << i)));
        double without = gaussian_conditional_scale(beta, sigma, Coalition(d, mask));
        total += (g(with_i) - g(without)) / binom;
      }
      return total / d;
    };
    for (int rep = 0; rep < 8; ++rep) {
      RandomStream s(ctx.seed, 1200 + static_cast<std::uint64_t>(rep));
      const int d = 2 + static_cast<int>(s.uniform_int_at(0, 5));
      Eigen::MatrixXd sigma = random_pd_sigma(d, s);
      Eigen::VectorXd beta = random_vector(d, s);
      auto lin = ModelSpec::linear_gaussian(0.0, beta, Eigen::VectorXd::Zero(d), sigma);
      auto log = ModelSpec::log_linear_gaussian(0.0, beta, Eigen::VectorXd::Zero(d), sigma);
      const double sigma_y = gaussian_conditional_scale(beta, sigma, Coalition::full_set(d));
      auto shl = gaussian_linear_qose(lin);
      const double a = 0.35, z = std_normal_quantile(a);
      const double norm = a - std_normal_cdf(z - sigma_y);
      auto shg = lognormal_qose(log, QuantileLevel(a));
      for (int i = 0; i < d; ++i) {
        double v1 = direct(beta, sigma, i, [&](double b) { return b / sigma_y; });
        double v2 = direct(beta, sigma, i,
                           [&](double b) { return (a - std_normal_cdf(z - b)) / norm; });
        worst = std::max(worst, std::abs(shl[i] - v1));
        worst = std::max(worst, std::abs(shg[i] - v2));
      }
    }
    // closed 2-d displays, including the |rho| = 1 limits
    for (double rho : {-1.0, -0.6, 0.0, 0.75, 1.0}) {
      auto m = ModelSpec::builtin("gaussian2d").with_correlation(rho);
      double s1 = 1.0, s2 = 2.0, b1 = 1.0, b2 = 1.0;
      double sy = std::sqrt(b1 * b1 * s1 * s1 + 2 * rho * b1 * b2 * s1 * s2 + b2 * b2 * s2 * s2);
      double root = std::sqrt(std::max(0.0, 1.0 - rho * rho));
      double sh1 = 0.5 - b2 * s2 * root / (2 * sy) + b1 * s1 * root / (2 * sy);
      auto sh = gaussian_linear_qose(m);
      worst = std::max(worst, std::abs(sh[0] - sh1));
      QosaPair p = gaussian_linear_qosa(m, 0);
      worst = std::max(worst, std::abs(p.first_order - (1.0 - b2 * s2 * root / sy)));
      worst = std::max(worst, std::abs(p.total - b1 * s1 * root / sy));
    }
    return std::pair{worst, std::string("subset-sum route and 2-d closed forms agree")};
  });
}

CheckResult sandwich_orderings_2d(const Context&) {
  return timed("sandwich-orderings-2d", 1e-12, [] {
    double worst = 0.0;
    for (double rho = -1.0; rho <= 1.0001; rho += 0.05) {
      double r = std::clamp(rho, -1.0, 1.0);
      auto lin = ModelSpec::builtin("gaussian2d").with_correlation(r);
      auto log = ModelSpec::builtin("lognormal2d").with_correlation(r);
      auto shl = gaussian_linear_qose(lin);
      for (double a = 0.05; a <= 0.951; a += 0.05) {
        QuantileLevel lvl(a);
        auto shg = lognormal_qose(log, lvl);
        for (int i = 0; i < 2; ++i) {
          QosaPair pl = gaussian_linear_qosa(lin, i);
          QosaPair pg = lognormal_qosa(log, i, lvl);
          double lo_l = std::min(pl.first_order, pl.total),
                 hi_l = std::max(pl.first_order, pl.total);
          double lo_g = std::min(pg.first_order, pg.total),
                 hi_g = std::max(pg.first_order, pg.total);
          worst = std::max({worst, lo_l - shl[i], shl[i] - hi_l, lo_g - shg[i], shg[i] - hi_g});
        }
      }
    }
    return std::pair{worst, std::string("Shapley effect between first-order and total")};
  });
}

CheckResult additive_independent_orderings(const Context& ctx) {
  return timed("additive-independent-orderings", 1e-12, [&] {
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
      RandomStream s(ctx.seed, 1300 + static_cast<std::uint64_t>(rep));
      const int d = 2 + static_cast<int>(s.uniform_int_at(0, 4));
      Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(d, d);
      for (int i = 0; i < d; ++i) sigma(i, i) = 0.2 + 3.0 * s.uniform_at(50 + i);
      Eigen::VectorXd beta = random_vector(d, s);
      auto lin = ModelSpec::linear_gaussian(0.0, beta, Eigen::VectorXd::Zero(d), sigma);
      auto sh = gaussian_linear_qose(lin);
      double sum_first = 0.0;
      for (int i = 0; i < d; ++i) {
        QosaPair p = gaussian_linear_qosa(lin, i);
        sum_first += p.first_order;
        worst = std::max(worst, p.first_order - p.total);     // S_i <= ST_i
        worst = std::max(worst, p.first_order - sh[i]);       // S_i <= Sh_i
        worst = std::max(worst, sh[i] - p.total);             // Sh_i <= ST_i
      }
      worst = std::max(worst, sum_first - 1.0);               // sum S_i <= 1
    }
    return std::pair{worst, std::string("50 random additive independent Gaussian models")};
  });
}

CheckResult product_cdf_vs_bessel(const Context&) {
  return timed("product-cdf-vs-bessel", 1e-9, [] {
    double worst = 0.0;
    for (double z : {1e-4, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 12.0}) {
      double quad = exponential_product_cdf(1.0, 1.0, z);
      double bessel = 1.0 - 2.0 * std::sqrt(z) * std::cyl_bessel_k(1, 2.0 * std::sqrt(z));
      worst = std::max(worst, std::abs(quad - bessel));
    }
    return std::pair{worst, std::string("quadrature CDF vs Bessel-K closed form")};
  });
}

CheckResult product_crossing(const Context&) {
  return timed("product-crossing", 0.02, [] {
    std::vector<double> alphas, st;
    for (double a = 0.90; a <= 0.9951; a += 0.0025) {
      alphas.push_back(a);
      st.push_back(exponential_product_qosa(0.1, 1.0, QuantileLevel(a)).total);
    }
    int crossings = 0;
    double alpha_star = 0.0;
    for (std::size_t i = 1; i < st.size(); ++i)
      if ((st[i - 1] - 0.5) > 0.0 && (st[i] - 0.5) <= 0.0) {
        ++crossings;
        alpha_star = 0.5 * (alphas[i - 1] + alphas[i]);
      }
    // beyond the crossing the total index drops below the first-order one and
    // the two first-order indices sum above 1
    bool ordered = true;
    for (std::size_t i = 0; i < st.size(); ++i) {
      double s = 1.0 - st[i];
      if (alphas[i] > alpha_star + 0.003 && crossings == 1 && !(st[i] < s && 2.0 * s > 1.0))
        ordered = false;
      if (alphas[i] < alpha_star - 0.003 && !(st[i] > s)) ordered = false;
    }
    // also unique over the rest of (0,1): the total index stays above 1/2 below 0.9
    for (double a = 0.05; a < 0.9; a += 0.05)
      if (exponential_product_qosa(0.1, 1.0, QuantileLevel(a)).total <= 0.5) ordered = false;
    double measured = (crossings == 1 && ordered) ? std::abs(alpha_star - 0.96) : 1.0;
    return std::pair{measured, "alpha* = " + fmt(alpha_star) + ", crossings = " +
                                   std::to_string(crossings)};
  });
}

CheckResult product_scale_invariance(const Context&) {
  return timed("product-scale-invariance", 1e-9, [] {
    double worst = 0.0;
    for (double a : {0.2, 0.5, 0.9}) {
      QosaPair base = exponential_product_qosa(1.0, 1.0, QuantileLevel(a));
      for (auto [l, dd] : {std::pair{0.1, 1.0}, std::pair{2.0, 3.0}, std::pair{0.5, 0.01}}) {
        QosaPair other = exponential_product_qosa(l, dd, QuantileLevel(a));
        worst = std::max(worst, std::abs(base.first_order - other.first_order));
        worst = std::max(worst, std::abs(base.total - other.total));
        worst = std::max(worst, std::abs(other.first_order + other.total - 1.0));
      }
    }
    return std::pair{worst, std::string("indices invariant under input rate rescaling")};
  });
}

CheckResult kucherenko_flat_below_half(const Context&) {
  return timed("kucherenko-flat-regions", 1e-12, [] {
    double worst = 0.0;
    auto ref_lo = laplace_kucherenko(QuantileLevel(0.25));
    auto ref_hi = laplace_kucherenko(QuantileLevel(0.75));
    for (double a = 0.01; a < 0.4999; a += 0.01) {
      auto k = laplace_kucherenko(QuantileLevel(a));
      worst = std::max(worst, std::abs(k.qbar_abs[0] - ref_lo.qbar_abs[0]));
      worst = std::max(worst, std::abs(k.qbar_sq[0] - ref_lo.qbar_sq[0]));
      auto kh = laplace_kucherenko(QuantileLevel(1.0 - a));
      worst = std::max(worst, std::abs(kh.qbar_abs[1] - ref_hi.qbar_abs[1]));
      worst = std::max(worst, std::abs(kh.qbar_sq[1] - ref_hi.qbar_sq[1]));
    }
    // the constant equals log 2 for the absolute-value index
    worst = std::max(worst, std::abs(ref_lo.qbar_abs[0] - std::log(2.0)));
    return std::pair{worst, std::string("first input flat below 1/2, second flat above")};
  });
}

CheckResult kucherenko_sq_nonmonotone(const Context&) {
  return timed("kucherenko-squared-nonmonotone", 0.0, [] {
    int sign_changes_1 = 0, sign_changes_2 = 0;
    double prev1 = 0, prev2 = 0;
    bool first = true;
    double last1 = 0, last2 = 0;
    for (double a = 0.01; a < 0.999; a += 0.01) {
      auto k = laplace_kucherenko(QuantileLevel(a));
      if (!first) {
        double d1 = k.qbar_sq[0] - last1, d2 = k.qbar_sq[1] - last2;
        if (prev1 != 0.0 && d1 != 0.0 && ((prev1 > 0) != (d1 > 0))) ++sign_changes_1;
        if (prev2 != 0.0 && d2 != 0.0 && ((prev2 > 0) != (d2 > 0))) ++sign_changes_2;
        if (d1 != 0.0) prev1 = d1;
        if (d2 != 0.0) prev2 = d2;
      }
      last1 = k.qbar_sq[0];
      last2 = k.qbar_sq[1];
      first = false;
    }
    double measured = (sign_changes_1 >= 1 && sign_changes_2 >= 1) ? 0.0 : 1.0;
    return std::pair{measured, "difference sign changes: " + std::to_string(sign_changes_1) +
                                   ", " + std::to_string(sign_changes_2)};
  });
}

CheckResult laplace_sign_probability(const Context& ctx) {
  return timed("difference-sign-probability", 1.0, [&] {
    double worst = 0.0;
    int rep = 0;
    for (auto [l, dd] : {std::pair{1.0, 1.0}, std::pair{2.0, 0.5}}) {
      auto m = ModelSpec::exponential_difference(l, dd);
      const std::size_t n = 200'000;
      Eigen::MatrixXd x = m.sample_inputs(n, RandomStream(ctx.seed, 1400 + rep++), ctx.exec);
      double count = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        double v[2] = {x(static_cast<Eigen::Index>(r), 0), x(static_cast<Eigen::Index>(r), 1)};
        if (m.evaluate(v) <= 0.0) count += 1.0;
      }
      double p_hat = count / static_cast<double>(n);
      double p = l / (l + dd);
      double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
      worst = std::max(worst, std::abs(p_hat - p) / (4.0 * se));
    }
    return std::pair{worst, std::string("P(Y<=0) = lambda/(lambda+delta), within 4 se")};
  });
}

// ===== shapley engine =====

namespace {

CostTable random_table(int d, const RandomStream& s, std::uint64_t offset = 0) {
  std::vector<double> costs(std::size_t{1} << d, 0.0);
  for (std::size_t m = 1; m < costs.size(); ++m)
    costs[m] = s.uniform_at(offset + m) * 3.0 - 0.5;
  return CostTable(d, std::move(costs));
}

std::vector<double> shapley_all_permutations(const CostTable& t) {
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
      double c = t.cost(mask);
      acc[static_cast<std::size_t>(p)] += c - prev;
      prev = c;
    }
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (auto& v : acc) v /= static_cast<double>(count);
  return acc;
}

}  // namespace

CheckResult shapley_axioms(const Context& ctx) {
  return timed("shapley-axioms", 1e-12, [&] {
    double worst = 0.0;
    for (int d = 2; d <= 6; ++d) {
      RandomStream s(ctx.seed, 1500 + static_cast<std::uint64_t>(d));
      CostTable t = random_table(d, s);
      auto sh = shapley_exact(t, ctx.exec);
      // efficiency
      worst = std::max(worst, std::abs(std::accumulate(sh.values.begin(), sh.values.end(), 0.0) -
                                       t.grand_cost()));
      // symmetry: symmetrize players 0 and 1 by averaging over the swap
      std::vector<double> sym_costs(t.costs());
      for (std::size_t m = 0; m < sym_costs.size(); ++m) {
        std::uint64_t swapped = (m & ~3ull) | ((m & 1ull) << 1) | ((m >> 1) & 1ull);
        sym_costs[m] = 0.5 * (t.cost(m) + t.cost(swapped));
      }
      auto sym = shapley_exact(CostTable(d, std::move(sym_costs)), ctx.exec);
      worst = std::max(worst, std::abs(sym.values[0] - sym.values[1]));
      // dummy: lift a (d-1)-player game; player 0 never changes the cost
      std::vector<double> dummy_costs(std::size_t{1} << d);
      for (std::size_t m = 0; m < dummy_costs.size(); ++m) dummy_costs[m] = t.cost(m >> 1);
      auto dummy = shapley_exact(CostTable(d, std::move(dummy_costs)), ctx.exec);
      worst = std::max(worst, std::abs(dummy.values[0]));
      // additivity
      CostTable t2 = random_table(d, s, 77777);
      auto sh2 = shapley_exact(t2, ctx.exec);
      auto sum = shapley_exact(t + t2, ctx.exec);
      for (int i = 0; i < d; ++i)
        worst = std::max(worst, std::abs(sum.values[i] - sh.values[i] - sh2.values[i]));
      // additive cost function: value equals the per-player weight
      std::vector<double> weights(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i) weights[static_cast<std::size_t>(i)] = s.uniform_at(500 + i);
      std::vector<double> add_costs(std::size_t{1} << d, 0.0);
      for (std::size_t m = 0; m < add_costs.size(); ++m)
        for (int i = 0; i < d; ++i)
          if (m & (1ull << i)) add_costs[m] += weights[static_cast<std::size_t>(i)];
      auto add = shapley_exact(CostTable(d, std::move(add_costs)), ctx.exec);
      for (int i = 0; i < d; ++i)
        worst = std::max(worst, std::abs(add.values[i] - weights[static_cast<std::size_t>(i)]));
    }
    return std::pair{worst, std::string("efficiency, symmetry, dummy, additivity")};
  });
}

CheckResult shapley_brute_force(const Context& ctx) {
  return timed("shapley-brute-force", 1e-12, [&] {
    double worst = 0.0;
    for (int d = 1; d <= 5; ++d) {
      RandomStream s(ctx.seed, 1600 + static_cast<std::uint64_t>(d));
      CostTable t = random_table(d, s);
      auto fast = shapley_exact(t, ctx.exec);
      auto slow = shapley_all_permutations(t);
      for (int i = 0; i < d; ++i) worst = std::max(worst, std::abs(fast.values[i] - slow[i]));
    }
    return std::pair{worst, std::string("weighted subset sum vs all-permutation average")};
  });
}

CheckResult shapley_permutation_unbiased(const Context& ctx) {
  return timed("shapley-permutation-sampler", 1.0, [&] {
    RandomStream s(ctx.seed, 1700);
    CostTable t = random_table(6, s);
    auto exact = shapley_exact(t, ctx.exec);
    auto sampled = shapley_permutation(t, 40'000, s.substream(1701), ctx.exec);
    double worst = 0.0;
    for (int i = 0; i < 6; ++i) {
      double se = std::max(sampled.std_errors[static_cast<std::size_t>(i)], 1e-12);
      worst = std::max(worst, std::abs(sampled.values[static_cast<std::size_t>(i)] -
                                       exact.values[static_cast<std::size_t>(i)]) /
                                  (3.0 * se));
    }
    // efficiency holds for the sampler too
    double total = std::accumulate(sampled.values.begin(), sampled.values.end(), 0.0);
    if (std::abs(total - t.grand_cost()) > 1e-12) worst = std::max(worst, 2.0);
    // single player: the value is the grand cost for any m
    CostTable t1(1, {0.0, 1.75});
    auto one = shapley_permutation(t1, 3, s.substream(1702), ctx.exec);
    if (std::abs(one.values[0] - 1.75) > 1e-15) worst = std::max(worst, 2.0);
    return std::pair{worst, std::string("within 3 se of exact on a random 6-player game")};
  });
}

// ===== estimators =====

CheckResult estimator_translation_exactness(const Context& ctx) {
  return timed("estimator-translation-exactness", 0.0, [&] {
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      RandomStream s(ctx.seed, 1800 + static_cast<std::uint64_t>(rep));
      const std::size_t n = 500 + s.uniform_int_at(0, 1500);
      // lattice data keeps every shift and power-of-two scale exact in
      // floating point, so invariance can be asserted bitwise
      std::vector<double> y(n), qc(n);
      for (std::size_t i = 0; i < n; ++i) {
        y[i] = static_cast<double>(static_cast<long long>(s.uniform_int_at(2 * i, 1 << 21)) -
                                   (1 << 20)) *
               0x1.0p-12;
        qc[i] = y[i] + static_cast<double>(static_cast<long long>(
                           s.uniform_int_at(2 * i + 1, 1 << 12)) -
                       (1 << 11)) *
                           0x1.0p-12;
      }
      std::vector<double> sorted = y;
      std::sort(sorted.begin(), sorted.end());
      QuantileLevel a(0.3);
      double qu = empirical_quantile(sorted, a);
      double base = qosa_closed_index_from_values(y, qc, qu, a);
      double base_cost = qosa_cost_ratio_from_values(y, qc, qu, a);

      const double c = 3.25;
      const double k = 4.0;
      std::vector<double> ys(n), qs(n), yk(n), qk(n);
      for (std::size_t i = 0; i < n; ++i) {
        ys[i] = y[i] + c;
        qs[i] = qc[i] + c;
        yk[i] = y[i] * k;
        qk[i] = qc[i] * k;
      }
      worst = std::max(worst,
                       std::abs(qosa_closed_index_from_values(ys, qs, qu + c, a) - base));
      worst = std::max(worst,
                       std::abs(qosa_closed_index_from_values(yk, qk, qu * k, a) - base));
      worst = std::max(worst,
                       std::abs(qosa_cost_ratio_from_values(yk, qk, qu * k, a) - base_cost));
    }
    return std::pair{worst, std::string("bit-identical under shift and positive scale")};
  });
}

CheckResult estimator_negative_scale_flip(const Context& ctx) {
  return timed("estimator-negative-scale", 0.0, [&] {
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      RandomStream s(ctx.seed, 1900 + static_cast<std::uint64_t>(rep));
      const std::size_t n = 1001;  // alpha * n stays non-integer
      std::vector<double> y(n), qc(n);
      for (std::size_t i = 0; i < n; ++i) {
        y[i] = s.normal_at(2 * i) * 2.0;
        qc[i] = y[i] + s.normal_at(2 * i + 1);
      }
      QuantileLevel a(0.7);
      std::vector<double> sorted = y;
      std::sort(sorted.begin(), sorted.end());
      double qu = empirical_quantile(sorted, a);
      double base = qosa_closed_index_from_values(y, qc, qu, a);

      std::vector<double> yn(n), qn(n), sorted_n;
      for (std::size_t i = 0; i < n; ++i) {
        yn[i] = -y[i];
        qn[i] = -qc[i];
      }
      sorted_n = yn;
      std::sort(sorted_n.begin(), sorted_n.end());
      QuantileLevel flipped(1.0 - a.value());
      double qun = empirical_quantile(sorted_n, flipped);
      worst = std::max(worst, std::abs(qun - (-qu)));
      worst = std::max(worst,
                       std::abs(qosa_closed_index_from_values(yn, qn, qun, flipped) - base));
    }
    return std::pair{worst, std::string("negating the output swaps alpha and 1-alpha exactly")};
  });
}

CheckResult estimator_serial_parallel_identical(const Context& ctx) {
  return timed("serial-parallel-identical", 0.0, [&] {
    double worst = 0.0;
    omp_set_num_threads(4);
    for (const char* id : {"gaussian2d:rho=0.5", "laplace"}) {
      auto m = ModelSpec::builtin(id);
      for (CondMethod method : {CondMethod::exact, CondMethod::knn}) {
        EstimatorConfig serial;
        serial.n_pooled = 20'000;
        serial.stream = RandomStream(ctx.seed, 2000);
        serial.exec = Exec::serial;
        serial.method = method;
        EstimatorConfig parallel = serial;
        parallel.exec = Exec::parallel;
        auto a = estimate_all_qosa(m, QuantileLevel(0.7), serial);
        auto b = estimate_all_qosa(m, QuantileLevel(0.7), parallel);
        for (int i = 0; i < 2; ++i) {
          worst = std::max(worst, std::abs(a.first_order[i].value - b.first_order[i].value));
          worst = std::max(worst, std::abs(a.total[i].value - b.total[i].value));
          worst = std::max(worst, std::abs(a.qose.values[i] - b.qose.values[i]));
          worst = std::max(worst,
                           std::abs(a.first_order[i].std_error - b.first_order[i].std_error));
        }
      }
    }
    return std::pair{worst, std::string("identical output for any thread count")};
  });
}

CheckResult estimator_band(const Context& ctx) {
  return timed("estimator-band", 0.0, [&] {
    double worst = 0.0;
    for (const char* id : {"gaussian2d", "gaussian2d:rho=0.75", "lognormal2d",
                           "lognormal2d:rho=0.75", "expo-product", "laplace"}) {
      auto m = ModelSpec::builtin(id);
      EstimatorConfig cfg;
      cfg.n_pooled = 100'000;
      cfg.stream = RandomStream(ctx.seed, 2100);
      for (double a : {0.1, 0.5, 0.9}) {
        auto all = estimate_all_qosa(m, QuantileLevel(a), cfg);
        for (int i = 0; i < 2; ++i) {
          for (double v : {all.first_order[i].value, all.total[i].value, all.qose.values[i]}) {
            worst = std::max(worst, v - 1.05);
            worst = std::max(worst, -0.05 - v);
          }
        }
      }
    }
    return std::pair{std::max(worst, 0.0), std::string("estimates stay in [-0.05, 1.05]")};
  });
}

CheckResult mc_vs_analytic_convergence(const Context& ctx) {
  return timed("mc-vs-analytic-convergence", 1.0, [&] {
    double worst_exact = 0.0, worst_knn = 0.0;
    for (const char* base : {"gaussian2d", "lognormal2d"})
      for (double rho : {0.0, 0.75}) {
        auto m = ModelSpec::builtin(base).with_correlation(rho);
        for (double a : {0.1, 0.3, 0.5, 0.7, 0.9}) {
          auto an = analytic_indices(m, QuantileLevel(a));
          EstimatorConfig e;
          e.n_pooled = 1'000'000;
          e.stream = RandomStream(ctx.seed, 2200);
          e.exec = ctx.exec;
          auto ex = estimate_all_qosa(m, QuantileLevel(a), e);
          EstimatorConfig kn = e;
          kn.method = CondMethod::knn;
          kn.k_neighbors = 100;  // small windows keep the heavy-tail bias down
          auto kx = estimate_all_qosa(m, QuantileLevel(a), kn);
          for (int i = 0; i < 2; ++i) {
            worst_exact = std::max({worst_exact,
                                    std::abs(ex.first_order[i].value - an.first_order[i]),
                                    std::abs(ex.total[i].value - an.total[i]),
                                    std::abs(ex.qose.values[i] - an.qose[i])});
            worst_knn = std::max({worst_knn,
                                  std::abs(kx.first_order[i].value - an.first_order[i]),
                                  std::abs(kx.total[i].value - an.total[i]),
                                  std::abs(kx.qose.values[i] - an.qose[i])});
          }
        }
      }
    double measured = std::max(worst_exact / 0.02, worst_knn / 0.05);
    return std::pair{measured, "worst exact " + fmt(worst_exact) + " (tol 0.02), knn " +
                                   fmt(worst_knn) + " (tol 0.05)"};
  });
}

CheckResult mc_consistency_in_n(const Context& ctx) {
  return timed("mc-consistency-in-n", 1.0, [&] {
    // worst deviation across both models, three levels and all six indices,
    // once per sample size; the aggregate is stable where a single level's
    // error would be noise-dominated
    double err_small = 0.0, err_large = 0.0;
    for (const char* base : {"gaussian2d", "lognormal2d"}) {
      auto m = ModelSpec::builtin(base);
      for (double a : {0.1, 0.5, 0.9}) {
        auto an = analytic_indices(m, QuantileLevel(a));
        for (std::size_t n : {std::size_t{10'000}, std::size_t{1'000'000}}) {
          EstimatorConfig e;
          e.n_pooled = n;
          e.stream = RandomStream(ctx.seed, 2300);
          e.exec = ctx.exec;
          auto ex = estimate_all_qosa(m, QuantileLevel(a), e);
          double err = 0.0;
          for (int i = 0; i < 2; ++i)
            err = std::max({err, std::abs(ex.first_order[i].value - an.first_order[i]),
                            std::abs(ex.total[i].value - an.total[i]),
                            std::abs(ex.qose.values[i] - an.qose[i])});
          auto& slot = (n == 10'000 ? err_small : err_large);
          slot = std::max(slot, err);
        }
      }
    }
    return std::pair{err_large / std::max(err_small, 1e-12),
                     "worst error " + fmt(err_large) + " at n=1e6 vs " + fmt(err_small) +
                         " at n=1e4"};
  });
}

CheckResult kucherenko_mc(const Context& ctx) {
  return timed("kucherenko-mc", 1.0, [&] {
    auto m = ModelSpec::builtin("laplace");
    EstimatorConfig cfg;
    cfg.n_pooled = 100'000;
    cfg.stream = RandomStream(ctx.seed, 2400);
    cfg.exec = ctx.exec;
    double worst = 0.0;
    std::map<double, std::array<IndexEstimate, 2>> abs_by_alpha;
    for (double a : {0.1, 0.3, 0.4, 0.5, 0.7, 0.9}) {
      auto an = laplace_kucherenko(QuantileLevel(a));
      for (int i = 0; i < 2; ++i) {
        auto e1 = estimate_kucherenko(m, i, QuantileLevel(a), 1, cfg);
        auto e2 = estimate_kucherenko(m, i, QuantileLevel(a), 2, cfg);
        worst = std::max(worst, std::abs(e1.value - an.qbar_abs[i]) / 0.02);
        worst = std::max(worst, std::abs(e2.value - an.qbar_sq[i]) / 0.02);
        if (i == 0) abs_by_alpha[a] = {e1, e1};
        else abs_by_alpha[a][1] = e1;
      }
      auto norm = estimate_kucherenko_normalized(m, QuantileLevel(a), 1, cfg);
      worst = std::max(worst, std::abs(norm[0].value - an.q_abs[0]) / 0.02);
    }
    // flat region: estimates at 0.3 and 0.4 agree within their joint noise
    const auto& e03 = abs_by_alpha[0.3][0];
    const auto& e04 = abs_by_alpha[0.4][0];
    double se = std::sqrt(e03.std_error * e03.std_error + e04.std_error * e04.std_error);
    worst = std::max(worst, std::abs(e03.value - e04.value) / (3.0 * std::max(se, 1e-12)));
    return std::pair{worst, std::string("within 0.02 of closed forms at n=1e5")};
  });
}

CheckResult props_additive_mc(const Context& ctx) {
  return timed("props-additive-mc", 1.0, [&] {
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
      RandomStream s(ctx.seed, 2500 + static_cast<std::uint64_t>(rep));
      const int d = 2 + static_cast<int>(s.uniform_int_at(0, 4));
      Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(d, d);
      for (int i = 0; i < d; ++i) sigma(i, i) = 0.2 + 3.0 * s.uniform_at(50 + i);
      Eigen::VectorXd beta = random_vector(d, s);
      auto m = ModelSpec::linear_gaussian(0.0, beta, Eigen::VectorXd::Zero(d), sigma);
      EstimatorConfig cfg;
      cfg.n_pooled = 20'000;
      cfg.stream = RandomStream(ctx.seed, 2600 + static_cast<std::uint64_t>(rep));
      cfg.exec = ctx.exec;
      QuantileLevel a(0.1 + 0.8 * s.uniform_at(99));
      auto all = estimate_all_qosa(m, a, cfg);
      double sum = 0.0, var = 0.0;
      for (int i = 0; i < d; ++i) {
        sum += all.first_order[i].value;
        var += all.first_order[i].std_error * all.first_order[i].std_error;
        double pair_se = std::sqrt(all.first_order[i].std_error * all.first_order[i].std_error +
                                   all.total[i].std_error * all.total[i].std_error);
        worst = std::max(worst, (all.first_order[i].value - all.total[i].value) /
                                    (3.0 * std::max(pair_se, 1e-12)));
      }
      worst = std::max(worst, (sum - 1.0) / (3.0 * std::max(std::sqrt(var), 1e-12)));
    }
    return std::pair{std::max(worst, 0.0),
                     std::string("sum S <= 1 and S <= ST within 3 se, 50 random models")};
  });
}

CheckResult coalition_monotonicity(const Context& ctx) {
  return timed("coalition-monotonicity", 1.0, [&] {
    double worst = 0.0;
    std::vector<std::pair<std::string, CondMethod>> cases = {
        {"gaussian2d", CondMethod::exact},          {"gaussian2d:rho=0.75", CondMethod::exact},
        {"lognormal2d", CondMethod::exact},         {"lognormal2d:rho=0.75", CondMethod::exact},
        {"expo-product", CondMethod::exact},        {"laplace", CondMethod::exact},
        {"gaussian2d:rho=0.75", CondMethod::knn},   {"lognormal2d:rho=0.75", CondMethod::knn}};
    for (const auto& [id, method] : cases) {
      auto m = ModelSpec::builtin(id);
      for (double a : {0.1, 0.5, 0.9}) {
        EstimatorConfig cfg;
        cfg.n_pooled = 100'000;
        cfg.stream = RandomStream(ctx.seed, 2700);
        cfg.exec = ctx.exec;
        cfg.method = method;
        if (method == CondMethod::knn) cfg.k_neighbors = 100;
        CoalitionCostEstimator est(m, QuantileLevel(a), cfg);
        auto table = est.table();
        auto batches = est.batch_tables();
        const int d = m.dim();
        for (std::uint64_t mask = 0; mask < (1ull << d); ++mask) {
          Coalition coalition(d, mask);
          for (int i = 0; i < d; ++i) {
            if (coalition.contains(i)) continue;
            Coalition bigger = coalition.with(i);
            double inc = table.cost(bigger) - table.cost(coalition);
            double mean = 0.0, ss = 0.0;
            std::vector<double> incs;
            for (const auto& b : batches) incs.push_back(b.cost(bigger) - b.cost(coalition));
            for (double v : incs) mean += v;
            mean /= static_cast<double>(incs.size());
            for (double v : incs) ss += (v - mean) * (v - mean);
            double se = std::sqrt(ss / static_cast<double>(incs.size() - 1) /
                                  static_cast<double>(incs.size()));
            worst = std::max(worst, -inc / (3.0 * std::max(se, 1e-12)));
          }
        }
      }
    }
    return std::pair{std::max(worst, 0.0),
                     std::string("cost increments above -3 se for every model and pair")};
  });
}

// ===== cli / reproduction =====

CheckResult csv_roundtrip(const Context&) {
  return timed("csv-roundtrip", 0.0, [] {
    std::vector<ResultRow> rows = {
        {"gaussian2d", 0.5, 0.75, "1", "qosa_first", 1.0 / 3.0, 0.001234567890123456, 1000000,
         42, "mc-exact"},
        {"m", 0.1, std::nullopt, "1+2", "qosa_group", -1.2345678901234567e-17, std::nullopt, 0,
         0, "analytic"},
        {"laplace", 0.9999, -1.0, "2", "kucherenko_abs", 6.02e23, 1e-300, 17, 123456789,
         "mc-knn"}};
    std::stringstream ss;
    write_csv(ss, rows, {{"seed", "42"}, {"note", "roundtrip"}});
    auto back = read_csv(ss);
    double measured = (back == rows) ? 0.0 : 1.0;
    return std::pair{measured, std::string("rows survive a write/read cycle exactly")};
  });
}

CheckResult sweep_byte_determinism(const Context& ctx) {
  return timed("sweep-byte-determinism", 0.0, [&] {
    auto render = [&](SweepConfig::Engine engine) {
      SweepConfig cfg{.model = ModelSpec::builtin("lognormal2d:rho=0.75"),
                      .alphas = {},
                      .rho_grid = std::nullopt,
                      .indices = {IndexKind::qosa_first, IndexKind::qosa_total, IndexKind::qose},
                      .engine = engine,
                      .est = {},
                      .out_path = "",
                      .format = SweepConfig::Format::csv,
                      .gnuplot_columns = false};
      for (double a = 0.05; a <= 0.951; a += 0.05) cfg.alphas.push_back(a);
      cfg.est.n_pooled = 5'000;
      cfg.est.stream = RandomStream(ctx.seed, 2800);
      cfg.est.exec = ctx.exec;
      auto rows = run_alpha_sweep(cfg);
      std::stringstream ss;
      write_csv(ss, rows, {{"engine", engine == SweepConfig::Engine::analytic ? "analytic" : "mc"}});
      return ss.str();
    };
    double measured = 0.0;
    if (render(SweepConfig::Engine::analytic) != render(SweepConfig::Engine::analytic))
      measured = 1.0;
    if (render(SweepConfig::Engine::monte_carlo) != render(SweepConfig::Engine::monte_carlo))
      measured = 1.0;
    return std::pair{measured, std::string("identical bytes across repeated runs")};
  });
}

CheckResult figure_reproduction(const Context& ctx) {
  return timed("figure-reproduction", 0.0, [&] {
    int violations = 0;
    std::string notes;
    auto fail = [&](const std::string& what) {
      ++violations;
      if (!notes.empty()) notes += "; ";
      notes += what;
    };
    auto maybe_write = [&](const std::string& name, const std::vector<ResultRow>& rows) {
      if (ctx.artifact_dir.empty()) return;
      std::filesystem::create_directories(ctx.artifact_dir);
      std::ofstream out(ctx.artifact_dir + "/" + name);
      write_csv(out, rows, {{"seed", std::to_string(ctx.seed)}});
    };
    auto increasing = [](const std::vector<std::pair<double, double>>& c) {
      for (std::size_t i = 1; i < c.size(); ++i)
        if (c[i].second < c[i - 1].second) return false;
      return true;
    };

    // product of exponentials: first-order and total cross near the top
    {
      SweepConfig cfg{.model = ModelSpec::builtin("expo-product"),
                      .alphas = {},
                      .rho_grid = std::nullopt,
                      .indices = {IndexKind::qosa_first, IndexKind::qosa_total},
                      .engine = SweepConfig::Engine::analytic,
                      .est = {},
                      .out_path = "",
                      .format = SweepConfig::Format::csv,
                      .gnuplot_columns = false};
      for (double a = 0.02; a <= 0.9951; a += 0.005) cfg.alphas.push_back(a);
      auto rows = run_alpha_sweep(cfg);
      maybe_write("product_alpha.csv", rows);
      auto s1 = curve(rows, "qosa_first", "1", false);
      auto st1 = curve(rows, "qosa_total", "1", false);
      if (!increasing(s1)) fail("product first-order not increasing");
      if (s1.back().second < 0.5 || st1.back().second > 0.5)
        fail("product curves do not cross");
      int crossings = 0;
      for (std::size_t i = 1; i < s1.size(); ++i)
        if ((st1[i - 1].second > s1[i - 1].second) && (st1[i].second <= s1[i].second))
          ++crossings;
      if (crossings != 1) fail("product crossing not unique");
    }

    // linear Gaussian: constant in alpha; rho sweep shows vanishing totals,
    // equal Shapley effects at |rho| = 1 and the sandwich ordering throughout
    {
      SweepConfig cfg{.model = ModelSpec::builtin("gaussian2d"),
                      .alphas = {},
                      .rho_grid = std::nullopt,
                      .indices = {IndexKind::qosa_first, IndexKind::qosa_total, IndexKind::qose},
                      .engine = SweepConfig::Engine::analytic,
                      .est = {},
                      .out_path = "",
                      .format = SweepConfig::Format::csv,
                      .gnuplot_columns = false};
      for (double a = 0.02; a <= 0.981; a += 0.02) cfg.alphas.push_back(a);
      auto rows = run_alpha_sweep(cfg);
      maybe_write("gaussian_alpha.csv", rows);
      for (const char* idx : {"qosa_first", "qosa_total", "qose"})
        for (const char* input : {"1", "2"}) {
          auto c = curve(rows, idx, input, false);
          for (const auto& [x, v] : c)
            if (std::abs(v - c.front().second) > 1e-12) {
              fail("gaussian curves not flat in alpha");
              break;
            }
        }
      auto s2 = curve(rows, "qosa_first", "2", false);
      auto s1 = curve(rows, "qosa_first", "1", false);
      if (!(s2.front().second > s1.front().second)) fail("gaussian: wide input not dominant");

      SweepConfig rcfg = cfg;
      rcfg.alphas = {0.5};
      rcfg.rho_grid = GridSpec{-1.0, 1.0, 0.05};
      auto rrows = run_rho_sweep(rcfg);
      maybe_write("gaussian_rho.csv", rrows);
      auto st1 = curve(rrows, "qosa_total", "1", true);
      auto sh1 = curve(rrows, "qose", "1", true);
      if (std::abs(st1.front().second) > 1e-12 || std::abs(st1.back().second) > 1e-12)
        fail("gaussian totals do not vanish at |rho|=1");
      if (std::abs(sh1.front().second - 0.5) > 1e-12 ||
          std::abs(sh1.back().second - 0.5) > 1e-12)
        fail("gaussian Shapley effects not 1/2 at |rho|=1");
      bool some_reversal = false;
      for (const auto& r : rrows)
        if (r.index == "qosa_total" && r.input == "1") {
          auto sr = curve(rrows, "qosa_first", "1", true);
          for (std::size_t i = 0; i < st1.size(); ++i)
            if (st1[i].second < sr[i].second - 1e-12) some_reversal = true;
          break;
        }
      if (!some_reversal) fail("gaussian: no correlation range with total below first-order");
      for (const char* input : {"1", "2"}) {
        auto sc = curve(rrows, "qosa_first", input, true);
        auto tc = curve(rrows, "qosa_total", input, true);
        auto hc = curve(rrows, "qose", input, true);
        for (std::size_t i = 0; i < sc.size(); ++i) {
          double lo = std::min(sc[i].second, tc[i].second);
          double hi = std::max(sc[i].second, tc[i].second);
          if (hc[i].second < lo - 1e-12 || hc[i].second > hi + 1e-12)
            fail("gaussian sandwich violated");
        }
      }
    }

    // lognormal: rising first-order for the lean input, faster under
    // correlation; totals fall with alpha; sandwich everywhere
    {
      std::vector<ResultRow> all_rows;
      std::vector<std::pair<double, double>> s1_by_rho[2];
      int slot = 0;
      for (double rho : {0.0, 0.75}) {
        SweepConfig cfg{.model = ModelSpec::builtin("lognormal2d").with_correlation(rho),
                        .alphas = {},
                        .rho_grid = std::nullopt,
                        .indices = {IndexKind::qosa_first, IndexKind::qosa_total, IndexKind::qose},
                        .engine = SweepConfig::Engine::analytic,
                        .est = {},
                        .out_path = "",
                        .format = SweepConfig::Format::csv,
                        .gnuplot_columns = false};
        cfg.model.set_id(rho == 0.0 ? "lognormal2d" : "lognormal2d:rho=0.75");
        for (double a = 0.02; a <= 0.981; a += 0.02) cfg.alphas.push_back(a);
        // the total index dips below the first-order one only near the top
        for (double a : {0.985, 0.99, 0.995}) cfg.alphas.push_back(a);
        auto rows = run_alpha_sweep(cfg);
        all_rows.insert(all_rows.end(), rows.begin(), rows.end());
        s1_by_rho[slot++] = curve(rows, "qosa_first", "1", false);
        if (!increasing(curve(rows, "qosa_first", "1", false)))
          fail("lognormal first-order not increasing in alpha");
        auto st2 = curve(rows, "qosa_total", "2", false);
        if (!(st2.back().second < st2.front().second))
          fail("lognormal total not decreasing toward high alpha");
        bool reversal = false;
        auto s2 = curve(rows, "qosa_first", "2", false);
        for (std::size_t i = 0; i < st2.size(); ++i)
          if (st2[i].second < s2[i].second) reversal = true;
        if (!reversal) fail("lognormal: no level with total below first-order");
        for (const char* input : {"1", "2"}) {
          auto sc = curve(rows, "qosa_first", input, false);
          auto tc = curve(rows, "qosa_total", input, false);
          auto hc = curve(rows, "qose", input, false);
          for (std::size_t i = 0; i < sc.size(); ++i) {
            double lo = std::min(sc[i].second, tc[i].second),
                   hi = std::max(sc[i].second, tc[i].second);
            if (hc[i].second < lo - 1e-12 || hc[i].second > hi + 1e-12)
              fail("lognormal sandwich violated");
          }
        }
      }
      maybe_write("lognormal_alpha.csv", all_rows);
      // correlation with the dominant input strengthens the lean one
      double hi_alpha_gain = s1_by_rho[1].back().second - s1_by_rho[0].back().second;
      if (!(hi_alpha_gain > 0.0)) fail("lognormal: correlation does not reinforce input 1");

      SweepConfig rcfg{.model = ModelSpec::builtin("lognormal2d"),
                       .alphas = {0.1, 0.5, 0.9},
                       .rho_grid = GridSpec{-1.0, 1.0, 0.05},
                       .indices = {IndexKind::qosa_first, IndexKind::qosa_total, IndexKind::qose},
                       .engine = SweepConfig::Engine::analytic,
                       .est = {},
                       .out_path = "",
                       .format = SweepConfig::Format::csv,
                       .gnuplot_columns = false};
      auto rrows = run_rho_sweep(rcfg);
      maybe_write("lognormal_rho.csv", rrows);
      for (double a : {0.1, 0.5, 0.9}) {
        std::vector<ResultRow> slice;
        for (const auto& r : rrows)
          if (std::abs(r.alpha - a) < 1e-12) slice.push_back(r);
        auto st1 = curve(slice, "qosa_total", "1", true);
        auto sh1 = curve(slice, "qose", "1", true);
        if (std::abs(st1.front().second) > 1e-9 || std::abs(st1.back().second) > 1e-9)
          fail("lognormal totals do not vanish at |rho|=1");
        if (std::abs(sh1.front().second - 0.5) > 1e-9 ||
            std::abs(sh1.back().second - 0.5) > 1e-9)
          fail("lognormal Shapley effects not 1/2 at |rho|=1");
      }
    }

    // quantile-distance indices on the exponential difference: flat halves
    // plus nonmonotone squared version, with Monte Carlo index curves on top
    {
      SweepConfig cfg{.model = ModelSpec::builtin("laplace"),
                      .alphas = {},
                      .rho_grid = std::nullopt,
                      .indices = {IndexKind::kucherenko},
                      .engine = SweepConfig::Engine::analytic,
                      .est = {},
                      .out_path = "",
                      .format = SweepConfig::Format::csv,
                      .gnuplot_columns = false};
      for (double a = 0.02; a <= 0.981; a += 0.02) cfg.alphas.push_back(a);
      auto rows = run_alpha_sweep(cfg);
      auto q11 = curve(rows, "kucherenko_abs", "1", false);
      double low_ref = q11.front().second;
      for (const auto& [x, v] : q11)
        if (x < 0.499 && std::abs(v - low_ref) > 1e-12) fail("q1 not flat below 1/2");
      auto q12 = curve(rows, "kucherenko_sq", "1", false);
      int changes = 0;
      for (std::size_t i = 2; i < q12.size(); ++i) {
        double d1 = q12[i - 1].second - q12[i - 2].second;
        double d2 = q12[i].second - q12[i - 1].second;
        if (d1 != 0.0 && d2 != 0.0 && (d1 > 0) != (d2 > 0)) ++changes;
      }
      if (changes < 1) fail("squared quantile-distance index is monotone");

      // Monte Carlo first-order indices flip dominance around 1/2
      SweepConfig mcfg = cfg;
      mcfg.engine = SweepConfig::Engine::monte_carlo;
      mcfg.indices = {IndexKind::qosa_first, IndexKind::qosa_total};
      mcfg.alphas = {0.25, 0.75};
      mcfg.est.n_pooled = 100'000;
      mcfg.est.stream = RandomStream(ctx.seed, 2900);
      mcfg.est.exec = ctx.exec;
      auto mrows = run_alpha_sweep(mcfg);
      rows.insert(rows.end(), mrows.begin(), mrows.end());
      maybe_write("laplace_alpha.csv", rows);
      auto pick = [&](double a, const char* input) {
        for (const auto& r : mrows)
          if (r.index == "qosa_first" && r.input == input && std::abs(r.alpha - a) < 1e-12)
            return r.value;
        return -1.0;
      };
      if (!(pick(0.75, "1") > pick(0.75, "2"))) fail("laplace: input 1 not dominant above 1/2");
      if (!(pick(0.25, "2") > pick(0.25, "1"))) fail("laplace: input 2 not dominant below 1/2");
    }

    return std::pair{static_cast<double>(violations), notes};
  });
}

// ===== suites =====

std::vector<CheckResult> run_validation(Suite suite, const Context& ctx) {
  std::vector<CheckResult> out;
  auto add = [&](CheckResult r) { out.push_back(std::move(r)); };

  add(stream_determinism(ctx));
  add(normal_quantile_roundtrip(ctx));
  add(cholesky_roundtrip(ctx));
  add(gaussian_conditional_composition(ctx));
  add(gaussian_sample_moments(ctx));
  add(pinball_argmin(ctx));
  add(lemma_truncated_expectation(ctx));
  add(quantile_translation_scaling(ctx));
  add(ineq_quantile_nonnegative(ctx));
  add(lognormal_monotone_map(ctx));
  add(analytic_self_consistency(ctx));
  add(alpha_invariance_gaussian(ctx));
  add(location_invariance(ctx));
  add(qose_efficiency_random(ctx));
  add(qose_two_routes(ctx));
  add(sandwich_orderings_2d(ctx));
  add(additive_independent_orderings(ctx));
  add(product_cdf_vs_bessel(ctx));
  add(product_scale_invariance(ctx));
  add(product_crossing(ctx));
  add(kucherenko_flat_below_half(ctx));
  add(kucherenko_sq_nonmonotone(ctx));
  add(laplace_sign_probability(ctx));
  add(shapley_axioms(ctx));
  add(shapley_brute_force(ctx));
  add(shapley_permutation_unbiased(ctx));
  add(estimator_translation_exactness(ctx));
  add(estimator_negative_scale_flip(ctx));
  add(estimator_serial_parallel_identical(ctx));
  add(estimator_band(ctx));
  add(csv_roundtrip(ctx));
  add(sweep_byte_determinism(ctx));

  if (suite == Suite::full) {
    add(gaussian_conditional_regression(ctx));
    add(mc_vs_analytic_convergence(ctx));
    add(mc_consistency_in_n(ctx));
    add(kucherenko_mc(ctx));
    add(props_additive_mc(ctx));
    add(coalition_monotonicity(ctx));
    add(figure_reproduction(ctx));
  }
  return out;
}

}  // namespace qosa::checks
