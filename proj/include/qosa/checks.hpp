#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qosa/kernels.hpp"

namespace qosa::checks {

struct CheckResult {
  std::string name;
  double measured;   // the worst observed deviation (or the measured quantity)
  double tolerance;  // pass iff measured <= tolerance
  bool pass;
  std::string detail;
  double seconds;
};

struct Context {
  std::uint64_t seed = 0;
  Exec exec = Exec::parallel;
  std::string artifact_dir;  // where figure-reproduction sweeps are written; empty = skip files
};

// probability core
CheckResult normal_quantile_roundtrip(const Context&);
CheckResult cholesky_roundtrip(const Context&);
CheckResult gaussian_conditional_composition(const Context&);
CheckResult gaussian_conditional_regression(const Context&);  // Monte Carlo, slow
CheckResult gaussian_sample_moments(const Context&);
CheckResult stream_determinism(const Context&);

// contrast
CheckResult pinball_argmin(const Context&);
CheckResult lemma_truncated_expectation(const Context&);
CheckResult quantile_translation_scaling(const Context&);
CheckResult ineq_quantile_nonnegative(const Context&);

// analytic closed forms
CheckResult analytic_self_consistency(const Context&);
CheckResult alpha_invariance_gaussian(const Context&);
CheckResult location_invariance(const Context&);
CheckResult qose_efficiency_random(const Context&);
CheckResult qose_two_routes(const Context&);
CheckResult sandwich_orderings_2d(const Context&);
CheckResult additive_independent_orderings(const Context&);
CheckResult product_cdf_vs_bessel(const Context&);
CheckResult product_crossing(const Context&);
CheckResult product_scale_invariance(const Context&);
CheckResult kucherenko_flat_below_half(const Context&);
CheckResult kucherenko_sq_nonmonotone(const Context&);
CheckResult laplace_sign_probability(const Context&);
CheckResult lognormal_monotone_map(const Context&);

// shapley engine
CheckResult shapley_axioms(const Context&);
CheckResult shapley_brute_force(const Context&);
CheckResult shapley_permutation_unbiased(const Context&);

// estimators
CheckResult estimator_translation_exactness(const Context&);
CheckResult estimator_negative_scale_flip(const Context&);
CheckResult estimator_serial_parallel_identical(const Context&);
CheckResult estimator_band(const Context&);
CheckResult mc_vs_analytic_convergence(const Context&);  // slow
CheckResult mc_consistency_in_n(const Context&);         // slow
CheckResult kucherenko_mc(const Context&);
CheckResult props_additive_mc(const Context&);
CheckResult coalition_monotonicity(const Context&);  // slow

// cli / reproduction
CheckResult csv_roundtrip(const Context&);
CheckResult sweep_byte_determinism(const Context&);
CheckResult figure_reproduction(const Context&);

enum class Suite { fast, full };

/// Every check of the requested suite, in a fixed order.
std::vector<CheckResult> run_validation(Suite suite, const Context& ctx);

}  // namespace qosa::checks
