// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Each criterion aggregates the relevant validation checks and enforces the
// stated runtime budget.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "qosa/checks.hpp"

using qosa::checks::CheckResult;
using qosa::checks::Context;

namespace {

struct Criterion {
  std::string name;
  std::vector<CheckResult> parts;
  double time_limit_s;  // <= 0 means no limit
};

bool report(const Criterion& c) {
  double total_time = 0.0;
  bool pass = true;
  std::string why;
  for (const auto& p : c.parts) {
    total_time += p.seconds;
    if (!p.pass) {
      pass = false;
      why += (why.empty() ? "" : "; ") + p.name + ": measured " + std::to_string(p.measured) +
             " > tol " + std::to_string(p.tolerance) +
             (p.detail.empty() ? "" : " [" + p.detail + "]");
    }
  }
  if (c.time_limit_s > 0.0 && total_time > c.time_limit_s) {
    pass = false;
    why += (why.empty() ? "" : "; ") + std::string("runtime ") + std::to_string(total_time) +
           "s over limit " + std::to_string(c.time_limit_s) + "s";
  }
  std::printf("[%s] %-38s (%zu checks, %.1fs%s)%s%s\n", pass ? "PASS" : "FAIL", c.name.c_str(),
              c.parts.size(), total_time,
              c.time_limit_s > 0 ? (" / " + std::to_string(static_cast<int>(c.time_limit_s)) + "s limit").c_str() : "",
              why.empty() ? "" : " -- ", why.c_str());
  std::fflush(stdout);
  return pass;
}

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  ctx.seed = 0;
  ctx.artifact_dir = "acceptance_artifacts";
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg.rfind("--seed=", 0) == 0) ctx.seed = std::stoull(arg.substr(7));
    if (arg.rfind("--artifacts=", 0) == 0) ctx.artifact_dir = arg.substr(12);
  }

  int failures = 0;
  auto run = [&](Criterion c) {
    if (!report(c)) ++failures;
  };

  run({"1 analytic-self-consistency",
       {qosa::checks::analytic_self_consistency(ctx)},
       0.0});

  run({"2 mc-vs-analytic-convergence",
       {qosa::checks::mc_vs_analytic_convergence(ctx)},
       300.0});

  run({"3 product-index-crossing",
       {qosa::checks::product_crossing(ctx), qosa::checks::product_cdf_vs_bessel(ctx)},
       10.0});

  run({"4 quantile-distance-pathologies",
       {qosa::checks::kucherenko_flat_below_half(ctx),
        qosa::checks::kucherenko_sq_nonmonotone(ctx), qosa::checks::kucherenko_mc(ctx)},
       30.0});

  run({"5 truncated-expectation-lemma",
       {qosa::checks::lemma_truncated_expectation(ctx)},
       10.0});

  run({"6 invariance-and-ordering-properties",
       {qosa::checks::quantile_translation_scaling(ctx),
        qosa::checks::estimator_translation_exactness(ctx),
        qosa::checks::estimator_negative_scale_flip(ctx),
        qosa::checks::additive_independent_orderings(ctx),
        qosa::checks::props_additive_mc(ctx)},
       120.0});

  run({"7 shapley-axioms-and-samplers",
       {qosa::checks::shapley_axioms(ctx), qosa::checks::shapley_brute_force(ctx),
        qosa::checks::shapley_permutation_unbiased(ctx)},
       30.0});

  run({"8 coalition-cost-monotonicity",
       {qosa::checks::coalition_monotonicity(ctx)},
       120.0});

  run({"9 figure-reproduction",
       {qosa::checks::figure_reproduction(ctx), qosa::checks::sweep_byte_determinism(ctx)},
       0.0});

  if (failures == 0) {
    std::printf("all 9 acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d acceptance criteria FAILED\n", failures);
  return 1;
}
