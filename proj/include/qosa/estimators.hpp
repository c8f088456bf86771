#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "qosa/coalition.hpp"
#include "qosa/contrast.hpp"
#include "qosa/kernels.hpp"
#include "qosa/models.hpp"
#include "qosa/rng.hpp"
#include "qosa/shapley.hpp"

namespace qosa {

/// How conditional quantiles (or means) are obtained for the Monte Carlo
/// estimators: analytically per sample point when the model supports it, or
/// from k-nearest-neighbour windows on the pooled sample.
enum class CondMethod { auto_select, exact, knn };

struct EstimatorConfig {
  std::size_t n_pooled = 100'000;  // pooled sample size (both paths)
  std::size_t n_outer = 0;         // exact-path sample size override; 0 -> n_pooled
  std::size_t n_inner = 1;         // reserved: exact conditionals need no inner draws
  std::size_t k_neighbors = 0;     // 0 -> ceil(n^(2/3))
  std::size_t knn_queries = 0;     // multi-coordinate conditioning only; 0 -> min(n, 4096)
  int n_batches = 16;              // non-overlapping batches for std errors
  RandomStream stream{0, 0};
  Exec exec = Exec::parallel;
  CondMethod method = CondMethod::auto_select;
  bool use_truncated_rewrite = false;  // first-order via truncated expectations

  void validate() const;
  std::size_t sample_size(CondMethod resolved) const;
  std::size_t neighbors_for(std::size_t n) const;
};

struct IndexEstimate {
  double value;
  double std_error;
  std::size_t n_effective;
  CondMethod method;  // resolved to exact or knn
  double alpha;
};

// ---- pure index formulas on precomputed arrays ----
// y and cond_quantile are row-aligned; uncond_quantile is the type-1
// empirical quantile of y. These are the deterministic building blocks the
// estimators reduce to, and they carry the invariance structure of the
// indices: translating or positively rescaling (y, quantiles) jointly leaves
// the values unchanged in exact arithmetic.

/// 1 - mean pinball(y, cond_quantile) / mean pinball(y, uncond_quantile).
double qosa_closed_index_from_values(std::span<const double> y,
                                     std::span<const double> cond_quantile,
                                     double uncond_quantile, QuantileLevel alpha);

/// mean pinball(y, cond_quantile) / mean pinball(y, uncond_quantile).
double qosa_cost_ratio_from_values(std::span<const double> y,
                                   std::span<const double> cond_quantile,
                                   double uncond_quantile, QuantileLevel alpha);

/// Truncated-expectation rewrite of the first-order index:
/// (E[Y 1{Y<=q_c}] - E[Y 1{Y<=q}]) / (alpha E[Y] - E[Y 1{Y<=q}]).
double qosa_first_order_truncated_from_values(std::span<const double> y,
                                              std::span<const double> cond_quantile,
                                              double uncond_quantile, QuantileLevel alpha);

// ---- estimators ----

IndexEstimate estimate_first_order_qosa(const ModelSpec& model, int i, QuantileLevel alpha,
                                        const EstimatorConfig& cfg);
IndexEstimate estimate_total_qosa(const ModelSpec& model, int i, QuantileLevel alpha,
                                  const EstimatorConfig& cfg);

/// Closed index of a whole group (conditioning on X_group): 0 for the empty
/// group, 1 for the full set, monotone in between.
IndexEstimate estimate_group_qosa(const ModelSpec& model, const Coalition& group,
                                  QuantileLevel alpha, const EstimatorConfig& cfg);

/// Interaction of the pair (i, j): group({i,j}) - group({i}) - group({j}),
/// assembled on one shared sample.
IndexEstimate estimate_second_order_qosa(const ModelSpec& model, int i, int j,
                                         QuantileLevel alpha, const EstimatorConfig& cfg);

/// Mean absolute (order 1) or squared (order 2) distance between the
/// unconditional quantile and the quantile conditioned on X_i.
IndexEstimate estimate_kucherenko(const ModelSpec& model, int i, QuantileLevel alpha, int order,
                                  const EstimatorConfig& cfg);

/// Normalized version across all inputs, estimated in one pass on a shared
/// sample.
std::vector<IndexEstimate> estimate_kucherenko_normalized(const ModelSpec& model,
                                                          QuantileLevel alpha, int order,
                                                          const EstimatorConfig& cfg);

struct CostEstimate {
  double value;
  double std_error;
};

/// Coalition costs for Shapley aggregation. All coalitions share one pooled
/// sample and one unconditional quantile; cost(empty) = 0 and
/// cost(full) = 1 hold exactly by construction.
class CoalitionCostEstimator {
 public:
  CoalitionCostEstimator(const ModelSpec& model, QuantileLevel alpha,
                         const EstimatorConfig& cfg);
  ~CoalitionCostEstimator();

  CondMethod method() const;
  std::size_t sample_size() const;
  CostEstimate cost(const Coalition& coalition) const;
  /// Full table plus one table per batch (for error propagation through the
  /// Shapley aggregation).
  CostTable table() const;
  std::vector<CostTable> batch_tables() const;

  /// First ("distance between conditional and unconditional quantile") cost
  /// table; exposed for comparison, without the monotone-increments
  /// guarantee of the second cost function.
  CostTable first_cost_table() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct QosaIndexEstimates {
  std::vector<IndexEstimate> first_order;
  std::vector<IndexEstimate> total;
  ShapleyAttribution qose;
  CondMethod method;
  std::size_t n_effective;
};

/// First-order, total and Shapley estimates off a single pooled sample.
QosaIndexEstimates estimate_all_qosa(const ModelSpec& model, QuantileLevel alpha,
                                     const EstimatorConfig& cfg);

/// Quantile-oriented Shapley effects (cost table + exact aggregation).
ShapleyAttribution qose_estimate(const ModelSpec& model, QuantileLevel alpha,
                                 const EstimatorConfig& cfg);

struct VarianceIndices {
  std::vector<IndexEstimate> sobol_first;
  std::vector<IndexEstimate> sobol_total;
  ShapleyAttribution shapley;  // variance-based Shapley effects, normalized
  CondMethod method;
};

/// Variance-based baseline: the identical pipeline run with the squared
/// contrast (conditional means instead of conditional quantiles).
VarianceIndices variance_shapley_and_sobol(const ModelSpec& model, const EstimatorConfig& cfg);

}  // namespace qosa
