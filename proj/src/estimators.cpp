#include "qosa/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "qosa/normal.hpp"

namespace qosa {

void EstimatorConfig::validate() const {
  if (n_pooled < 1 || n_inner < 1) throw std::invalid_argument("EstimatorConfig: counts must be >= 1");
  if (n_batches < 8) throw std::invalid_argument("EstimatorConfig: std errors need at least 8 batches");
  if (n_pooled < static_cast<std::size_t>(n_batches) * 2)
    throw std::invalid_argument("EstimatorConfig: sample too small for the batch count");
  if (k_neighbors > n_pooled)
    throw std::invalid_argument("EstimatorConfig: k_neighbors cannot exceed n_pooled");
}

std::size_t EstimatorConfig::sample_size(CondMethod resolved) const {
  return (resolved == CondMethod::exact && n_outer > 0) ? n_outer : n_pooled;
}

std::size_t EstimatorConfig::neighbors_for(std::size_t n) const {
  if (n < 1) return 1;
  std::size_t k = k_neighbors > 0
                      ? k_neighbors
                      : static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), 2.0 / 3.0)));
  return std::clamp<std::size_t>(k, 1, n);
}

namespace {

double require_positive_contrast(double upsilon) {
  if (upsilon < kDegenerateContrast)
    throw std::runtime_error("estimator: degenerate output (average contrast below threshold)");
  return upsilon;
}

}  // namespace

double qosa_cost_ratio_from_values(std::span<const double> y,
                                   std::span<const double> cond_quantile,
                                   double uncond_quantile, QuantileLevel alpha) {
  if (y.size() != cond_quantile.size() || y.empty())
    throw std::invalid_argument("qosa_cost_ratio_from_values: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t r = 0; r < y.size(); ++r) {
    num += pinball_loss(y[r], cond_quantile[r], alpha);
    den += pinball_loss(y[r], uncond_quantile, alpha);
  }
  const double n = static_cast<double>(y.size());
  return (num / n) / require_positive_contrast(den / n);
}

double qosa_closed_index_from_values(std::span<const double> y,
                                     std::span<const double> cond_quantile,
                                     double uncond_quantile, QuantileLevel alpha) {
  return 1.0 - qosa_cost_ratio_from_values(y, cond_quantile, uncond_quantile, alpha);
}

double qosa_first_order_truncated_from_values(std::span<const double> y,
                                              std::span<const double> cond_quantile,
                                              double uncond_quantile, QuantileLevel alpha) {
  if (y.size() != cond_quantile.size() || y.empty())
    throw std::invalid_argument("qosa_first_order_truncated_from_values: size mismatch");
  double mean = 0.0, trunc_cond = 0.0, trunc_uncond = 0.0;
  for (std::size_t r = 0; r < y.size(); ++r) {
    mean += y[r];
    if (y[r] <= cond_quantile[r]) trunc_cond += y[r];
    if (y[r] <= uncond_quantile) trunc_uncond += y[r];
  }
  const double n = static_cast<double>(y.size());
  mean /= n;
  trunc_cond /= n;
  trunc_uncond /= n;
  double den = alpha.value() * mean - trunc_uncond;
  require_positive_contrast(std::abs(den));
  return (trunc_cond - trunc_uncond) / den;
}

// ==========================================================================

namespace {

struct Range {
  std::size_t begin, end;
  std::size_t size() const { return end - begin; }
};

/// Per-conditioning-set statistics, entry 0 for the full sample followed by
/// one entry per batch.
struct CoalitionStats {
  std::vector<double> cost_ratio;   // mean psi(y, q_cond) / mean psi(y, q_uncond)
  std::vector<double> first_cost;   // mean psi(q_cond, q_uncond) / same normalizer
  std::vector<double> trunc_first;  // truncated-expectation first-order form
  std::vector<double> kuch_abs;     // mean |q_uncond - q_cond|
  std::vector<double> kuch_sq;      // mean (q_uncond - q_cond)^2
  std::size_t n_queries_full = 0;
};

struct VarianceStats {
  std::vector<double> cost_ratio;   // mean (y - m_cond)^2 / variance
  std::vector<double> first_ratio;  // mean (m_cond - mean)^2 / variance
};

bool model_supports_exact_quantiles_everywhere(const ModelSpec& model) {
  switch (model.kind()) {
    case ModelSpec::Kind::linear_gaussian:
    case ModelSpec::Kind::log_linear_gaussian:
    case ModelSpec::Kind::exponential_product:
    case ModelSpec::Kind::exponential_difference:
      return true;
    case ModelSpec::Kind::additive: {
      const int d = model.dim();
      if (d > 20) return false;
      for (std::uint64_t mask = 0; mask < (1ull << d); ++mask)
        if (!model.supports_exact_conditional_quantile(Coalition(d, mask))) return false;
      return true;
    }
  }
  return false;
}

class Core {
 public:
  enum class Need { single_sets, all_sets };

  Core(const ModelSpec& model, QuantileLevel alpha, const EstimatorConfig& cfg, Need need)
      : model_(model), alpha_(alpha), cfg_(cfg) {
    cfg.validate();
    method_ = resolve(need);
    n_ = cfg.sample_size(method_);
    if (n_ < static_cast<std::size_t>(cfg.n_batches) * 2)
      throw std::invalid_argument("estimator: sample too small for the batch count");

    x_ = model.sample_inputs(n_, cfg.stream, cfg.exec);
    y_.resize(n_);
    const int d = model.dim();
    for_each_index(n_, cfg.exec, [&](std::size_t r) {
      double buf[64];
      for (int j = 0; j < d; ++j) buf[j] = x_(static_cast<Eigen::Index>(r), j);
      y_[r] = model_.evaluate(std::span<const double>(buf, static_cast<std::size_t>(d)));
    });

    const auto b = static_cast<std::size_t>(cfg.n_batches);
    ranges_.push_back({0, n_});
    for (std::size_t k = 0; k < b; ++k) ranges_.push_back({k * n_ / b, (k + 1) * n_ / b});

    uncond_quantile_.resize(ranges_.size());
    ymean_.resize(ranges_.size());
    std::vector<double> scratch;
    for (std::size_t k = 0; k < ranges_.size(); ++k) {
      const Range& rg = ranges_[k];
      scratch.assign(y_.begin() + static_cast<long>(rg.begin), y_.begin() + static_cast<long>(rg.end));
      std::sort(scratch.begin(), scratch.end());
      uncond_quantile_[k] = scratch[quantile_order_index(alpha_.value(), scratch.size()) - 1];
      double m = 0.0;
      for (double v : scratch) m += v;
      ymean_[k] = m / static_cast<double>(scratch.size());
    }

    // Quantile-distance statistics measure against the population quantile,
    // which the exact path knows in closed form; its sampling noise would
    // otherwise dominate their variance.
    if (method_ == CondMethod::exact) {
      try {
        kuch_reference_ = model_.output_quantile_exact(alpha_);
      } catch (const std::exception&) {
        kuch_reference_.reset();  // fall back to the empirical quantile
      }
    }
  }

  CondMethod method() const { return method_; }
  std::size_t size() const { return n_; }
  std::size_t n_batches() const { return ranges_.size() - 1; }
  const ModelSpec& model() const { return model_; }

  CoalitionStats stats_for(const Coalition& conditioning) const {
    CoalitionStats s;
    const std::size_t nr = ranges_.size();
    s.cost_ratio.resize(nr);
    s.first_cost.resize(nr);
    s.trunc_first.resize(nr);
    s.kuch_abs.resize(nr);
    s.kuch_sq.resize(nr);
    if (conditioning.empty()) {
      // conditioning on nothing: the conditional quantile is the
      // unconditional one on every range
      for (std::size_t k = 0; k < nr; ++k) {
        s.cost_ratio[k] = 1.0;
        s.first_cost[k] = 0.0;
        s.trunc_first[k] = 0.0;
        s.kuch_abs[k] = 0.0;
        s.kuch_sq[k] = 0.0;
      }
      s.n_queries_full = n_;
      return s;
    }

    if (method_ == CondMethod::exact) {
      std::vector<double> qc = exact_quantile_column(conditioning);
      for (std::size_t k = 0; k < nr; ++k)
        reduce_quantile_stats(k, all_queries(ranges_[k]),
                              [&](std::size_t row) { return qc[row]; }, s);
      s.n_queries_full = n_;
      return s;
    }

    // data-driven path
    for (std::size_t k = 0; k < nr; ++k) {
      const Range& rg = ranges_[k];
      if (conditioning.full()) {
        reduce_quantile_stats(k, all_queries(rg), [&](std::size_t row) { return y_[row]; }, s);
        if (k == 0) s.n_queries_full = n_;
      } else if (conditioning.size() == 1) {
        const int j = conditioning.members()[0];
        std::span<const double> coord(x_.col(j).data() + rg.begin, rg.size());
        std::span<const double> yr(y_.data() + rg.begin, rg.size());
        std::vector<double> qc = knn_conditional_quantiles_1d(
            coord, yr, cfg_.neighbors_for(rg.size()), alpha_.value(), cfg_.exec);
        reduce_quantile_stats(k, all_queries(rg),
                              [&](std::size_t row) { return qc[row - rg.begin]; }, s);
        if (k == 0) s.n_queries_full = n_;
      } else {
        auto [coords, queries] = standardized_block(conditioning, rg, k);
        std::span<const double> yr(y_.data() + rg.begin, rg.size());
        std::vector<double> qc = knn_conditional_quantiles_nd(
            coords, rg.size(), static_cast<std::size_t>(conditioning.size()), yr, queries,
            cfg_.neighbors_for(rg.size()), alpha_.value(), cfg_.exec);
        std::vector<std::size_t> rows(queries.size());
        for (std::size_t q = 0; q < queries.size(); ++q) rows[q] = rg.begin + queries[q];
        reduce_quantile_stats_indexed(k, rows, qc, s);
        if (k == 0) s.n_queries_full = rows.size();
      }
    }
    return s;
  }

  VarianceStats var_stats_for(const Coalition& conditioning) const {
    VarianceStats s;
    const std::size_t nr = ranges_.size();
    s.cost_ratio.resize(nr);
    s.first_ratio.resize(nr);
    if (conditioning.empty()) {
      for (std::size_t k = 0; k < nr; ++k) {
        s.cost_ratio[k] = 1.0;
        s.first_ratio[k] = 0.0;
      }
      return s;
    }
    if (method_ == CondMethod::exact) {
      std::vector<double> mc = exact_mean_column(conditioning);
      for (std::size_t k = 0; k < nr; ++k)
        reduce_variance_stats(k, all_queries(ranges_[k]),
                              [&](std::size_t row) { return mc[row]; }, s);
      return s;
    }
    for (std::size_t k = 0; k < nr; ++k) {
      const Range& rg = ranges_[k];
      if (conditioning.full()) {
        reduce_variance_stats(k, all_queries(rg), [&](std::size_t row) { return y_[row]; }, s);
      } else if (conditioning.size() == 1) {
        const int j = conditioning.members()[0];
        std::span<const double> coord(x_.col(j).data() + rg.begin, rg.size());
        std::span<const double> yr(y_.data() + rg.begin, rg.size());
        std::vector<double> mc =
            knn_conditional_means_1d(coord, yr, cfg_.neighbors_for(rg.size()), cfg_.exec);
        reduce_variance_stats(k, all_queries(rg),
                              [&](std::size_t row) { return mc[row - rg.begin]; }, s);
      } else {
        auto [coords, queries] = standardized_block(conditioning, rg, k);
        std::span<const double> yr(y_.data() + rg.begin, rg.size());
        std::vector<double> mc = knn_conditional_means_nd(
            coords, rg.size(), static_cast<std::size_t>(conditioning.size()), yr, queries,
            cfg_.neighbors_for(rg.size()), cfg_.exec);
        double num_cost = 0.0, num_first = 0.0, den = 0.0;
        for (std::size_t q = 0; q < queries.size(); ++q) {
          const double yv = y_[rg.begin + queries[q]];
          num_cost += squared_loss(yv, mc[q]);
          num_first += squared_loss(mc[q], ymean_[k]);
          den += squared_loss(yv, ymean_[k]);
        }
        den = require_positive_contrast(den / static_cast<double>(queries.size()));
        s.cost_ratio[k] = num_cost / static_cast<double>(queries.size()) / den;
        s.first_ratio[k] = num_first / static_cast<double>(queries.size()) / den;
      }
    }
    return s;
  }

  static IndexEstimate summarize(const std::vector<double>& per_range, std::size_t n_eff,
                                 CondMethod method, double alpha) {
    const std::size_t b = per_range.size() - 1;
    double mean_b = 0.0;
    for (std::size_t k = 1; k < per_range.size(); ++k) mean_b += per_range[k];
    mean_b /= static_cast<double>(b);
    double ss = 0.0;
    for (std::size_t k = 1; k < per_range.size(); ++k) {
      double dev = per_range[k] - mean_b;
      ss += dev * dev;
    }
    double se = std::sqrt(ss / static_cast<double>(b - 1) / static_cast<double>(b));
    return IndexEstimate{per_range[0], se, n_eff, method, alpha};
  }

 private:
  CondMethod resolve(Need need) const {
    if (cfg_.method == CondMethod::knn) return CondMethod::knn;
    bool ok = need == Need::all_sets ? model_supports_exact_quantiles_everywhere(model_)
                                     : true;  // single sets checked lazily below
    if (need == Need::single_sets) {
      const int d = model_.dim();
      for (int i = 0; i < d && ok; ++i) {
        ok = model_.supports_exact_conditional_quantile(Coalition::single(d, i)) &&
             model_.supports_exact_conditional_quantile(Coalition::single(d, i).complement());
      }
    }
    if (cfg_.method == CondMethod::exact) {
      if (!ok)
        throw std::invalid_argument(
            "estimator: model has no exact conditional quantiles for the requested sets");
      return CondMethod::exact;
    }
    return ok ? CondMethod::exact : CondMethod::knn;
  }

  struct IotaQueries {
    std::size_t begin, count;
  };
  static IotaQueries all_queries(const Range& rg) { return {rg.begin, rg.size()}; }

  template <class QuantileAt>
  void reduce_quantile_stats(std::size_t k, IotaQueries q, QuantileAt&& qc_at,
                             CoalitionStats& s) const {
    const double a = alpha_.value();
    const double qu = uncond_quantile_[k];
    const double kuch_ref = kuch_reference_.value_or(qu);
    const QuantileLevel lvl(a);
    double num = 0.0, den = 0.0, first = 0.0, tc = 0.0, tu = 0.0, mean = 0.0, kabs = 0.0,
           ksq = 0.0;
    for (std::size_t idx = 0; idx < q.count; ++idx) {
      const std::size_t row = q.begin + idx;
      const double yv = y_[row];
      const double qc = qc_at(row);
      num += pinball_loss(yv, qc, lvl);
      den += pinball_loss(yv, qu, lvl);
      first += pinball_loss(qc, qu, lvl);
      mean += yv;
      if (yv <= qc) tc += yv;
      if (yv <= qu) tu += yv;
      const double diff = kuch_ref - qc;
      kabs += std::abs(diff);
      ksq += diff * diff;
    }
    const double n = static_cast<double>(q.count);
    const double upsilon = require_positive_contrast(den / n);
    s.cost_ratio[k] = (num / n) / upsilon;
    s.first_cost[k] = (first / n) / upsilon;
    const double trunc_den = a * (mean / n) - tu / n;
    s.trunc_first[k] = std::abs(trunc_den) < kDegenerateContrast
                           ? 0.0
                           : (tc / n - tu / n) / trunc_den;
    s.kuch_abs[k] = kabs / n;
    s.kuch_sq[k] = ksq / n;
  }

  void reduce_quantile_stats_indexed(std::size_t k, const std::vector<std::size_t>& rows,
                                     const std::vector<double>& qc, CoalitionStats& s) const {
    const double a = alpha_.value();
    const double qu = uncond_quantile_[k];
    const double kuch_ref = kuch_reference_.value_or(qu);
    const QuantileLevel lvl(a);
    double num = 0.0, den = 0.0, first = 0.0, tc = 0.0, tu = 0.0, mean = 0.0, kabs = 0.0,
           ksq = 0.0;
    for (std::size_t q = 0; q < rows.size(); ++q) {
      const double yv = y_[rows[q]];
      num += pinball_loss(yv, qc[q], lvl);
      den += pinball_loss(yv, qu, lvl);
      first += pinball_loss(qc[q], qu, lvl);
      mean += yv;
      if (yv <= qc[q]) tc += yv;
      if (yv <= qu) tu += yv;
      const double diff = kuch_ref - qc[q];
      kabs += std::abs(diff);
      ksq += diff * diff;
    }
    const double n = static_cast<double>(rows.size());
    const double upsilon = require_positive_contrast(den / n);
    s.cost_ratio[k] = (num / n) / upsilon;
    s.first_cost[k] = (first / n) / upsilon;
    const double trunc_den = a * (mean / n) - tu / n;
    s.trunc_first[k] = std::abs(trunc_den) < kDegenerateContrast
                           ? 0.0
                           : (tc / n - tu / n) / trunc_den;
    s.kuch_abs[k] = kabs / n;
    s.kuch_sq[k] = ksq / n;
  }

  template <class MeanAt>
  void reduce_variance_stats(std::size_t k, IotaQueries q, MeanAt&& mc_at,
                             VarianceStats& s) const {
    double num_cost = 0.0, num_first = 0.0, den = 0.0;
    for (std::size_t idx = 0; idx < q.count; ++idx) {
      const std::size_t row = q.begin + idx;
      const double yv = y_[row];
      const double m = mc_at(row);
      num_cost += squared_loss(yv, m);
      num_first += squared_loss(m, ymean_[k]);
      den += squared_loss(yv, ymean_[k]);
    }
    const double n = static_cast<double>(q.count);
    const double variance = require_positive_contrast(den / n);
    s.cost_ratio[k] = (num_cost / n) / variance;
    s.first_ratio[k] = (num_first / n) / variance;
  }

  std::vector<double> exact_quantile_column(const Coalition& conditioning) const {
    std::vector<double> qc(n_);
    if (model_.has_gaussian_inputs() && !conditioning.full()) {
      const LinearConditional lc = model_.linear_conditional(conditioning);
      const double z = std_normal_quantile(alpha_.value());
      const auto members = conditioning.members();
      const bool log_output = model_.kind() == ModelSpec::Kind::log_linear_gaussian;
      for_each_index(n_, cfg_.exec, [&](std::size_t r) {
        double m = lc.c0;
        for (std::size_t j = 0; j < members.size(); ++j)
          m += lc.w[static_cast<Eigen::Index>(j)] * x_(static_cast<Eigen::Index>(r), members[j]);
        double q = m + lc.sd * z;
        qc[r] = log_output ? std::exp(q) : q;
      });
      return qc;
    }
    const auto members = conditioning.members();
    for_each_index(n_, cfg_.exec, [&](std::size_t r) {
      double buf[64];
      for (std::size_t j = 0; j < members.size(); ++j)
        buf[j] = x_(static_cast<Eigen::Index>(r), members[j]);
      qc[r] = model_.conditional_output_quantile_exact(
          conditioning, std::span<const double>(buf, members.size()), alpha_);
    });
    return qc;
  }

  std::vector<double> exact_mean_column(const Coalition& conditioning) const {
    std::vector<double> mc(n_);
    if (model_.has_gaussian_inputs() && !conditioning.full()) {
      const LinearConditional lc = model_.linear_conditional(conditioning);
      const auto members = conditioning.members();
      const bool log_output = model_.kind() == ModelSpec::Kind::log_linear_gaussian;
      const double half_var = 0.5 * lc.sd * lc.sd;
      for_each_index(n_, cfg_.exec, [&](std::size_t r) {
        double m = lc.c0;
        for (std::size_t j = 0; j < members.size(); ++j)
          m += lc.w[static_cast<Eigen::Index>(j)] * x_(static_cast<Eigen::Index>(r), members[j]);
        mc[r] = log_output ? std::exp(m + half_var) : m;
      });
      return mc;
    }
    const auto members = conditioning.members();
    for_each_index(n_, cfg_.exec, [&](std::size_t r) {
      double buf[64];
      for (std::size_t j = 0; j < members.size(); ++j)
        buf[j] = x_(static_cast<Eigen::Index>(r), members[j]);
      mc[r] = model_.conditional_output_mean_exact(
          conditioning, std::span<const double>(buf, members.size()));
    });
    return mc;
  }

  /// Standardized conditioning columns over a row range plus deterministic,
  /// evenly spaced query indices (local to the range).
  std::pair<std::vector<double>, std::vector<std::size_t>> standardized_block(
      const Coalition& conditioning, const Range& rg, std::size_t range_index) const {
    const auto members = conditioning.members();
    const std::size_t len = rg.size();
    std::vector<double> coords(members.size() * len);
    for (std::size_t c = 0; c < members.size(); ++c) {
      const double* col = x_.col(members[c]).data() + rg.begin;
      double mean = 0.0;
      for (std::size_t r = 0; r < len; ++r) mean += col[r];
      mean /= static_cast<double>(len);
      double ss = 0.0;
      for (std::size_t r = 0; r < len; ++r) {
        double dev = col[r] - mean;
        ss += dev * dev;
      }
      double sd = std::sqrt(ss / static_cast<double>(len));
      if (!(sd > 0.0)) sd = 1.0;
      for (std::size_t r = 0; r < len; ++r) coords[c * len + r] = (col[r] - mean) / sd;
    }
    std::size_t target = cfg_.knn_queries > 0 ? cfg_.knn_queries : 4096;
    if (range_index > 0) {
      target = std::max<std::size_t>(8, target * len / std::max<std::size_t>(1, n_));
    }
    target = std::min(target, len);
    std::vector<std::size_t> queries(target);
    for (std::size_t q = 0; q < target; ++q) queries[q] = q * len / target;
    return {std::move(coords), std::move(queries)};
  }

  ModelSpec model_;  // by value: estimator cores may outlive the caller's spec
  QuantileLevel alpha_;
  EstimatorConfig cfg_;
  CondMethod method_ = CondMethod::exact;
  std::size_t n_ = 0;
  Eigen::MatrixXd x_;
  std::vector<double> y_;
  std::vector<Range> ranges_;             // [0] = full sample, then batches
  std::vector<double> uncond_quantile_;  // per range
  std::vector<double> ymean_;            // per range
  std::optional<double> kuch_reference_;  // population quantile, exact path only
};

IndexEstimate summarize_linear(const std::vector<double>& per_range, double scale, double shift,
                               std::size_t n_eff, CondMethod method, double alpha) {
  std::vector<double> t(per_range.size());
  for (std::size_t k = 0; k < per_range.size(); ++k) t[k] = shift + scale * per_range[k];
  return Core::summarize(t, n_eff, method, alpha);
}

}  // namespace

// ---- single-index estimators ----

IndexEstimate estimate_first_order_qosa(const ModelSpec& model, int i, QuantileLevel alpha,
                                        const EstimatorConfig& cfg) {
  Core core(model, alpha, cfg, Core::Need::single_sets);
  auto s = core.stats_for(Coalition::single(model.dim(), i));
  const auto& v = cfg.use_truncated_rewrite ? s.trunc_first : s.cost_ratio;
  return cfg.use_truncated_rewrite
             ? Core::summarize(v, s.n_queries_full, core.method(), alpha.value())
             : summarize_linear(v, -1.0, 1.0, s.n_queries_full, core.method(), alpha.value());
}

IndexEstimate estimate_total_qosa(const ModelSpec& model, int i, QuantileLevel alpha,
                                  const EstimatorConfig& cfg) {
  Core core(model, alpha, cfg, Core::Need::single_sets);
  auto s = core.stats_for(Coalition::single(model.dim(), i).complement());
  return Core::summarize(s.cost_ratio, s.n_queries_full, core.method(), alpha.value());
}

IndexEstimate estimate_group_qosa(const ModelSpec& model, const Coalition& group,
                                  QuantileLevel alpha, const EstimatorConfig& cfg) {
  Core core(model, alpha, cfg, Core::Need::all_sets);
  auto s = core.stats_for(group);
  return summarize_linear(s.cost_ratio, -1.0, 1.0, s.n_queries_full, core.method(),
                          alpha.value());
}

IndexEstimate estimate_second_order_qosa(const ModelSpec& model, int i, int j,
                                         QuantileLevel alpha, const EstimatorConfig& cfg) {
  if (i == j) throw std::invalid_argument("estimate_second_order_qosa: need two distinct inputs");
  Core core(model, alpha, cfg, Core::Need::all_sets);
  const int d = model.dim();
  auto s_ij = core.stats_for(Coalition::of(d, {i, j}));
  auto s_i = core.stats_for(Coalition::single(d, i));
  auto s_j = core.stats_for(Coalition::single(d, j));
  std::vector<double> v(s_ij.cost_ratio.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    double g_ij = 1.0 - s_ij.cost_ratio[k];
    double g_i = 1.0 - s_i.cost_ratio[k];
    double g_j = 1.0 - s_j.cost_ratio[k];
    v[k] = g_ij - g_i - g_j;
  }
  return Core::summarize(v, s_ij.n_queries_full, core.method(), alpha.value());
}

IndexEstimate estimate_kucherenko(const ModelSpec& model, int i, QuantileLevel alpha, int order,
                                  const EstimatorConfig& cfg) {
  if (order != 1 && order != 2) throw std::invalid_argument("estimate_kucherenko: order must be 1 or 2");
  Core core(model, alpha, cfg, Core::Need::single_sets);
  auto s = core.stats_for(Coalition::single(model.dim(), i));
  return Core::summarize(order == 1 ? s.kuch_abs : s.kuch_sq, s.n_queries_full, core.method(),
                         alpha.value());
}

std::vector<IndexEstimate> estimate_kucherenko_normalized(const ModelSpec& model,
                                                          QuantileLevel alpha, int order,
                                                          const EstimatorConfig& cfg) {
  if (order != 1 && order != 2) throw std::invalid_argument("estimate_kucherenko_normalized: order must be 1 or 2");
  Core core(model, alpha, cfg, Core::Need::single_sets);
  const int d = model.dim();
  std::vector<CoalitionStats> stats;
  stats.reserve(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) stats.push_back(core.stats_for(Coalition::single(d, i)));
  const std::size_t nr = stats[0].cost_ratio.size();
  std::vector<IndexEstimate> out;
  for (int i = 0; i < d; ++i) {
    std::vector<double> ratio(nr);
    for (std::size_t k = 0; k < nr; ++k) {
      double total = 0.0;
      for (int j = 0; j < d; ++j)
        total += order == 1 ? stats[static_cast<std::size_t>(j)].kuch_abs[k]
                            : stats[static_cast<std::size_t>(j)].kuch_sq[k];
      double own = order == 1 ? stats[static_cast<std::size_t>(i)].kuch_abs[k]
                              : stats[static_cast<std::size_t>(i)].kuch_sq[k];
      ratio[k] = own / total;
    }
    out.push_back(Core::summarize(ratio, stats[static_cast<std::size_t>(i)].n_queries_full,
                                  core.method(), alpha.value()));
  }
  return out;
}

// ---- coalition costs and Shapley front ends ----

struct CoalitionCostEstimator::Impl {
  Impl(const ModelSpec& model, QuantileLevel alpha, const EstimatorConfig& cfg)
      : core(model, alpha, cfg, Core::Need::all_sets), dim(model.dim()) {
    const std::size_t n_masks = std::size_t{1} << dim;
    const std::size_t nr = core.n_batches() + 1;
    cost.assign(n_masks, std::vector<double>(nr, 0.0));
    first_cost.assign(n_masks, std::vector<double>(nr, 0.0));
    // one pass over conditioning sets fills both tables:
    // cost(J) conditions on the complement of J; the first cost conditions on J
    for (std::uint64_t w = 0; w < n_masks; ++w) {
      Coalition conditioning(dim, w);
      auto s = core.stats_for(conditioning);
      cost[conditioning.complement().mask()] = s.cost_ratio;
      first_cost[w] = s.first_cost;
      if (s.n_queries_full > 0 && (n_queries == 0 || s.n_queries_full < n_queries))
        n_queries = s.n_queries_full;
    }
  }

  Core core;
  int dim;
  std::size_t n_queries = 0;
  std::vector<std::vector<double>> cost;        // per mask, per range
  std::vector<std::vector<double>> first_cost;  // per mask, per range
};

CoalitionCostEstimator::CoalitionCostEstimator(const ModelSpec& model, QuantileLevel alpha,
                                               const EstimatorConfig& cfg)
    : impl_(std::make_unique<Impl>(model, alpha, cfg)) {}

CoalitionCostEstimator::~CoalitionCostEstimator() = default;

CondMethod CoalitionCostEstimator::method() const { return impl_->core.method(); }
std::size_t CoalitionCostEstimator::sample_size() const { return impl_->core.size(); }

CostEstimate CoalitionCostEstimator::cost(const Coalition& coalition) const {
  const auto& v = impl_->cost[coalition.mask()];
  auto est = Core::summarize(v, impl_->n_queries, impl_->core.method(), 0.0);
  return {est.value, est.std_error};
}

CostTable CoalitionCostEstimator::table() const {
  std::vector<double> costs(impl_->cost.size());
  for (std::size_t m = 0; m < costs.size(); ++m) costs[m] = impl_->cost[m][0];
  return CostTable(impl_->dim, std::move(costs));
}

std::vector<CostTable> CoalitionCostEstimator::batch_tables() const {
  const std::size_t b = impl_->core.n_batches();
  std::vector<CostTable> out;
  out.reserve(b);
  for (std::size_t k = 1; k <= b; ++k) {
    std::vector<double> costs(impl_->cost.size());
    for (std::size_t m = 0; m < costs.size(); ++m) costs[m] = impl_->cost[m][k];
    costs[0] = 0.0;
    out.emplace_back(impl_->dim, std::move(costs));
  }
  return out;
}

CostTable CoalitionCostEstimator::first_cost_table() const {
  std::vector<double> costs(impl_->first_cost.size());
  for (std::size_t m = 0; m < costs.size(); ++m) costs[m] = impl_->first_cost[m][0];
  costs[0] = 0.0;
  return CostTable(impl_->dim, std::move(costs));
}

namespace {

ShapleyAttribution shapley_with_batch_errors(const CostTable& full,
                                             const std::vector<CostTable>& batches, Exec exec) {
  ShapleyAttribution out = shapley_exact(full, exec);
  const std::size_t d = out.values.size();
  const std::size_t b = batches.size();
  std::vector<std::vector<double>> batch_values;
  batch_values.reserve(b);
  for (const auto& t : batches) batch_values.push_back(shapley_exact(t, exec).values);
  out.std_errors.assign(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    double mean = 0.0;
    for (std::size_t k = 0; k < b; ++k) mean += batch_values[k][i];
    mean /= static_cast<double>(b);
    double ss = 0.0;
    for (std::size_t k = 0; k < b; ++k) {
      double dev = batch_values[k][i] - mean;
      ss += dev * dev;
    }
    out.std_errors[i] =
        std::sqrt(ss / static_cast<double>(b - 1) / static_cast<double>(b));
  }
  return out;
}

}  // namespace

QosaIndexEstimates estimate_all_qosa(const ModelSpec& model, QuantileLevel alpha,
                                     const EstimatorConfig& cfg) {
  CoalitionCostEstimator est(model, alpha, cfg);
  const int d = model.dim();
  QosaIndexEstimates out;
  out.method = est.method();
  out.n_effective = est.sample_size();
  for (int i = 0; i < d; ++i) {
    const Coalition self = Coalition::single(d, i);
    CostEstimate c_first = est.cost(self.complement());  // conditions on X_i
    CostEstimate c_total = est.cost(self);               // conditions on X_{-i}
    out.first_order.push_back(IndexEstimate{1.0 - c_first.value, c_first.std_error,
                                            out.n_effective, est.method(), alpha.value()});
    out.total.push_back(IndexEstimate{c_total.value, c_total.std_error, out.n_effective,
                                      est.method(), alpha.value()});
  }
  out.qose = shapley_with_batch_errors(est.table(), est.batch_tables(), cfg.exec);
  return out;
}

ShapleyAttribution qose_estimate(const ModelSpec& model, QuantileLevel alpha,
                                 const EstimatorConfig& cfg) {
  CoalitionCostEstimator est(model, alpha, cfg);
  return shapley_with_batch_errors(est.table(), est.batch_tables(), cfg.exec);
}

VarianceIndices variance_shapley_and_sobol(const ModelSpec& model, const EstimatorConfig& cfg) {
  const QuantileLevel dummy(0.5);
  Core core(model, dummy, cfg, Core::Need::all_sets);
  const int d = model.dim();
  const std::size_t n_masks = std::size_t{1} << d;
  const std::size_t nr = core.n_batches() + 1;

  std::vector<std::vector<double>> cost(n_masks), first(n_masks);
  for (std::uint64_t w = 0; w < n_masks; ++w) {
    Coalition conditioning(d, w);
    auto s = core.var_stats_for(conditioning);
    cost[conditioning.complement().mask()] = s.cost_ratio;
    first[w] = s.first_ratio;
  }

  VarianceIndices out;
  out.method = core.method();
  for (int i = 0; i < d; ++i) {
    const Coalition self = Coalition::single(d, i);
    out.sobol_first.push_back(
        Core::summarize(first[self.mask()], core.size(), core.method(), 0.0));
    out.sobol_total.push_back(
        Core::summarize(cost[self.mask()], core.size(), core.method(), 0.0));
  }

  std::vector<double> full_costs(n_masks);
  for (std::size_t m = 0; m < n_masks; ++m) full_costs[m] = cost[m][0];
  CostTable full_table(d, std::move(full_costs));
  std::vector<CostTable> batch_tables;
  for (std::size_t k = 1; k < nr; ++k) {
    std::vector<double> costs(n_masks);
    for (std::size_t m = 0; m < n_masks; ++m) costs[m] = cost[m][k];
    costs[0] = 0.0;
    batch_tables.emplace_back(d, std::move(costs));
  }
  out.shapley = shapley_with_batch_errors(full_table, batch_tables, cfg.exec);
  return out;
}

}  // namespace qosa
