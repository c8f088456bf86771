#include "qosa/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "qosa/analytic.hpp"
#include "json.hpp"

namespace qosa {

std::string to_string(IndexKind kind) {
  switch (kind) {
    case IndexKind::qosa_first: return "qosa_first";
    case IndexKind::qosa_total: return "qosa_total";
    case IndexKind::qosa_group: return "qosa_group";
    case IndexKind::qose: return "qose";
    case IndexKind::kucherenko: return "kucherenko";
    case IndexKind::sobol: return "sobol";
    case IndexKind::variance_shapley: return "variance_shapley";
  }
  return "?";
}

std::optional<IndexKind> index_kind_from_string(const std::string& name) {
  for (IndexKind k :
       {IndexKind::qosa_first, IndexKind::qosa_total, IndexKind::qosa_group, IndexKind::qose,
        IndexKind::kucherenko, IndexKind::sobol, IndexKind::variance_shapley})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

GridSpec GridSpec::parse(const std::string& text) {
  GridSpec g{};
  char extra = 0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%lf%c", &g.start, &g.stop, &g.step, &extra) != 3)
    throw std::invalid_argument("grid: expected start:stop:step, got '" + text + "'");
  if (!(g.step > 0.0) || g.stop < g.start) throw std::invalid_argument("grid: empty or inverted");
  return g;
}

std::vector<double> GridSpec::points() const {
  std::vector<double> out;
  const long long count = static_cast<long long>(std::floor((stop - start) / step + 1e-9));
  for (long long i = 0; i <= count; ++i) {
    double v = start + static_cast<double>(i) * step;
    if (std::abs(v - stop) < 1e-9) v = stop;  // land exactly on the endpoint
    out.push_back(v);
  }
  return out;
}

namespace {

std::string engine_name(SweepConfig::Engine engine, CondMethod method) {
  if (engine == SweepConfig::Engine::analytic) return "analytic";
  return method == CondMethod::knn ? "mc-knn" : "mc-exact";
}

std::optional<double> model_rho(const ModelSpec& model) {
  if (model.has_gaussian_inputs() && model.dim() == 2) return model.correlation();
  return std::nullopt;
}

void push_row(std::vector<ResultRow>& rows, const ModelSpec& model, double alpha,
              std::optional<double> rho, const std::string& input, const std::string& index,
              double value, std::optional<double> se, std::size_t n, std::uint64_t seed,
              const std::string& engine) {
  rows.push_back(ResultRow{model.id(), alpha, rho, input, index, value, se, n, seed, engine});
}

std::vector<ResultRow> analytic_point(const ModelSpec& model, double alpha,
                                      std::optional<double> rho,
                                      const std::vector<IndexKind>& indices) {
  std::vector<ResultRow> rows;
  const int d = model.dim();
  const QuantileLevel lvl(alpha);
  AnalyticIndexSet set = analytic_indices(model, lvl);
  auto need = [&](IndexKind k) {
    return std::find(indices.begin(), indices.end(), k) != indices.end();
  };
  auto label = [](int i) { return std::to_string(i + 1); };

  if (need(IndexKind::qosa_first)) {
    if (set.first_order.empty())
      throw std::invalid_argument("analytic engine: no closed-form first-order indices for model " +
                                  model.id());
    for (int i = 0; i < d; ++i)
      push_row(rows, model, alpha, rho, label(i), "qosa_first",
               set.first_order[static_cast<std::size_t>(i)], std::nullopt, 0, 0, "analytic");
  }
  if (need(IndexKind::qosa_total)) {
    if (set.total.empty())
      throw std::invalid_argument("analytic engine: no closed-form total indices for model " +
                                  model.id());
    for (int i = 0; i < d; ++i)
      push_row(rows, model, alpha, rho, label(i), "qosa_total",
               set.total[static_cast<std::size_t>(i)], std::nullopt, 0, 0, "analytic");
  }
  if (need(IndexKind::qose)) {
    if (set.qose.empty())
      throw std::invalid_argument("analytic engine: no closed-form Shapley effects for model " +
                                  model.id());
    for (int i = 0; i < d; ++i)
      push_row(rows, model, alpha, rho, label(i), "qose", set.qose[static_cast<std::size_t>(i)],
               std::nullopt, 0, 0, "analytic");
  }
  if (need(IndexKind::qosa_group)) {
    CostTable table = model.kind() == ModelSpec::Kind::linear_gaussian
                          ? gaussian_linear_cost_table(model)
                          : model.kind() == ModelSpec::Kind::log_linear_gaussian
                                ? lognormal_cost_table(model, lvl)
                                : throw std::invalid_argument(
                                      "analytic engine: no closed-form group indices for model " +
                                      model.id());
    const Coalition full = Coalition::full_set(d);
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        Coalition pair = Coalition::of(d, {i, j});
        double g_ij = 1.0 - table.cost(pair.complement());
        double g_i = 1.0 - table.cost(full.without(i).mask());
        double g_j = 1.0 - table.cost(full.without(j).mask());
        push_row(rows, model, alpha, rho, pair.label(), "qosa_group", g_ij, std::nullopt, 0, 0,
                 "analytic");
        push_row(rows, model, alpha, rho, pair.label(), "qosa_second", g_ij - g_i - g_j,
                 std::nullopt, 0, 0, "analytic");
      }
  }
  if (need(IndexKind::kucherenko)) {
    if (!set.kucherenko)
      throw std::invalid_argument("analytic engine: no closed-form quantile-distance indices for model " +
                                  model.id());
    const auto& k = *set.kucherenko;
    for (int i = 0; i < 2; ++i) {
      push_row(rows, model, alpha, rho, label(i), "kucherenko_abs",
               k.qbar_abs[static_cast<std::size_t>(i)], std::nullopt, 0, 0, "analytic");
      push_row(rows, model, alpha, rho, label(i), "kucherenko_sq",
               k.qbar_sq[static_cast<std::size_t>(i)], std::nullopt, 0, 0, "analytic");
      push_row(rows, model, alpha, rho, label(i), "kucherenko_abs_norm",
               k.q_abs[static_cast<std::size_t>(i)], std::nullopt, 0, 0, "analytic");
      push_row(rows, model, alpha, rho, label(i), "kucherenko_sq_norm",
               k.q_sq[static_cast<std::size_t>(i)], std::nullopt, 0, 0, "analytic");
    }
  }
  if (need(IndexKind::sobol) || need(IndexKind::variance_shapley)) {
    if (model.kind() != ModelSpec::Kind::linear_gaussian)
      throw std::invalid_argument(
          "analytic engine: variance-based indices are closed-form for the linear Gaussian model only");
    const auto& sigma = model.sigma();
    const auto& beta = model.beta();
    const double var_y = beta.dot(sigma * beta);
    if (!(var_y > 0.0)) throw std::runtime_error("analytic: degenerate output variance");
    if (need(IndexKind::sobol)) {
      Eigen::VectorXd sb = sigma * beta;
      for (int i = 0; i < d; ++i) {
        double s_i = sb[i] * sb[i] / sigma(i, i) / var_y;
        double b_i = gaussian_conditional_scale(beta, sigma, Coalition::single(d, i));
        push_row(rows, model, alpha, rho, label(i), "sobol_first", s_i, std::nullopt, 0, 0,
                 "analytic");
        push_row(rows, model, alpha, rho, label(i), "sobol_total", b_i * b_i / var_y,
                 std::nullopt, 0, 0, "analytic");
      }
    }
    if (need(IndexKind::variance_shapley)) {
      std::vector<double> costs(std::size_t{1} << d);
      for (std::uint64_t mask = 0; mask < costs.size(); ++mask) {
        double b = gaussian_conditional_scale(beta, sigma, Coalition(d, mask));
        costs[mask] = b * b / var_y;
      }
      costs[0] = 0.0;
      auto sh = shapley_exact(CostTable(d, std::move(costs)));
      for (int i = 0; i < d; ++i)
        push_row(rows, model, alpha, rho, label(i), "variance_shapley",
                 sh.values[static_cast<std::size_t>(i)], std::nullopt, 0, 0, "analytic");
    }
  }
  return rows;
}

std::vector<ResultRow> monte_carlo_point(const ModelSpec& model, double alpha,
                                         std::optional<double> rho,
                                         const std::vector<IndexKind>& indices,
                                         const EstimatorConfig& est) {
  std::vector<ResultRow> rows;
  const int d = model.dim();
  const QuantileLevel lvl(alpha);
  const std::uint64_t seed = est.stream.seed();
  auto need = [&](IndexKind k) {
    return std::find(indices.begin(), indices.end(), k) != indices.end();
  };
  auto label = [](int i) { return std::to_string(i + 1); };

  if (need(IndexKind::qosa_first) || need(IndexKind::qosa_total) || need(IndexKind::qose)) {
    QosaIndexEstimates all = estimate_all_qosa(model, lvl, est);
    const std::string eng = engine_name(SweepConfig::Engine::monte_carlo, all.method);
    for (int i = 0; i < d; ++i) {
      if (need(IndexKind::qosa_first))
        push_row(rows, model, alpha, rho, label(i), "qosa_first",
                 all.first_order[static_cast<std::size_t>(i)].value,
                 all.first_order[static_cast<std::size_t>(i)].std_error, all.n_effective, seed,
                 eng);
      if (need(IndexKind::qosa_total))
        push_row(rows, model, alpha, rho, label(i), "qosa_total",
                 all.total[static_cast<std::size_t>(i)].value,
                 all.total[static_cast<std::size_t>(i)].std_error, all.n_effective, seed, eng);
      if (need(IndexKind::qose))
        push_row(rows, model, alpha, rho, label(i), "qose",
                 all.qose.values[static_cast<std::size_t>(i)],
                 all.qose.std_errors[static_cast<std::size_t>(i)], all.n_effective, seed, eng);
    }
  }
  if (need(IndexKind::qosa_group)) {
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        Coalition pair = Coalition::of(d, {i, j});
        IndexEstimate g = estimate_group_qosa(model, pair, lvl, est);
        IndexEstimate s2 = estimate_second_order_qosa(model, i, j, lvl, est);
        const std::string eng = engine_name(SweepConfig::Engine::monte_carlo, g.method);
        push_row(rows, model, alpha, rho, pair.label(), "qosa_group", g.value, g.std_error,
                 g.n_effective, seed, eng);
        push_row(rows, model, alpha, rho, pair.label(), "qosa_second", s2.value, s2.std_error,
                 s2.n_effective, seed, eng);
      }
  }
  if (need(IndexKind::kucherenko)) {
    for (int order = 1; order <= 2; ++order) {
      auto norm = estimate_kucherenko_normalized(model, lvl, order, est);
      for (int i = 0; i < d; ++i) {
        IndexEstimate raw = estimate_kucherenko(model, i, lvl, order, est);
        const std::string eng = engine_name(SweepConfig::Engine::monte_carlo, raw.method);
        const std::string base = order == 1 ? "kucherenko_abs" : "kucherenko_sq";
        push_row(rows, model, alpha, rho, label(i), base, raw.value, raw.std_error,
                 raw.n_effective, seed, eng);
        push_row(rows, model, alpha, rho, label(i), base + "_norm",
                 norm[static_cast<std::size_t>(i)].value,
                 norm[static_cast<std::size_t>(i)].std_error,
                 norm[static_cast<std::size_t>(i)].n_effective, seed, eng);
      }
    }
  }
  if (need(IndexKind::sobol) || need(IndexKind::variance_shapley)) {
    VarianceIndices v = variance_shapley_and_sobol(model, est);
    const std::string eng = engine_name(SweepConfig::Engine::monte_carlo, v.method);
    for (int i = 0; i < d; ++i) {
      if (need(IndexKind::sobol)) {
        push_row(rows, model, alpha, rho, label(i), "sobol_first",
                 v.sobol_first[static_cast<std::size_t>(i)].value,
                 v.sobol_first[static_cast<std::size_t>(i)].std_error,
                 v.sobol_first[static_cast<std::size_t>(i)].n_effective, seed, eng);
        push_row(rows, model, alpha, rho, label(i), "sobol_total",
                 v.sobol_total[static_cast<std::size_t>(i)].value,
                 v.sobol_total[static_cast<std::size_t>(i)].std_error,
                 v.sobol_total[static_cast<std::size_t>(i)].n_effective, seed, eng);
      }
      if (need(IndexKind::variance_shapley))
        push_row(rows, model, alpha, rho, label(i), "variance_shapley",
                 v.shapley.values[static_cast<std::size_t>(i)],
                 v.shapley.std_errors[static_cast<std::size_t>(i)], est.n_pooled, seed, eng);
    }
  }
  return rows;
}

}  // namespace

std::vector<ResultRow> evaluate_point(const ModelSpec& model, double alpha,
                                      std::optional<double> rho,
                                      const std::vector<IndexKind>& indices,
                                      SweepConfig::Engine engine, const EstimatorConfig& est) {
  if (indices.empty()) throw std::invalid_argument("evaluate_point: no indices requested");
  return engine == SweepConfig::Engine::analytic
             ? analytic_point(model, alpha, rho, indices)
             : monte_carlo_point(model, alpha, rho, indices, est);
}

namespace {

/// Dispatch grid points to the worker pool (analytic engine only; Monte Carlo
/// points parallelize internally) and gather rows in grid order. Exceptions
/// are latched so they never escape a parallel region.
template <class Eval>
std::vector<ResultRow> gather_grid(std::size_t n_points, bool parallel_points, Exec exec,
                                   Eval&& eval) {
  std::vector<std::vector<ResultRow>> per_point(n_points);
  std::exception_ptr error;
  auto guarded = [&](std::size_t k) {
    try {
      per_point[k] = eval(k);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  };
  if (parallel_points) {
    for_each_index(n_points, exec, guarded);
  } else {
    for (std::size_t k = 0; k < n_points && !error; ++k) guarded(k);
  }
  if (error) std::rethrow_exception(error);
  std::vector<ResultRow> rows;
  for (auto& p : per_point) rows.insert(rows.end(), p.begin(), p.end());
  return rows;
}

}  // namespace

std::vector<ResultRow> run_alpha_sweep(const SweepConfig& cfg) {
  if (cfg.alphas.empty()) throw std::invalid_argument("run_alpha_sweep: empty alpha grid");
  const std::optional<double> rho = model_rho(cfg.model);
  return gather_grid(cfg.alphas.size(), cfg.engine == SweepConfig::Engine::analytic,
                     cfg.est.exec, [&](std::size_t k) {
                       return evaluate_point(cfg.model, cfg.alphas[k], rho, cfg.indices,
                                             cfg.engine, cfg.est);
                     });
}

std::vector<ResultRow> run_rho_sweep(const SweepConfig& cfg) {
  if (!cfg.rho_grid) throw std::invalid_argument("run_rho_sweep: missing rho grid");
  if (cfg.alphas.empty()) throw std::invalid_argument("run_rho_sweep: empty alpha list");
  if (!cfg.model.has_gaussian_inputs() || cfg.model.dim() != 2)
    throw std::invalid_argument("run_rho_sweep: model has no correlation parameter");
  const std::vector<double> rhos = cfg.rho_grid->points();
  for (double r : rhos)
    if (!(r >= -1.0 && r <= 1.0)) throw std::invalid_argument("run_rho_sweep: rho outside [-1,1]");
  if (cfg.engine == SweepConfig::Engine::monte_carlo)
    for (double r : rhos)
      if (std::abs(r) > 0.999)
        throw std::invalid_argument(
            "run_rho_sweep: |rho| too close to 1 for sampling; use the analytic engine");

  struct Point {
    double rho, alpha;
  };
  std::vector<Point> grid;
  for (double r : rhos)
    for (double a : cfg.alphas) grid.push_back({r, a});
  return gather_grid(grid.size(), cfg.engine == SweepConfig::Engine::analytic, cfg.est.exec,
                     [&](std::size_t k) {
                       ModelSpec m = cfg.model.with_correlation(grid[k].rho);
                       m.set_id(cfg.model.id());
                       return evaluate_point(m, grid[k].alpha, grid[k].rho, cfg.indices,
                                             cfg.engine, cfg.est);
                     });
}

// ---- serialization ----

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows, const MetaList& meta) {
  os << "# qosa-results v1\n";
  for (const auto& [k, v] : meta) os << "# " << k << "=" << v << "\n";
  os << "model,alpha,rho,input,index,value,std_error,n_samples,seed,engine\n";
  for (const auto& r : rows) {
    os << r.model_id << ',' << format_double(r.alpha) << ','
       << (r.rho ? format_double(*r.rho) : "") << ',' << r.input << ',' << r.index << ','
       << format_double(r.value) << ',' << (r.std_error ? format_double(*r.std_error) : "")
       << ',' << r.n_samples << ',' << r.seed << ',' << r.engine << '\n';
  }
}

std::vector<ResultRow> read_csv(std::istream& is) {
  std::vector<ResultRow> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != "model,alpha,rho,input,index,value,std_error,n_samples,seed,engine")
        throw std::runtime_error("read_csv: unexpected header: " + line);
      header_seen = true;
      continue;
    }
    std::vector<std::string> f;
    std::size_t pos = 0;
    while (true) {
      std::size_t next = line.find(',', pos);
      if (next == std::string::npos) {
        f.push_back(line.substr(pos));
        break;
      }
      f.push_back(line.substr(pos, next - pos));
      pos = next + 1;
    }
    if (f.size() != 10) throw std::runtime_error("read_csv: bad field count in: " + line);
    ResultRow r;
    r.model_id = f[0];
    r.alpha = std::stod(f[1]);
    r.rho = f[2].empty() ? std::nullopt : std::optional<double>(std::stod(f[2]));
    r.input = f[3];
    r.index = f[4];
    r.value = std::stod(f[5]);
    r.std_error = f[6].empty() ? std::nullopt : std::optional<double>(std::stod(f[6]));
    r.n_samples = static_cast<std::size_t>(std::stoull(f[7]));
    r.seed = static_cast<std::uint64_t>(std::stoull(f[8]));
    r.engine = f[9];
    rows.push_back(std::move(r));
  }
  if (!header_seen) throw std::runtime_error("read_csv: missing header");
  return rows;
}

void write_json(std::ostream& os, const std::vector<ResultRow>& rows, const MetaList& meta) {
  nlohmann::json j;
  j["schema"] = "qosa-results v1";
  for (const auto& [k, v] : meta) j["meta"][k] = v;
  nlohmann::json models = nlohmann::json::object();
  for (const auto& r : rows) {
    nlohmann::json entry;
    entry["alpha"] = r.alpha;
    if (r.rho) entry["rho"] = *r.rho;
    entry["input"] = r.input;
    entry["value"] = r.value;
    if (r.std_error) entry["std_error"] = *r.std_error;
    entry["n_samples"] = r.n_samples;
    entry["seed"] = r.seed;
    entry["engine"] = r.engine;
    models[r.model_id][r.index].push_back(entry);
  }
  j["results"] = models;
  os << j.dump(2) << "\n";
}

void write_gnuplot_columns(std::ostream& os, const std::vector<ResultRow>& rows) {
  std::set<double> rhos;
  for (const auto& r : rows)
    if (r.rho) rhos.insert(*r.rho);
  const bool x_is_rho = rhos.size() > 1;

  std::set<std::string> kinds;
  for (const auto& r : rows) kinds.insert(r.index);
  for (const auto& kind : kinds) {
    std::map<double, std::map<std::string, double>> by_x;
    std::set<std::string> inputs;
    for (const auto& r : rows) {
      if (r.index != kind) continue;
      double x = x_is_rho ? r.rho.value_or(0.0) : r.alpha;
      by_x[x][r.input] = r.value;
      inputs.insert(r.input);
    }
    os << "# index " << kind << "\n# " << (x_is_rho ? "rho" : "alpha");
    for (const auto& in : inputs) os << " input_" << in;
    os << "\n";
    for (const auto& [x, vals] : by_x) {
      os << format_double(x);
      for (const auto& in : inputs) {
        auto it = vals.find(in);
        os << ' ' << (it == vals.end() ? "nan" : format_double(it->second));
      }
      os << "\n";
    }
    os << "\n\n";
  }
}

}  // namespace qosa
