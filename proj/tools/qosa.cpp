// Command-line runner: closed-form index evaluation, Monte Carlo estimation,
// alpha/rho sweeps and the self-validation suite.

#include <omp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "qosa/checks.hpp"
#include "qosa/estimators.hpp"
#include "qosa/models.hpp"
#include "qosa/sweep.hpp"

namespace {

using qosa::EstimatorConfig;
using qosa::IndexKind;
using qosa::ModelSpec;
using qosa::ResultRow;
using qosa::SweepConfig;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("QOSA_SEED")) {
    try {
      return std::stoull(env);
    } catch (...) {
      std::cerr << "warning: ignoring unparsable QOSA_SEED='" << env << "'\n";
    }
  }
  return 0;
}

// CLI flags override the JSON config file, which overrides built-in defaults.
struct Options {
  std::optional<std::string> model;
  std::optional<std::vector<double>> alphas;
  std::optional<std::string> alpha_grid;
  std::optional<std::string> rho_grid;
  std::optional<double> rho;
  std::optional<std::vector<std::string>> indices;
  std::optional<std::size_t> samples;
  std::optional<std::size_t> k_neighbors;
  std::optional<std::string> method;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<std::string> engine;
  bool gnuplot = false;
  std::string config_path;

  void merge_config() {
    if (config_path.empty()) return;
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config file: " + config_path);
    nlohmann::json j;
    in >> j;
    auto take = [&](const char* key, auto& slot) {
      using T = typename std::decay_t<decltype(slot)>::value_type;
      if (!slot && j.contains(key)) slot = j.at(key).get<T>();
    };
    take("model", model);
    if (!alphas && j.contains("alpha")) {
      if (j.at("alpha").is_array())
        alphas = j.at("alpha").get<std::vector<double>>();
      else
        alphas = std::vector<double>{j.at("alpha").get<double>()};
    }
    take("alpha_grid", alpha_grid);
    take("rho_grid", rho_grid);
    take("rho", rho);
    take("indices", indices);
    take("samples", samples);
    take("k_neighbors", k_neighbors);
    take("method", method);
    take("seed", seed);
    take("threads", threads);
    take("out", out);
    take("format", format);
    take("engine", engine);
  }
};

ModelSpec load_model(const Options& o) {
  std::string name = o.model.value_or("gaussian2d");
  ModelSpec m = [&] {
    if (std::filesystem::exists(name)) {
      std::ifstream in(name);
      nlohmann::json j;
      in >> j;
      ModelSpec parsed = ModelSpec::from_json(j);
      if (!j.contains("id")) parsed.set_id(std::filesystem::path(name).stem().string());
      return parsed;
    }
    return ModelSpec::builtin(name);
  }();
  if (o.rho) m = m.with_correlation(*o.rho);
  return m;
}

std::vector<IndexKind> parse_indices(const Options& o) {
  std::vector<std::string> names =
      o.indices.value_or(std::vector<std::string>{"qosa_first", "qosa_total", "qose"});
  std::vector<IndexKind> kinds;
  for (const auto& n : names) {
    auto k = qosa::index_kind_from_string(n);
    if (!k) throw std::runtime_error("unknown index kind: " + n);
    kinds.push_back(*k);
  }
  return kinds;
}

EstimatorConfig estimator_config(const Options& o) {
  EstimatorConfig est;
  est.n_pooled = o.samples.value_or(100'000);
  est.k_neighbors = o.k_neighbors.value_or(0);
  est.stream = qosa::RandomStream(o.seed.value_or(default_seed()));
  std::string method = o.method.value_or("auto");
  if (method == "exact")
    est.method = qosa::CondMethod::exact;
  else if (method == "knn")
    est.method = qosa::CondMethod::knn;
  else if (method == "auto")
    est.method = qosa::CondMethod::auto_select;
  else
    throw std::runtime_error("unknown method: " + method + " (auto|exact|knn)");
  return est;
}

std::vector<double> alphas_for_point_command(const Options& o) {
  if (o.alpha_grid) return qosa::GridSpec::parse(*o.alpha_grid).points();
  return o.alphas.value_or(std::vector<double>{0.5});
}

qosa::MetaList effective_meta(const std::string& command, const Options& o, const ModelSpec& m,
                              const EstimatorConfig& est, const std::string& engine,
                              const std::vector<double>& alphas_used) {
  qosa::MetaList meta;
  meta.emplace_back("command", command);
  meta.emplace_back("model", m.id());
  meta.emplace_back("engine", engine);
  std::ostringstream alphas;
  for (double a : alphas_used) alphas << a << " ";
  meta.emplace_back("alpha", alphas.str());
  if (o.rho_grid) meta.emplace_back("rho_grid", *o.rho_grid);
  meta.emplace_back("samples", std::to_string(est.n_pooled));
  meta.emplace_back("k_neighbors", std::to_string(est.k_neighbors));
  meta.emplace_back("seed", std::to_string(est.stream.seed()));
  meta.emplace_back("threads", std::to_string(omp_get_max_threads()));
  return meta;
}

void emit(const std::vector<ResultRow>& rows, const Options& o, const qosa::MetaList& meta) {
  const std::string format = o.format.value_or("csv");
  auto write_to = [&](std::ostream& os) {
    if (format == "json")
      qosa::write_json(os, rows, meta);
    else if (format == "csv")
      qosa::write_csv(os, rows, meta);
    else
      throw std::runtime_error("unknown format: " + format + " (csv|json)");
  };
  if (o.out && !o.out->empty()) {
    std::ofstream out(*o.out);
    if (!out) throw std::runtime_error("cannot open output file: " + *o.out);
    write_to(out);
    if (o.gnuplot) {
      std::ofstream cols(*o.out + ".columns");
      qosa::write_gnuplot_columns(cols, rows);
    }
  } else {
    write_to(std::cout);
    if (o.gnuplot) qosa::write_gnuplot_columns(std::cout, rows);
  }
}

void add_common_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--model", o.model, "builtin id (gaussian2d[:rho=r], lognormal2d[:rho=r], "
                                      "expo-product, laplace) or a JSON model file");
  cmd->add_option("--alpha", o.alphas, "quantile level(s)")->delimiter(',');
  cmd->add_option("--alpha-grid", o.alpha_grid, "quantile grid start:stop:step");
  cmd->add_option("--rho-grid", o.rho_grid, "correlation grid start:stop:step");
  cmd->add_option("--rho", o.rho, "override the input correlation (2-d Gaussian models)");
  cmd->add_option("--indices", o.indices,
                  "any of qosa_first,qosa_total,qosa_group,qose,kucherenko,sobol,variance_shapley")
      ->delimiter(',');
  cmd->add_option("--samples", o.samples, "pooled Monte Carlo sample size");
  cmd->add_option("--k-neighbors", o.k_neighbors, "neighborhood size (0 = ceil(n^(2/3)))");
  cmd->add_option("--method", o.method, "conditional-quantile path: auto|exact|knn");
  cmd->add_option("--seed", o.seed, "random seed (default: QOSA_SEED env var, else 0)");
  cmd->add_option("--threads", o.threads, "OpenMP thread count (0 = runtime default)");
  cmd->add_option("--out", o.out, "output path (default: stdout)");
  cmd->add_option("--format", o.format, "csv|json");
  cmd->add_option("--config", o.config_path, "JSON config file (flags take precedence)");
  cmd->add_flag("--gnuplot", o.gnuplot, "also emit gnuplot-ready column files");
}

int run_point_command(const std::string& name, const Options& o, SweepConfig::Engine engine) {
  ModelSpec model = load_model(o);
  EstimatorConfig est = estimator_config(o);
  std::vector<IndexKind> kinds = parse_indices(o);
  std::optional<double> rho;
  if (model.has_gaussian_inputs() && model.dim() == 2) rho = model.correlation();
  std::vector<ResultRow> rows;
  const std::vector<double> alphas = alphas_for_point_command(o);
  for (double a : alphas) {
    auto point = qosa::evaluate_point(model, a, rho, kinds, engine, est);
    rows.insert(rows.end(), point.begin(), point.end());
  }
  emit(rows, o, effective_meta(name, o, model, est,
                               engine == SweepConfig::Engine::analytic ? "analytic" : "monte_carlo",
                               alphas));
  return 0;
}

int run_sweep_command(const std::string& name, const Options& o, bool over_rho) {
  SweepConfig cfg{.model = load_model(o),
                  .alphas = {},
                  .rho_grid = std::nullopt,
                  .indices = parse_indices(o),
                  .engine = SweepConfig::Engine::analytic,
                  .est = estimator_config(o),
                  .out_path = o.out.value_or(""),
                  .format = SweepConfig::Format::csv,
                  .gnuplot_columns = o.gnuplot};
  std::string engine = o.engine.value_or("analytic");
  if (engine == "monte_carlo" || engine == "mc")
    cfg.engine = SweepConfig::Engine::monte_carlo;
  else if (engine != "analytic")
    throw std::runtime_error("unknown engine: " + engine + " (analytic|monte_carlo)");

  std::vector<ResultRow> rows;
  if (over_rho) {
    if (!o.rho_grid) throw std::runtime_error(name + ": --rho-grid is required");
    cfg.rho_grid = qosa::GridSpec::parse(*o.rho_grid);
    cfg.alphas = o.alphas.value_or(std::vector<double>{0.1, 0.5, 0.9});
    if (o.alpha_grid) cfg.alphas = qosa::GridSpec::parse(*o.alpha_grid).points();
    rows = qosa::run_rho_sweep(cfg);
  } else {
    if (!o.alpha_grid && !o.alphas) throw std::runtime_error(name + ": --alpha-grid is required");
    cfg.alphas = alphas_for_point_command(o);
    rows = qosa::run_alpha_sweep(cfg);
  }
  emit(rows, o, effective_meta(name, o, cfg.model, cfg.est,
                               cfg.engine == SweepConfig::Engine::analytic ? "analytic"
                                                                           : "monte_carlo",
                               cfg.alphas));
  return 0;
}

int run_validate(const Options& o, const std::string& suite_name,
                 const std::string& artifact_dir) {
  qosa::checks::Context ctx;
  ctx.seed = o.seed.value_or(default_seed());
  ctx.artifact_dir = artifact_dir;
  qosa::checks::Suite suite = qosa::checks::Suite::fast;
  if (suite_name == "full")
    suite = qosa::checks::Suite::full;
  else if (suite_name != "fast")
    throw std::runtime_error("unknown suite: " + suite_name + " (fast|full)");

  auto results = qosa::checks::run_validation(suite, ctx);
  std::ostringstream report;
  report << "check,measured,tolerance,verdict,seconds,detail\n";
  int failures = 0;
  for (const auto& r : results) {
    if (!r.pass) ++failures;
    char line[512];
    std::snprintf(line, sizeof(line), "%s,%.6g,%.6g,%s,%.3f,\"%s\"\n", r.name.c_str(),
                  r.measured, r.tolerance, r.pass ? "PASS" : "FAIL", r.seconds,
                  r.detail.c_str());
    report << line;
  }
  report << "summary," << (results.size() - static_cast<std::size_t>(failures)) << "/"
         << results.size() << ",," << (failures == 0 ? "PASS" : "FAIL") << ",,\"suite "
         << suite_name << " seed " << ctx.seed << "\"\n";
  if (o.out && !o.out->empty()) {
    std::ofstream out(*o.out);
    out << report.str();
    std::cout << (failures == 0 ? "PASS" : "FAIL") << " (" << results.size() - failures << "/"
              << results.size() << " checks), report written to " << *o.out << "\n";
  } else {
    std::cout << report.str();
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantile-oriented sensitivity indices and Shapley effects"};
  app.require_subcommand(1);

  Options analytic_opts, estimate_opts, alpha_opts, rho_opts, validate_opts;
  std::string suite = "fast";
  std::string artifact_dir;

  CLI::App* analytic = app.add_subcommand("analytic", "closed-form indices for a model");
  add_common_flags(analytic, analytic_opts);
  CLI::App* estimate = app.add_subcommand("estimate", "Monte Carlo index estimates");
  add_common_flags(estimate, estimate_opts);
  CLI::App* sweep_alpha = app.add_subcommand("sweep-alpha", "indices over a quantile grid");
  add_common_flags(sweep_alpha, alpha_opts);
  sweep_alpha->add_option("--engine", alpha_opts.engine, "analytic|monte_carlo");
  CLI::App* sweep_rho = app.add_subcommand("sweep-rho", "indices over a correlation grid");
  add_common_flags(sweep_rho, rho_opts);
  sweep_rho->add_option("--engine", rho_opts.engine, "analytic|monte_carlo");
  CLI::App* validate = app.add_subcommand("validate", "run the property/validation suite");
  add_common_flags(validate, validate_opts);
  validate->add_option("--suite", suite, "fast|full");
  validate->add_option("--artifacts", artifact_dir,
                       "directory for reproduction data files (full suite)");

  CLI11_PARSE(app, argc, argv);

  try {
    Options* opts = analytic->parsed() ? &analytic_opts
                    : estimate->parsed() ? &estimate_opts
                    : sweep_alpha->parsed() ? &alpha_opts
                    : sweep_rho->parsed() ? &rho_opts
                                          : &validate_opts;
    opts->merge_config();
    if (opts->threads && *opts->threads > 0) omp_set_num_threads(*opts->threads);

    if (analytic->parsed())
      return run_point_command("analytic", analytic_opts, SweepConfig::Engine::analytic);
    if (estimate->parsed())
      return run_point_command("estimate", estimate_opts, SweepConfig::Engine::monte_carlo);
    if (sweep_alpha->parsed()) return run_sweep_command("sweep-alpha", alpha_opts, false);
    if (sweep_rho->parsed()) return run_sweep_command("sweep-rho", rho_opts, true);
    if (validate->parsed()) return run_validate(validate_opts, suite, artifact_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
