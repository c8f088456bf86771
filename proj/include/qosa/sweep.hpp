#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qosa/estimators.hpp"
#include "qosa/models.hpp"

namespace qosa {

enum class IndexKind {
  qosa_first,
  qosa_total,
  qosa_group,
  qose,
  kucherenko,
  sobol,
  variance_shapley
};

std::string to_string(IndexKind kind);
std::optional<IndexKind> index_kind_from_string(const std::string& name);

/// Inclusive numeric grid "start:stop:step".
struct GridSpec {
  double start, stop, step;
  static GridSpec parse(const std::string& text);
  std::vector<double> points() const;
};

struct ResultRow {
  std::string model_id;
  double alpha;
  std::optional<double> rho;
  std::string input;  // 1-based input index or coalition label like "1+2"
  std::string index;
  double value;
  std::optional<double> std_error;  // empty for analytic values
  std::size_t n_samples;
  std::uint64_t seed;
  std::string engine;  // analytic | mc-exact | mc-knn

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct SweepConfig {
  enum class Engine { analytic, monte_carlo };
  enum class Format { csv, json };

  ModelSpec model;
  std::vector<double> alphas;
  std::optional<GridSpec> rho_grid;
  std::vector<IndexKind> indices;
  Engine engine = Engine::analytic;
  EstimatorConfig est;
  std::string out_path;  // empty -> stdout
  Format format = Format::csv;
  bool gnuplot_columns = false;
};

/// Rows for a single (model, alpha) evaluation; rho is a reporting hint.
std::vector<ResultRow> evaluate_point(const ModelSpec& model, double alpha,
                                      std::optional<double> rho,
                                      const std::vector<IndexKind>& indices,
                                      SweepConfig::Engine engine, const EstimatorConfig& est);

std::vector<ResultRow> run_alpha_sweep(const SweepConfig& cfg);
std::vector<ResultRow> run_rho_sweep(const SweepConfig& cfg);

using MetaList = std::vector<std::pair<std::string, std::string>>;

/// CSV with '#'-prefixed metadata lines, a header row, '.' decimals and 17
/// significant digits; read_csv round-trips rows exactly.
void write_csv(std::ostream& os, const std::vector<ResultRow>& rows, const MetaList& meta);
std::vector<ResultRow> read_csv(std::istream& is);

void write_json(std::ostream& os, const std::vector<ResultRow>& rows, const MetaList& meta);

/// One whitespace-separated column block per index kind (x column = rho when
/// the rows sweep rho, alpha otherwise), for direct gnuplot consumption.
void write_gnuplot_columns(std::ostream& os, const std::vector<ResultRow>& rows);

}  // namespace qosa
