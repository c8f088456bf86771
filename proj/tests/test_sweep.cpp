#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "qosa/sweep.hpp"

using namespace qosa;

TEST_CASE("grid parsing") {
  auto g = GridSpec::parse("0.1:0.9:0.2");
  auto p = g.points();
  REQUIRE(p.size() == 5);
  CHECK(p.front() == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(p.back() == 0.9);  // endpoint is exact, no drift
  auto r = GridSpec::parse("-1:1:0.05").points();
  CHECK(r.front() == -1.0);
  CHECK(r.back() == 1.0);
  CHECK(r.size() == 41);
  CHECK_THROWS_AS(GridSpec::parse("1:0:0.1"), std::invalid_argument);
  CHECK_THROWS_AS(GridSpec::parse("0:1:0"), std::invalid_argument);
  CHECK_THROWS_AS(GridSpec::parse("nonsense"), std::invalid_argument);
}

TEST_CASE("index kind names round trip") {
  for (IndexKind k : {IndexKind::qosa_first, IndexKind::qosa_total, IndexKind::qosa_group,
                      IndexKind::qose, IndexKind::kucherenko, IndexKind::sobol,
                      IndexKind::variance_shapley})
    CHECK(index_kind_from_string(to_string(k)) == k);
  CHECK(!index_kind_from_string("bogus").has_value());
}

TEST_CASE("csv round trip preserves every row exactly") {
  std::vector<ResultRow> rows = {
      {"gaussian2d", 0.5, 0.75, "1", "qosa_first", 1.0 / 3.0, 0.0012345678901234567, 1000000,
       42, "mc-exact"},
      {"m", 0.1, std::nullopt, "1+2", "qosa_group", -1.2345678901234567e-17, std::nullopt, 0, 0,
       "analytic"},
      {"laplace", 0.9999, -1.0, "2", "kucherenko_abs", 6.02e23, 1e-300, 17, 123456789,
       "mc-knn"}};
  std::stringstream ss;
  write_csv(ss, rows, {{"command", "test"}, {"seed", "42"}});
  std::string text = ss.str();
  CHECK(text.find("# qosa-results v1") == 0);
  CHECK(text.find("# command=test") != std::string::npos);
  CHECK(text.find("model,alpha,rho,input,index,value,std_error,n_samples,seed,engine") !=
        std::string::npos);
  std::stringstream in(text);
  auto back = read_csv(in);
  CHECK(back == rows);
  std::stringstream junk("model,wrong\n");
  CHECK_THROWS(read_csv(junk));
}

TEST_CASE("json output nests by model and index") {
  std::vector<ResultRow> rows = {
      {"gaussian2d", 0.5, 0.0, "1", "qosa_first", 0.1, std::nullopt, 0, 0, "analytic"},
      {"gaussian2d", 0.5, 0.0, "2", "qosa_first", 0.5, std::nullopt, 0, 0, "analytic"},
      {"gaussian2d", 0.5, 0.0, "1", "qose", 0.3, std::nullopt, 0, 0, "analytic"}};
  std::stringstream ss;
  write_json(ss, rows, {{"command", "test"}});
  auto j = nlohmann::json::parse(ss.str());
  CHECK(j.at("results").at("gaussian2d").at("qosa_first").size() == 2);
  CHECK(j.at("results").at("gaussian2d").at("qose").at(0).at("value") == 0.3);
  CHECK(j.at("meta").at("command") == "test");
}

TEST_CASE("analytic alpha sweep emits one row per point, input and kind") {
  SweepConfig cfg{.model = ModelSpec::builtin("lognormal2d:rho=0.75"),
                  .alphas = {0.2, 0.5, 0.8},
                  .rho_grid = std::nullopt,
                  .indices = {IndexKind::qosa_first, IndexKind::qosa_total, IndexKind::qose},
                  .engine = SweepConfig::Engine::analytic,
                  .est = {},
                  .out_path = "",
                  .format = SweepConfig::Format::csv,
                  .gnuplot_columns = false};
  auto rows = run_alpha_sweep(cfg);
  CHECK(rows.size() == 3 * 2 * 3);
  CHECK(rows[0].alpha == 0.2);  // grid order is preserved
  CHECK(rows[0].rho == 0.75);
  for (const auto& r : rows) {
    CHECK(!r.std_error.has_value());
    CHECK(r.engine == "analytic");
  }
}

TEST_CASE("group rows carry coalition labels") {
  SweepConfig cfg{.model = ModelSpec::builtin("gaussian2d"),
                  .alphas = {0.5},
                  .rho_grid = std::nullopt,
                  .indices = {IndexKind::qosa_group},
                  .engine = SweepConfig::Engine::analytic,
                  .est = {},
                  .out_path = "",
                  .format = SweepConfig::Format::csv,
                  .gnuplot_columns = false};
  auto rows = run_alpha_sweep(cfg);
  REQUIRE(rows.size() == 2);  // the group index and the pair interaction
  CHECK(rows[0].input == "1+2");
  CHECK(rows[0].index == "qosa_group");
  CHECK(rows[0].value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rows[1].index == "qosa_second");
}

TEST_CASE("rho sweep validates its inputs") {
  SweepConfig cfg{.model = ModelSpec::builtin("gaussian2d"),
                  .alphas = {0.5},
                  .rho_grid = GridSpec{-1.0, 1.0, 0.5},
                  .indices = {IndexKind::qosa_first},
                  .engine = SweepConfig::Engine::analytic,
                  .est = {},
                  .out_path = "",
                  .format = SweepConfig::Format::csv,
                  .gnuplot_columns = false};
  auto rows = run_rho_sweep(cfg);
  CHECK(rows.size() == 5 * 2);
  CHECK(rows.front().rho == -1.0);
  CHECK(rows.front().value == doctest::Approx(1.0).epsilon(1e-12));  // degenerate limit

  SweepConfig bad = cfg;
  bad.model = ModelSpec::builtin("laplace");
  CHECK_THROWS_AS(run_rho_sweep(bad), std::invalid_argument);
  SweepConfig mc = cfg;
  mc.engine = SweepConfig::Engine::monte_carlo;
  CHECK_THROWS_AS(run_rho_sweep(mc), std::invalid_argument);  // grid touches |rho| = 1
  SweepConfig none = cfg;
  none.rho_grid = std::nullopt;
  CHECK_THROWS_AS(run_rho_sweep(none), std::invalid_argument);
}

TEST_CASE("analytic engine refuses index kinds without closed forms") {
  SweepConfig cfg{.model = ModelSpec::builtin("laplace"),
                  .alphas = {0.5},
                  .rho_grid = std::nullopt,
                  .indices = {IndexKind::qosa_first},
                  .engine = SweepConfig::Engine::analytic,
                  .est = {},
                  .out_path = "",
                  .format = SweepConfig::Format::csv,
                  .gnuplot_columns = false};
  CHECK_THROWS_AS(run_alpha_sweep(cfg), std::invalid_argument);
  cfg.indices = {IndexKind::kucherenko};
  auto rows = run_alpha_sweep(cfg);
  CHECK(rows.size() == 8);  // abs/sq, raw and normalized, two inputs
}

TEST_CASE("monte carlo sweep rows carry estimator metadata") {
  SweepConfig cfg{.model = ModelSpec::builtin("gaussian2d"),
                  .alphas = {0.5},
                  .rho_grid = std::nullopt,
                  .indices = {IndexKind::qosa_first, IndexKind::sobol},
                  .engine = SweepConfig::Engine::monte_carlo,
                  .est = {},
                  .out_path = "",
                  .format = SweepConfig::Format::csv,
                  .gnuplot_columns = false};
  cfg.est.n_pooled = 5'000;
  cfg.est.stream = RandomStream(7);
  auto rows = run_alpha_sweep(cfg);
  for (const auto& r : rows) {
    CHECK(r.std_error.has_value());
    CHECK(r.seed == 7);
    CHECK(r.engine == "mc-exact");
    CHECK(r.n_samples == 5'000);
  }
}

TEST_CASE("gnuplot column rendering") {
  std::vector<ResultRow> rows = {
      {"m", 0.2, std::nullopt, "1", "qosa_first", 0.1, std::nullopt, 0, 0, "analytic"},
      {"m", 0.2, std::nullopt, "2", "qosa_first", 0.4, std::nullopt, 0, 0, "analytic"},
      {"m", 0.8, std::nullopt, "1", "qosa_first", 0.2, std::nullopt, 0, 0, "analytic"},
      {"m", 0.8, std::nullopt, "2", "qosa_first", 0.5, std::nullopt, 0, 0, "analytic"}};
  std::stringstream ss;
  write_gnuplot_columns(ss, rows);
  std::string text = ss.str();
  CHECK(text.find("# index qosa_first") != std::string::npos);
  CHECK(text.find("# alpha input_1 input_2") != std::string::npos);
  CHECK(text.find("0.2 0.1") == text.find("0.2 0.1"));
}
