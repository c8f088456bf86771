// Times the serial reference implementation of each data-parallel kernel
// against the OpenMP version and verifies that both produce identical bits.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>

#include "qosa/estimators.hpp"
#include "qosa/kernels.hpp"
#include "qosa/models.hpp"

using namespace qosa;
using clk = std::chrono::steady_clock;

namespace {

template <class F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = clk::now();
    f();
    best = std::min(best, std::chrono::duration<double>(clk::now() - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel, bool identical) {
  std::printf("%-34s serial %8.3f ms   parallel %8.3f ms   speedup %5.2fx   %s\n", name,
              serial * 1e3, parallel * 1e3, serial / parallel,
              identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t n = 400'000;
  for (int i = 1; i < argc; ++i) {
    if (std::strncmp(argv[i], "--n=", 4) == 0) n = std::stoul(argv[i] + 4);
    if (std::strncmp(argv[i], "--threads=", 10) == 0) omp_set_num_threads(std::atoi(argv[i] + 10));
  }
  std::printf("n = %zu, omp_get_max_threads() = %d\n\n", n, omp_get_max_threads());
  const RandomStream stream(1234);

  {
    auto model = ModelSpec::builtin("gaussian2d:rho=0.5");
    Eigen::MatrixXd xs, xp;
    double ts = time_best_of(3, [&] { xs = model.sample_inputs(n, stream, Exec::serial); });
    double tp = time_best_of(3, [&] { xp = model.sample_inputs(n, stream, Exec::parallel); });
    report("gaussian sampling", ts, tp, xs == xp);
  }
  {
    auto model = ModelSpec::builtin("lognormal2d:rho=0.5");
    EstimatorConfig serial;
    serial.n_pooled = n;
    serial.stream = stream;
    serial.exec = Exec::serial;
    EstimatorConfig parallel = serial;
    parallel.exec = Exec::parallel;
    QosaIndexEstimates rs, rp;
    double ts = time_best_of(2, [&] { rs = estimate_all_qosa(model, QuantileLevel(0.7), serial); });
    double tp = time_best_of(2, [&] { rp = estimate_all_qosa(model, QuantileLevel(0.7), parallel); });
    bool same = rs.first_order[0].value == rp.first_order[0].value &&
                rs.total[1].value == rp.total[1].value &&
                rs.qose.values[0] == rp.qose.values[0];
    report("index table, exact conditionals", ts, tp, same);

    EstimatorConfig ks = serial, kp = parallel;
    ks.method = kp.method = CondMethod::knn;
    double ts2 = time_best_of(2, [&] { rs = estimate_all_qosa(model, QuantileLevel(0.7), ks); });
    double tp2 = time_best_of(2, [&] { rp = estimate_all_qosa(model, QuantileLevel(0.7), kp); });
    bool same2 = rs.first_order[0].value == rp.first_order[0].value &&
                 rs.qose.values[0] == rp.qose.values[0];
    report("index table, knn conditionals", ts2, tp2, same2);
  }
  {
    std::vector<double> coord(n), y(n);
    RandomStream s(99);
    for (std::size_t i = 0; i < n; ++i) {
      coord[i] = s.normal_at(2 * i);
      y[i] = coord[i] + s.normal_at(2 * i + 1);
    }
    std::size_t k = EstimatorConfig{}.neighbors_for(n);
    std::vector<double> qs, qp;
    double ts = time_best_of(3, [&] {
      qs = knn_conditional_quantiles_1d(coord, y, k, 0.9, Exec::serial);
    });
    double tp = time_best_of(3, [&] {
      qp = knn_conditional_quantiles_1d(coord, y, k, 0.9, Exec::parallel);
    });
    report("knn window quantiles (1-d)", ts, tp, qs == qp);
  }
  {
    std::vector<double> costs(1u << 14, 0.0);
    RandomStream s(5);
    for (std::size_t m = 1; m < costs.size(); ++m) costs[m] = s.uniform_at(m);
    CostTable table(14, std::move(costs));
    ShapleyAttribution as, ap;
    double ts = time_best_of(3, [&] { as = shapley_exact(table, Exec::serial); });
    double tp = time_best_of(3, [&] { ap = shapley_exact(table, Exec::parallel); });
    report("exact Shapley aggregation d=14", ts, tp, as.values == ap.values);
  }
  return 0;
}
