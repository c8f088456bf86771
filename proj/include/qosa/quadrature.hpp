#pragma once

#include <functional>

namespace qosa {

struct QuadratureResult {
  double value;
  double error_estimate;
  int evaluations;
  bool converged;
};

/// Adaptive Gauss-Kronrod (G7, K15) integration of f over the finite interval
/// [a, b] by bisection of the worst subinterval until the summed error
/// estimate meets max(abs_tol, rel_tol * |integral|).
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double abs_tol = 1e-12, double rel_tol = 1e-10,
                                    int max_intervals = 2000);

}  // namespace qosa
