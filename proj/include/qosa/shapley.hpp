#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qosa/coalition.hpp"
#include "qosa/kernels.hpp"
#include "qosa/rng.hpp"

namespace qosa {

/// Cost of every coalition of a d-player game, indexed by bit mask.
/// cost(empty) must be exactly 0 and all entries finite.
class CostTable {
 public:
  CostTable(int dim, std::vector<double> costs);

  int dim() const { return dim_; }
  double cost(std::uint64_t mask) const { return costs_[mask]; }
  double cost(const Coalition& c) const { return costs_[c.mask()]; }
  double grand_cost() const { return costs_.back(); }
  const std::vector<double>& costs() const { return costs_; }

  CostTable operator+(const CostTable& other) const;

 private:
  int dim_;
  std::vector<double> costs_;
};

struct ShapleyAttribution {
  enum class Method { exact, permutation };
  std::vector<double> values;      // one per player
  std::vector<double> std_errors;  // empty for the exact method
  Method method = Method::exact;
  std::size_t permutations = 0;
};

/// Exact Shapley values: weighted marginal contributions over all 2^d
/// coalitions. Requires d <= 25.
ShapleyAttribution shapley_exact(const CostTable& table, Exec exec = Exec::parallel);

/// Permutation-sampling estimate against a cost oracle. Permutations are
/// drawn in antithetic pairs (each sampled order together with its reverse);
/// std errors come from the per-pair averages. Efficiency holds exactly for
/// any m because marginal contributions telescope along each permutation.
ShapleyAttribution shapley_permutation(int dim,
                                       const std::function<double(const Coalition&)>& cost,
                                       std::size_t m, const RandomStream& stream,
                                       Exec exec = Exec::parallel);

ShapleyAttribution shapley_permutation(const CostTable& table, std::size_t m,
                                       const RandomStream& stream, Exec exec = Exec::parallel);

}  // namespace qosa
