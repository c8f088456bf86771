#include "qosa/shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qosa {

CostTable::CostTable(int dim, std::vector<double> costs) : dim_(dim), costs_(std::move(costs)) {
  if (dim < 1 || dim > 25) throw std::invalid_argument("CostTable: dimension must be in [1, 25]");
  if (costs_.size() != (std::size_t{1} << dim))
    throw std::invalid_argument("CostTable: need one cost per coalition");
  if (costs_[0] != 0.0) throw std::invalid_argument("CostTable: empty coalition must cost 0");
  for (double c : costs_)
    if (!std::isfinite(c)) throw std::invalid_argument("CostTable: costs must be finite");
}

CostTable CostTable::operator+(const CostTable& other) const {
  if (other.dim_ != dim_) throw std::invalid_argument("CostTable: dimension mismatch");
  std::vector<double> sum(costs_.size());
  for (std::size_t m = 0; m < costs_.size(); ++m) sum[m] = costs_[m] + other.costs_[m];
  return CostTable(dim_, std::move(sum));
}

namespace {

// w[k] = k! (d-1-k)! / d! = 1 / (d * binom(d-1, k))
std::vector<double> shapley_weights(int d) {
  std::vector<double> w(static_cast<std::size_t>(d));
  double binom = 1.0;
  for (int k = 0; k < d; ++k) {
    if (k > 0) binom = binom * static_cast<double>(d - k) / static_cast<double>(k);
    w[static_cast<std::size_t>(k)] = 1.0 / (static_cast<double>(d) * binom);
  }
  return w;
}

}  // namespace

ShapleyAttribution shapley_exact(const CostTable& table, Exec exec) {
  const int d = table.dim();
  const std::uint64_t n_masks = 1ull << d;
  const std::vector<double> w = shapley_weights(d);

  // fixed chunking keeps the reduction order independent of the thread count
  const std::size_t n_chunks = static_cast<std::size_t>(std::min<std::uint64_t>(n_masks, 1024));
  const std::uint64_t chunk_len = (n_masks + n_chunks - 1) / n_chunks;
  std::vector<double> partial(n_chunks * static_cast<std::size_t>(d), 0.0);

  for_each_chunk(n_chunks, exec, [&](std::size_t chunk) {
    double* acc = partial.data() + chunk * static_cast<std::size_t>(d);
    const std::uint64_t m0 = chunk * chunk_len;
    const std::uint64_t m1 = std::min<std::uint64_t>(n_masks, m0 + chunk_len);
    for (std::uint64_t mask = m0; mask < m1; ++mask) {
      const double base = table.cost(mask);
      const double weight = w[static_cast<std::size_t>(std::popcount(mask))];
      for (int i = 0; i < d; ++i) {
        if (mask & (1ull << i)) continue;
        acc[i] += weight * (table.cost(mask | (1ull << i)) - base);
      }
    }
  });

  ShapleyAttribution out;
  out.method = ShapleyAttribution::Method::exact;
  out.values.assign(static_cast<std::size_t>(d), 0.0);
  for (std::size_t chunk = 0; chunk < n_chunks; ++chunk)
    for (int i = 0; i < d; ++i)
      out.values[static_cast<std::size_t>(i)] += partial[chunk * static_cast<std::size_t>(d) +
                                                         static_cast<std::size_t>(i)];
  return out;
}

ShapleyAttribution shapley_permutation(int dim,
                                       const std::function<double(const Coalition&)>& cost,
                                       std::size_t m, const RandomStream& stream, Exec exec) {
  if (dim < 1 || dim > 63) throw std::invalid_argument("shapley_permutation: bad dimension");
  if (m < 1) throw std::invalid_argument("shapley_permutation: need at least one permutation");
  const std::size_t n_pairs = (m + 1) / 2;
  const std::size_t d = static_cast<std::size_t>(dim);

  // one row of per-player pair averages per antithetic pair
  std::vector<double> pair_values(n_pairs * d);
  for_each_index(n_pairs, exec, [&](std::size_t p) {
    std::vector<int> perm(d);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t j = d - 1; j > 0; --j) {
      std::uint64_t r = stream.uniform_int_at(static_cast<std::uint64_t>(p) * d + j, j + 1);
      std::swap(perm[j], perm[static_cast<std::size_t>(r)]);
    }
    double* row = pair_values.data() + p * d;
    std::fill(row, row + d, 0.0);
    for (int pass = 0; pass < 2; ++pass) {
      Coalition prefix = Coalition::empty_set(dim);
      double prev = 0.0;  // cost(empty) = 0 by contract
      for (std::size_t j = 0; j < d; ++j) {
        int player = pass == 0 ? perm[j] : perm[d - 1 - j];
        prefix = prefix.with(player);
        double c = cost(prefix);
        row[static_cast<std::size_t>(player)] += 0.5 * (c - prev);
        prev = c;
      }
    }
  });

  ShapleyAttribution out;
  out.method = ShapleyAttribution::Method::permutation;
  out.permutations = 2 * n_pairs;
  out.values.assign(d, 0.0);
  out.std_errors.assign(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    double mean = 0.0;
    for (std::size_t p = 0; p < n_pairs; ++p) mean += pair_values[p * d + i];
    mean /= static_cast<double>(n_pairs);
    out.values[i] = mean;
    if (n_pairs > 1) {
      double ss = 0.0;
      for (std::size_t p = 0; p < n_pairs; ++p) {
        double dev = pair_values[p * d + i] - mean;
        ss += dev * dev;
      }
      out.std_errors[i] = std::sqrt(ss / static_cast<double>(n_pairs - 1) /
                                    static_cast<double>(n_pairs));
    }
  }
  return out;
}

ShapleyAttribution shapley_permutation(const CostTable& table, std::size_t m,
                                       const RandomStream& stream, Exec exec) {
  return shapley_permutation(
      table.dim(), [&](const Coalition& c) { return table.cost(c); }, m, stream, exec);
}

}  // namespace qosa
