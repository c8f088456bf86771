#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qosa {

/// Execution policy for the data-parallel kernels. Every kernel produces
/// bit-identical output under both policies and any OpenMP thread count:
/// parallel regions only fill disjoint slots of preallocated buffers, and all
/// floating-point reductions happen serially in index order afterwards.
enum class Exec { serial, parallel };

/// Run f(i) for i in [0, n). f must be pure (writes only to slot i of some
/// output buffer).
template <class F>
void for_each_index(std::size_t n, Exec exec, F&& f);

/// Run f(c) for chunk index c in [0, n_chunks). Chunking is fixed by the
/// caller, not by the thread count, so per-chunk partial results are stable.
template <class F>
void for_each_chunk(std::size_t n_chunks, Exec exec, F&& f);

/// Sum in ascending index order (the deterministic reduction step).
double sum_ordered(std::span<const double> v);

/// k-nearest-neighbour conditional quantiles for a scalar conditioning
/// coordinate. For every row r, the neighbourhood is the k sample points
/// closest to coord[r] (a contiguous window in coord-sorted order, ties
/// toward the left), and the result is the type-1 empirical alpha-quantile of
/// the corresponding y values. Runs one Fenwick-tree sweep per chunk.
std::vector<double> knn_conditional_quantiles_1d(std::span<const double> coord,
                                                 std::span<const double> y, std::size_t k,
                                                 double alpha, Exec exec);

/// Same, but the window statistic is the mean instead of a quantile.
std::vector<double> knn_conditional_means_1d(std::span<const double> coord,
                                             std::span<const double> y, std::size_t k,
                                             Exec exec);

/// Brute-force k-nearest-neighbour conditional quantile in several
/// conditioning coordinates (standardized Euclidean distance), evaluated only
/// at the requested query rows. coords is column-major: one contiguous
/// standardized column per conditioning coordinate, each of length n.
std::vector<double> knn_conditional_quantiles_nd(
    std::span<const double> coords, std::size_t n, std::size_t n_coords,
    std::span<const double> y, std::span<const std::size_t> query_rows, std::size_t k,
    double alpha, Exec exec);

std::vector<double> knn_conditional_means_nd(std::span<const double> coords, std::size_t n,
                                             std::size_t n_coords, std::span<const double> y,
                                             std::span<const std::size_t> query_rows,
                                             std::size_t k, Exec exec);

// ---- implementation of the templates ----

template <class F>
void for_each_index(std::size_t n, Exec exec, F&& f) {
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) f(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) f(i);
  }
}

template <class F>
void for_each_chunk(std::size_t n_chunks, Exec exec, F&& f) {
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long long c = 0; c < static_cast<long long>(n_chunks); ++c)
      f(static_cast<std::size_t>(c));
  } else {
    for (std::size_t c = 0; c < n_chunks; ++c) f(c);
  }
}

}  // namespace qosa
