#include "qosa/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qosa/contrast.hpp"

namespace qosa {

double sum_ordered(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc;
}

namespace {

// Fenwick tree over value ranks, supporting k-th smallest queries.
class RankTree {
 public:
  explicit RankTree(std::size_t n) : n_(n), tree_(n + 1, 0) {
    log_ = 0;
    while ((1u << (log_ + 1)) <= n_) ++log_;
  }
  void add(std::size_t rank, int delta) {
    for (std::size_t i = rank + 1; i <= n_; i += i & (~i + 1)) tree_[i] += delta;
  }
  // 0-based rank of the k-th smallest present element (k is 1-based).
  std::size_t kth(std::size_t k) const {
    std::size_t pos = 0;
    for (std::size_t step = 1ull << log_; step > 0; step >>= 1) {
      if (pos + step <= n_ && static_cast<std::size_t>(tree_[pos + step]) < k) {
        pos += step;
        k -= static_cast<std::size_t>(tree_[pos]);
      }
    }
    return pos;  // pos elements are strictly smaller
  }

 private:
  std::size_t n_;
  unsigned log_;
  std::vector<int> tree_;
};

struct SortedView {
  std::vector<std::size_t> order;     // sorted position -> original row
  std::vector<double> coord_sorted;   // coordinate in sorted order
  std::vector<std::size_t> rank;      // sorted position -> rank of its y value
  std::vector<double> y_of_rank;      // rank -> y value
};

SortedView build_sorted_view(std::span<const double> coord, std::span<const double> y) {
  const std::size_t n = coord.size();
  SortedView v;
  v.order.resize(n);
  std::iota(v.order.begin(), v.order.end(), std::size_t{0});
  std::sort(v.order.begin(), v.order.end(), [&](std::size_t a, std::size_t b) {
    if (coord[a] != coord[b]) return coord[a] < coord[b];
    return a < b;
  });
  v.coord_sorted.resize(n);
  for (std::size_t p = 0; p < n; ++p) v.coord_sorted[p] = coord[v.order[p]];

  // rank y values by (value, sorted position) so ranks are unique
  std::vector<std::size_t> by_y(n);
  std::iota(by_y.begin(), by_y.end(), std::size_t{0});
  std::sort(by_y.begin(), by_y.end(), [&](std::size_t a, std::size_t b) {
    double ya = y[v.order[a]], yb = y[v.order[b]];
    if (ya != yb) return ya < yb;
    return a < b;
  });
  v.rank.resize(n);
  v.y_of_rank.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    v.rank[by_y[r]] = r;
    v.y_of_rank[r] = y[v.order[by_y[r]]];
  }
  return v;
}

// Window start for query position p given the previous start. The k nearest
// coordinates form a contiguous window; the start index is nondecreasing in
// p, so one forward scan covers a whole chunk of queries.
inline std::size_t advance_window(const std::vector<double>& c, std::size_t n, std::size_t k,
                                  std::size_t p, std::size_t left) {
  if (p >= k && left < p - k + 1) left = p - k + 1;
  while (left + k < n && (c[left + k] - c[p]) < (c[p] - c[left])) ++left;
  return left;
}

constexpr std::size_t kSweepChunk = 16384;

template <class PerQuery>
void sliding_knn_sweep(const SortedView& v, std::size_t k, Exec exec, PerQuery&& per_query) {
  const std::size_t n = v.order.size();
  const std::size_t n_chunks = (n + kSweepChunk - 1) / kSweepChunk;
  for_each_chunk(n_chunks, exec, [&](std::size_t chunk) {
    const std::size_t q0 = chunk * kSweepChunk;
    const std::size_t q1 = std::min(n, q0 + kSweepChunk);
    std::size_t left = (q0 >= k) ? q0 - k + 1 : 0;
    left = std::min(left, n - k);
    left = advance_window(v.coord_sorted, n, k, q0, left);
    RankTree tree(n);
    std::size_t cur_l = left, cur_r = left + k;
    for (std::size_t p = cur_l; p < cur_r; ++p) tree.add(v.rank[p], +1);
    for (std::size_t p = q0; p < q1; ++p) {
      std::size_t nl = advance_window(v.coord_sorted, n, k, p, cur_l);
      while (cur_l < nl) tree.add(v.rank[cur_l++], -1);
      while (cur_r < nl + k) tree.add(v.rank[cur_r++], +1);
      per_query(p, tree);
    }
  });
}

}  // namespace

std::vector<double> knn_conditional_quantiles_1d(std::span<const double> coord,
                                                 std::span<const double> y, std::size_t k,
                                                 double alpha, Exec exec) {
  const std::size_t n = coord.size();
  if (y.size() != n) throw std::invalid_argument("knn quantiles: size mismatch");
  if (k < 1) throw std::invalid_argument("knn quantiles: k must be at least 1");
  std::vector<double> out(n);
  if (k >= n) {
    std::vector<double> sorted(y.begin(), y.end());
    std::sort(sorted.begin(), sorted.end());
    double q = sorted[quantile_order_index(alpha, n) - 1];
    std::fill(out.begin(), out.end(), q);
    return out;
  }
  SortedView v = build_sorted_view(coord, y);
  const std::size_t m = quantile_order_index(alpha, k);
  sliding_knn_sweep(v, k, exec, [&](std::size_t p, const RankTree& tree) {
    out[v.order[p]] = v.y_of_rank[tree.kth(m)];
  });
  return out;
}

std::vector<double> knn_conditional_means_1d(std::span<const double> coord,
                                             std::span<const double> y, std::size_t k,
                                             Exec exec) {
  const std::size_t n = coord.size();
  if (y.size() != n) throw std::invalid_argument("knn means: size mismatch");
  if (k < 1) throw std::invalid_argument("knn means: k must be at least 1");
  std::vector<double> out(n);
  if (k >= n) {
    double mean = sum_ordered(y) / static_cast<double>(n);
    std::fill(out.begin(), out.end(), mean);
    return out;
  }
  SortedView v = build_sorted_view(coord, y);
  std::vector<double> y_sorted(n);
  for (std::size_t p = 0; p < n; ++p) y_sorted[p] = y[v.order[p]];

  const std::size_t n_chunks = (n + kSweepChunk - 1) / kSweepChunk;
  for_each_chunk(n_chunks, exec, [&](std::size_t chunk) {
    const std::size_t q0 = chunk * kSweepChunk;
    const std::size_t q1 = std::min(n, q0 + kSweepChunk);
    std::size_t left = (q0 >= k) ? q0 - k + 1 : 0;
    left = std::min(left, n - k);
    left = advance_window(v.coord_sorted, n, k, q0, left);
    std::size_t cur_l = left, cur_r = left + k;
    double acc = 0.0;
    for (std::size_t p = cur_l; p < cur_r; ++p) acc += y_sorted[p];
    for (std::size_t p = q0; p < q1; ++p) {
      std::size_t nl = advance_window(v.coord_sorted, n, k, p, cur_l);
      while (cur_l < nl) acc -= y_sorted[cur_l++];
      while (cur_r < nl + k) acc += y_sorted[cur_r++];
      out[v.order[p]] = acc / static_cast<double>(k);
    }
  });
  return out;
}

namespace {

template <class Statistic>
std::vector<double> knn_nd_impl(std::span<const double> coords, std::size_t n,
                                std::size_t n_coords, std::span<const double> y,
                                std::span<const std::size_t> query_rows, std::size_t k,
                                Exec exec, Statistic&& statistic) {
  if (y.size() != n || coords.size() != n * n_coords)
    throw std::invalid_argument("knn nd: size mismatch");
  if (k < 1 || k > n) throw std::invalid_argument("knn nd: k out of range");
  std::vector<double> out(query_rows.size());
  for_each_index(query_rows.size(), exec, [&](std::size_t qi) {
    const std::size_t q = query_rows[qi];
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t r = 0; r < n; ++r) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < n_coords; ++c) {
        double diff = coords[c * n + r] - coords[c * n + q];
        d2 += diff * diff;
      }
      dist[r] = {d2, r};
    }
    std::nth_element(dist.begin(), dist.begin() + static_cast<long>(k - 1), dist.end());
    std::vector<double> window(k);
    for (std::size_t j = 0; j < k; ++j) window[j] = y[dist[j].second];
    out[qi] = statistic(window);
  });
  return out;
}

}  // namespace

std::vector<double> knn_conditional_quantiles_nd(std::span<const double> coords, std::size_t n,
                                                 std::size_t n_coords, std::span<const double> y,
                                                 std::span<const std::size_t> query_rows,
                                                 std::size_t k, double alpha, Exec exec) {
  return knn_nd_impl(coords, n, n_coords, y, query_rows, k, exec,
                     [&](std::vector<double>& window) {
                       std::size_t m = quantile_order_index(alpha, window.size());
                       std::nth_element(window.begin(), window.begin() + static_cast<long>(m - 1),
                                        window.end());
                       return window[m - 1];
                     });
}

std::vector<double> knn_conditional_means_nd(std::span<const double> coords, std::size_t n,
                                             std::size_t n_coords, std::span<const double> y,
                                             std::span<const std::size_t> query_rows,
                                             std::size_t k, Exec exec) {
  return knn_nd_impl(coords, n, n_coords, y, query_rows, k, exec,
                     [](std::vector<double>& window) {
                       std::sort(window.begin(), window.end());
                       double acc = 0.0;
                       for (double w : window) acc += w;
                       return acc / static_cast<double>(window.size());
                     });
}

}  // namespace qosa
