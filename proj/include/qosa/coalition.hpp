#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace qosa {

/// A subset of the input index set {0, ..., d-1}, stored as a d-bit mask.
class Coalition {
 public:
  Coalition() = default;

  Coalition(int dim, std::uint64_t mask) : dim_(dim), mask_(mask) {
    if (dim < 1 || dim > 63) throw std::invalid_argument("Coalition: dimension must be in [1, 63]");
    if (dim < 64 && (mask >> dim) != 0)
      throw std::invalid_argument("Coalition: mask has bits outside the dimension");
  }

  static Coalition empty_set(int dim) { return Coalition(dim, 0); }
  static Coalition full_set(int dim) { return Coalition(dim, (dim == 64) ? ~0ull : ((1ull << dim) - 1)); }
  static Coalition single(int dim, int i) {
    check_index(dim, i);
    return Coalition(dim, 1ull << i);
  }
  static Coalition of(int dim, std::initializer_list<int> members) {
    std::uint64_t m = 0;
    for (int i : members) {
      check_index(dim, i);
      m |= 1ull << i;
    }
    return Coalition(dim, m);
  }

  int dim() const { return dim_; }
  std::uint64_t mask() const { return mask_; }
  int size() const { return std::popcount(mask_); }
  bool empty() const { return mask_ == 0; }
  bool full() const { return mask_ == full_set(dim_).mask_; }

  bool contains(int i) const {
    check_index(dim_, i);
    return (mask_ >> i) & 1u;
  }

  Coalition complement() const { return Coalition(dim_, mask_ ^ full_set(dim_).mask_); }
  Coalition with(int i) const {
    check_index(dim_, i);
    return Coalition(dim_, mask_ | (1ull << i));
  }
  Coalition without(int i) const {
    check_index(dim_, i);
    return Coalition(dim_, mask_ & ~(1ull << i));
  }
  Coalition unite(const Coalition& other) const {
    require_same_dim(other);
    return Coalition(dim_, mask_ | other.mask_);
  }
  Coalition intersect(const Coalition& other) const {
    require_same_dim(other);
    return Coalition(dim_, mask_ & other.mask_);
  }
  bool subset_of(const Coalition& other) const {
    require_same_dim(other);
    return (mask_ & ~other.mask_) == 0;
  }

  /// Member indices in ascending order.
  std::vector<int> members() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(size()));
    for (int i = 0; i < dim_; ++i)
      if ((mask_ >> i) & 1u) out.push_back(i);
    return out;
  }

  /// "{}" for the empty set, otherwise 1-based indices joined by '+', e.g. "1+3".
  std::string label() const {
    if (mask_ == 0) return "{}";
    std::string s;
    for (int i = 0; i < dim_; ++i) {
      if (!((mask_ >> i) & 1u)) continue;
      if (!s.empty()) s += '+';
      s += std::to_string(i + 1);
    }
    return s;
  }

  friend bool operator==(const Coalition& a, const Coalition& b) {
    return a.dim_ == b.dim_ && a.mask_ == b.mask_;
  }

 private:
  static void check_index(int dim, int i) {
    if (i < 0 || i >= dim) throw std::out_of_range("Coalition: input index out of range");
  }
  void require_same_dim(const Coalition& other) const {
    if (dim_ != other.dim_) throw std::invalid_argument("Coalition: dimension mismatch");
  }

  int dim_ = 1;
  std::uint64_t mask_ = 0;
};

}  // namespace qosa
