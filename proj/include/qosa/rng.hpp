#pragma once

#include <cmath>
#include <cstdint>

#include "qosa/normal.hpp"

namespace qosa {

/// Counter-based random stream: every draw is a pure function of
/// (seed, substream, counter), so samples can be generated in any order and
/// from any number of threads with identical results.
///
/// The generator is the SplitMix64 sequence started at a state derived from
/// (seed, substream); element i of the stream is reachable in O(1).
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0, std::uint64_t substream = 0)
      : seed_(seed), substream_(substream), base_(derive_base(seed, substream)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t substream_id() const { return substream_; }

  /// A sibling stream with the same seed and a different substream id.
  RandomStream substream(std::uint64_t k) const { return RandomStream(seed_, k); }

  std::uint64_t bits_at(std::uint64_t i) const { return finalize(base_ + (i + 1) * kGamma); }

  /// Uniform draw strictly inside (0,1).
  double uniform_at(std::uint64_t i) const {
    return (static_cast<double>(bits_at(i) >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal_at(std::uint64_t i) const { return std_normal_quantile(uniform_at(i)); }

  double exponential_at(std::uint64_t i, double rate) const {
    // -log(U)/rate with U in (0,1); uniform_at never returns the endpoints.
    return -std::log(uniform_at(i)) / rate;
  }

  /// Uniform integer in [0, bound) via the multiply-shift trick.
  std::uint64_t uniform_int_at(std::uint64_t i, std::uint64_t bound) const {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(bits_at(i)) * bound) >> 64);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;

  static std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static std::uint64_t derive_base(std::uint64_t seed, std::uint64_t substream) {
    std::uint64_t s = finalize(seed + kGamma);
    return finalize(s ^ (substream * 0xda942042e4dd58b5ull + 0x2545f4914f6cdd1dull));
  }

  std::uint64_t seed_;
  std::uint64_t substream_;
  std::uint64_t base_;
};

}  // namespace qosa
