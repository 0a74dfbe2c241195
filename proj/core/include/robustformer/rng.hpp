#pragma once

#include <cstdint>
#include <iterator>
#include <string_view>
#include <utility>

namespace rf {

/// 64-bit FNV-1a; used to turn purpose labels into stream ids.
constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Counter-based generator: output n is a SplitMix64 finaliser applied to
/// (key + n * golden), where key mixes the seed and stream id. No platform
/// library distributions are used, so sequences are identical everywhere.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream);
  Rng(std::uint64_t seed, std::string_view purpose) : Rng(seed, fnv1a(purpose)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  std::uint64_t counter() const noexcept { return counter_; }

  /// Independent generator on a stream derived from this one's stream and `label`.
  Rng fork(std::string_view label) const;

  std::uint64_t next_u64();
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Unbiased integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (one output per two uniforms).
  double normal();
  /// Normal with the given standard deviation, resampled outside +-bound sigma.
  double truncated_normal(double stddev, double bound = 2.0);
  std::uint64_t poisson(double mean);

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(std::distance(first, last));
    for (std::uint64_t i = n; i > 1; --i) {
      const std::uint64_t j = below(i);
      using std::swap;
      swap(*(first + static_cast<std::ptrdiff_t>(i - 1)), *(first + static_cast<std::ptrdiff_t>(j)));
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace rf
