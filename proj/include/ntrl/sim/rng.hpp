#pragma once

#include <cstdint>
#include <string_view>

namespace ntrl {

/// SplitMix64 finalizer (Stafford variant 13). A bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// Seed for stream `index` derived from `base`. Injective in `index` for a fixed base.
constexpr std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) noexcept {
  return mix64(base ^ mix64(index + kGolden));
}

/// FNV-1a over a byte string; used to derive stream ids from names.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Counter-based generator: draw i is mix64(key + (i + 1) * golden).
///
/// Output depends only on (key, counter), never on platform or library, so a
/// given seed reproduces the same draws everywhere. `split` derives an
/// independent child stream without advancing the parent.
class RngStream {
 public:
  static constexpr std::string_view kAlgorithm = "splitmix64-ctr";

  constexpr RngStream() noexcept = default;
  constexpr explicit RngStream(std::uint64_t seed) noexcept : seed_(seed), key_(mix64(seed)) {}

  constexpr std::uint64_t seed() const noexcept { return seed_; }
  constexpr std::uint64_t draws() const noexcept { return counter_; }

  constexpr std::uint64_t next_u64() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
  }

  /// Uniform integer in [0, n). n must be > 0. Rejection sampling, no modulo bias.
  constexpr std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t x = next_u64();
      if (x >= threshold) return x % n;
    }
  }

  /// Uniform integer in [lo, hi].
  constexpr int between(int lo, int hi) noexcept {
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  /// Uniform double in [0, 1) with 53 bits of precision.
  constexpr double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  constexpr double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  constexpr int d20() noexcept { return between(1, 20); }

  constexpr RngStream split(std::uint64_t stream) const noexcept {
    return RngStream(mix_seed(seed_, stream));
  }
  constexpr RngStream split(std::string_view name) const noexcept { return split(fnv1a64(name)); }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t key_ = mix64(0);
  std::uint64_t counter_ = 0;
};

}  // namespace ntrl
