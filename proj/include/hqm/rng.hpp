#pragma once

// Portable seeded randomness. std::shuffle and the std distributions are
// implementation-defined, so subsets and permutations would differ across
// standard libraries. Everything here is specified bit-for-bit:
//
//   SplitMix64 (Steele, Lea, Flood 2014):
//     state += 0x9E3779B97F4A7C15
//     z = state
//     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//     return z ^ (z >> 31)
//
//   uniform_below(bound): rejection sampling; draws r until
//     r >= (2^64 - bound) % bound, then returns r % bound.
//
//   shuffle: Fisher-Yates from the back, for i = n-1 .. 1:
//     j = uniform_below(i + 1); swap(v[i], v[j]).

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace hqm {

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, bound). bound must be > 0.
  constexpr std::uint64_t uniform_below(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

 private:
  std::uint64_t state_;
};

template <typename T>
void shuffle(std::vector<T>& values, SplitMix64& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_below(i));
    using std::swap;
    swap(values[i - 1], values[j]);
  }
}

/// FNV-1a over the bytes of `text`; used to derive per-item seeds so that
/// results do not depend on processing order.
constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::string_view salt) noexcept {
  SplitMix64 mix(seed ^ fnv1a64(salt));
  return mix.next();
}

}  // namespace hqm
