#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace objrec {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives a child seed from a parent seed and a tag (image id, condition,
/// level index ...). FNV-1a over the tag, then mixed with the parent.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(parent ^ splitmix64(h));
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
  return splitmix64(parent ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Counter-based generator (SplitMix64 in counter mode): draw i is a pure
/// function of (key, i), so parallel loops reproduce serial output exactly.
class CounterRng {
 public:
  constexpr explicit CounterRng(std::uint64_t key) noexcept : key_(splitmix64(key)) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return splitmix64(key_ ^ splitmix64(counter));
  }

  /// Uniform on [0,1) with 53 random bits.
  constexpr double uniform01(std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller over draws 2i and 2i+1.
  double normal(std::uint64_t counter) const noexcept {
    const double u1 = 1.0 - uniform01(2 * counter);  // (0,1]
    const double u2 = uniform01(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Unbiased integer in [0, bound) (Lemire's method, rejection on counter).
  std::uint64_t below(std::uint64_t bound, std::uint64_t& counter) const noexcept;

  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
};

inline std::uint64_t CounterRng::below(std::uint64_t bound, std::uint64_t& counter) const noexcept {
  for (;;) {
    const unsigned __int128 m = static_cast<unsigned __int128>(bits(counter++)) * bound;
    const auto low = static_cast<std::uint64_t>(m);
    if (low >= bound || low >= (-bound) % bound) {
      return static_cast<std::uint64_t>(m >> 64);
    }
  }
}

}  // namespace objrec
