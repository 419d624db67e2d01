#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>

namespace reward_align {

/// Counter-based random stream ("splitmix-counter").
///
/// A stream is a 64-bit key; draw n (n = 0, 1, ...) is
///   mix64(key + (n + 1) * 0x9E3779B97F4A7C15)
/// where mix64 is the SplitMix64 finalizer. Keys are derived from seed pairs
/// with `Rng::stream(a, b)` = mix64(mix64(a ^ 0x243F6A8885A308D3) + b), so a
/// reimplementation in any language can reproduce every trace bit-for-bit.
///
/// Doubles take the top 53 bits: (u >> 11) * 2^-53, giving [0, 1).
/// Bounded integers use Lemire's multiply-shift with rejection.
class Rng {
 public:
  using result_type = std::uint64_t;

  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  static constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t stream_key(std::uint64_t a,
                                            std::uint64_t b) noexcept {
    return mix64(mix64(a ^ 0x243F6A8885A308D3ULL) + b);
  }

  explicit constexpr Rng(std::uint64_t key = 0) noexcept : key_(key) {}

  static constexpr Rng stream(std::uint64_t a, std::uint64_t b) noexcept {
    return Rng(stream_key(a, b));
  }

  /// Independent child stream; does not advance this one.
  constexpr Rng fork(std::uint64_t tag) const noexcept {
    return Rng(stream_key(key_, tag));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGamma);
  }

  /// Uniform on [0, 1).
  constexpr double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  constexpr double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  constexpr bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept {
    __uint128_t m = static_cast<__uint128_t>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<__uint128_t>((*this)()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Fisher-Yates, last index first.
  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace reward_align
