#pragma once

#include <cstdint>

// Counter-based random streams. Every draw is a pure function of (key, counter),
// so a parallel tile that knows its counters reproduces the serial sequence.

namespace simplerc::rng {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive an independent key from a parent key and a (tag, index) label.
constexpr std::uint64_t derive(std::uint64_t parent, std::uint64_t tag,
                               std::uint64_t index = 0) noexcept {
  return splitmix64(splitmix64(parent ^ splitmix64(tag)) + splitmix64(~index));
}

/// Well-known stream tags so unrelated consumers never share a key.
enum class Stream : std::uint64_t {
  adjacency = 0x61646a,
  coupling = 0x636f7570,
  degrees = 0x64656772,
  replicate = 0x7265706c,
  subsample = 0x73756273,
  panel = 0x70616e65,
};

constexpr std::uint64_t derive(std::uint64_t parent, Stream tag,
                               std::uint64_t index = 0) noexcept {
  return derive(parent, static_cast<std::uint64_t>(tag), index);
}

constexpr std::uint64_t bits(std::uint64_t key, std::uint64_t counter) noexcept {
  return splitmix64(key ^ splitmix64(counter + 0x632be59bd9b4e019ULL));
}

/// Uniform on [0, 1) with 53 random bits.
constexpr double uniform(std::uint64_t key, std::uint64_t counter) noexcept {
  return static_cast<double>(bits(key, counter) >> 11) * 0x1.0p-53;
}

/// Sequential view over a counter stream.
class CounterStream {
 public:
  explicit constexpr CounterStream(std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t next_bits() noexcept { return bits(key_, counter_++); }
  double next_uniform() noexcept { return uniform(key_, counter_++); }

  /// Unbiased integer in [0, bound) by rejection.
  std::uint64_t next_below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x = next_bits();
    while (x >= limit) x = next_bits();
    return x % bound;
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t position() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace simplerc::rng
