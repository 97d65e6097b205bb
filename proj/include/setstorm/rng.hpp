#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace setstorm {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Independent stream of 64-bit words for (seed, stream id). Any stream can
/// be regenerated in isolation, whatever order streams are consumed in.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t stream, std::uint32_t domain = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream),
        domain_(domain) {}

  std::uint64_t next_u64() {
    if (used_ == 2) refill();
    const std::uint64_t hi = block_[2 * used_];
    const std::uint64_t lo = block_[2 * used_ + 1];
    ++used_;
    return (hi << 32) | lo;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound); Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    for (;;) {
      const __uint128_t m = static_cast<__uint128_t>(next_u64()) * bound;
      const auto low = static_cast<std::uint64_t>(m);
      if (low >= bound || low >= (0 - bound) % bound) return static_cast<std::uint64_t>(m >> 64);
    }
  }

 private:
  void refill() {
    Philox4x32::Counter ctr = {static_cast<std::uint32_t>(stream_),
                               static_cast<std::uint32_t>(stream_ >> 32), domain_, block_index_++};
    block_ = Philox4x32::block(ctr, key_);
    used_ = 0;
  }

  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint32_t domain_;
  std::uint32_t block_index_ = 0;
  Philox4x32::Counter block_{};
  int used_ = 2;
};

}  // namespace setstorm
