#pragma once

#include <cstdint>

#include "setstorm/bitvec.hpp"

namespace setstorm {

/// One Monte Carlo trial: strike site, clock cycle and in-cycle instant.
struct SampleSpec {
  std::uint32_t drain = 0;       // gate id whose output node is struck
  std::uint32_t cycle = 1;       // clock cycle t, in [1, n_cycles - 1]
  std::int64_t k_ps = 0;         // offset from the edge opening cycle t
  std::uint64_t sample_index = 0;

  bool operator==(const SampleSpec&) const = default;
};

/// Golden-versus-faulty difference at the capturing edge, one bit per flip-flop.
struct FlipVector {
  BitVec bits;
  std::size_t n_flips = 0;

  FlipVector() = default;
  explicit FlipVector(BitVec b) : bits(std::move(b)), n_flips(bits.count()) {}

  bool operator==(const FlipVector&) const = default;
};

/// Bitwise XOR of two flip-flop states. Throws std::invalid_argument on width mismatch.
inline FlipVector diff(const BitVec& golden, const BitVec& faulty) {
  return FlipVector(golden ^ faulty);
}

}  // namespace setstorm
