#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace fsmap {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// Stream layout, version "philox4x32-10/v1":
//   key      = (seed & 0xffffffff, seed >> 32)
//   counter  = (block_lo, block_hi, stream_lo, stream_hi)
// Each block yields four 32-bit words consumed in order. uniform() takes two
// words (high word first) to build a 53-bit mantissa; normal() uses
// Box-Muller and caches the second variate.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "philox4x32-10/v1";

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  std::size_t index(std::size_t n);

  static std::array<std::uint32_t, 4> block(const std::array<std::uint32_t, 4>& counter,
                                            const std::array<std::uint32_t, 2>& key);

 private:
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> buffer_{};
  int pos_ = 4;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// splitmix64 mix of (seed, tag); used to derive child seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

}  // namespace fsmap
