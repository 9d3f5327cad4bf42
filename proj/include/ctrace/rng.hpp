#pragma once

#include <array>
#include <cstdint>

namespace ctrace {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3").
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

/// Mixes a child ordinal into a parent stream id. Used to give every forest
/// node and every replicate its own independent stream.
std::uint64_t derive_stream(std::uint64_t parent, std::uint64_t ordinal);

/// Counter-based generator: the key is the seed, the upper counter words hold
/// the stream id, the lower words count blocks. No state is shared between
/// streams so results do not depend on evaluation order.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

}  // namespace ctrace
