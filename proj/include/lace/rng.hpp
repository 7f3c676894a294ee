#pragma once

#include <array>
#include <cstdint>

namespace lace {

/// Philox4x32-10 block function (Salmon et al. counter-based generator).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

enum class StreamPurpose : std::uint32_t { Proposal = 0, Accept = 1, Init = 2, Misc = 3 };

/// Counter-mode stream: key = 64-bit seed, counter = (step lo, step hi, chain, purpose).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint32_t chain, StreamPurpose purpose);

  std::uint32_t next_u32();
  /// Uniform on (0, 1) with 53 random bits.
  double uniform();
  /// Standard normal by Box-Muller (pairs are cached).
  double normal();

  std::uint64_t step() const noexcept { return step_; }

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint32_t chain_;
  std::uint32_t purpose_;
  std::uint64_t step_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  bool have_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace lace
