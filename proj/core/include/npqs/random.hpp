#pragma once

#include <array>
#include <cstdint>

namespace npqs {

/// Philox4x32-10 block function (Salmon et al., SC'11). Counter-based: any
/// block of any stream is computable independently, which is what lets the
/// estimators split work into shards without changing results.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) noexcept;
};

/// Stream of variates for one sample: key = seed, counter = (index, tag, block).
/// `tag` separates independent uses of the same sample index (outer point,
/// inner point, nested draws).
class SampleStream {
 public:
  SampleStream(std::uint64_t seed, std::uint64_t index, std::uint32_t tag) noexcept;

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Standard normal (Box-Muller, the second variate is cached).
  double normal() noexcept;

 private:
  void refill() noexcept;

  Philox4x32::Key key_;
  Philox4x32::Counter ctr_;
  std::array<std::uint32_t, 4> buf_{};
  int used_ = 4;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace npqs
