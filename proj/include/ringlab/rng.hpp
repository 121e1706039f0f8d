#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace ringlab {

/// Purpose tags keep independent random streams apart for one (seed, replica).
enum class StreamTag : std::uint32_t {
  left_haar = 1,
  right_haar = 2,
  noise = 3,
  ginibre = 4,
  additive_haar = 5,
  log_gas = 6,
  test = 99,
};

/// Counter-based generator (Philox4x32-10) keyed by (seed, replica, tag).
///
/// Every (seed, replica, tag) triple owns a disjoint stream, so replicas can be
/// sampled in any order or in parallel and still reproduce bit-for-bit.
/// Satisfies UniformRandomBitGenerator with 64-bit output.
class KeyedRng {
 public:
  using result_type = std::uint64_t;

  KeyedRng(std::uint64_t seed, std::uint32_t replica, StreamTag tag,
           std::uint64_t start_block = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        replica_(replica),
        tag_(static_cast<std::uint32_t>(tag)),
        block_(start_block) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (lane_ == 2) {
      refill();
    }
    const result_type hi = buffer_[2 * lane_];
    const result_type lo = buffer_[2 * lane_ + 1];
    ++lane_;
    return (hi << 32) | lo;
  }

  /// Number of 128-bit blocks consumed; together with the key this is the full
  /// generator state (used by chain checkpoints).
  std::uint64_t block_counter() const noexcept { return block_; }

  /// Restore a position previously returned by block_counter(). Any partially
  /// consumed block is discarded.
  void seek(std::uint64_t block) {
    block_ = block;
    lane_ = 2;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  void refill() {
    std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(block_),
                                     static_cast<std::uint32_t>(block_ >> 32), replica_, tag_};
    std::array<std::uint32_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    buffer_ = ctr;
    ++block_;
    lane_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t replica_;
  std::uint32_t tag_;
  std::uint64_t block_;
  std::array<std::uint32_t, 4> buffer_{};
  int lane_ = 2;
};

/// Uniform double in [0,1) with 53 random bits.
inline double uniform01(KeyedRng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace ringlab
