#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace rflight {

/// Philox4x32-10 block function (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// SplitMix64 finalizer; used to derive substream identifiers.
std::uint64_t mix64(std::uint64_t x);

/*
 * Counter-based random stream.
 *
 * The key is the 64-bit seed, the upper half of the Philox counter is the
 * 64-bit stream id and the lower half counts blocks. Copying a stream
 * copies its position, so a copy replays the same draws. Substreams are
 * index-addressable: substream(k) never depends on how many draws the
 * parent has made.
 */
class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }
  std::uint64_t block_counter() const { return block_; }

  RngStream substream(std::uint64_t index) const;

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Unit exponential by inversion, -log(1 - U).
  double exponential();
  /// Standard normal (Box-Muller, second variate cached).
  double normal();
  void fill_normal(std::span<double> out);

 private:
  void refill();

  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace rflight
