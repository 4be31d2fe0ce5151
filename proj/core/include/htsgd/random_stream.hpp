#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace htsgd {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3"). Pure function of (counter, key).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Derives a sub-seed for a named purpose ("init", "noise", "shuffle", ...)
/// so that different consumers of one user seed never share a stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose);

/// An independent random sequence addressed by (seed, stream_id).
///
/// Draw j of stream (s, i) is Philox(counter = (j, i), key = s), so streams
/// never share state and any two streams with distinct ids are independent.
/// The object only tracks its own read position.
class RandomStream {
 public:
  RandomStream() = default;
  RandomStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  /// Number of 64-bit words consumed so far.
  std::uint64_t position() const noexcept { return position_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double next_uniform();
  /// Uniform on the open interval (0, 1).
  double next_open_uniform();
  /// Standard normal via Box-Muller (consumes two words).
  double next_normal();
  /// Exponential with mean 1.
  double next_exponential();
  /// Uniform integer on [0, bound); bound > 0. Lemire's multiply-shift with rejection.
  std::uint64_t next_below(std::uint64_t bound);

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
  std::uint64_t position_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
};

}  // namespace htsgd
