#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace tiltbench {

/// xoshiro256** generator keyed by a (seed, stream_id) pair.
///
/// The 256-bit state is filled from a splitmix64 sequence started at a mix
/// of both keys, so equal keys give identical sequences and different
/// stream ids give unrelated ones. Period is 2^256 - 1. Satisfies
/// UniformRandomBitGenerator.
///
/// A stream is single-owner: move it between threads, never share it.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on the open interval (0, 1).
  double uniform();

  /// Standard normal variate (Box-Muller, one output per call).
  double normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::array<std::uint64_t, 4> state_{};
  std::uint64_t seed_;
  std::uint64_t stream_id_;
};

/// splitmix64 finalizer; also used to derive child seeds.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace tiltbench
