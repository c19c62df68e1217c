#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace critpar {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// The 128-bit counter is split into a 64-bit block index (low words) and a
/// 64-bit stream id (high words), so one key yields 2^64 independent streams.
/// Satisfies UniformRandomBitGenerator with 32-bit output.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Raw bijection; exposed for known-answer tests.
  static Block encrypt(Block counter, Key key);

 private:
  Key key_;
  std::uint64_t block_ = 0;
  std::uint64_t stream_;
  Block buffer_{};
  unsigned next_ = 4;
};

/// Random stream owned by exactly one run. Copying duplicates the stream
/// state, so two copies replay identical draws.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0)
      : engine_(seed, stream), seed_(seed), stream_(stream) {}

  double normal() { return normal_(engine_); }
  double uniform01() { return std::generate_canonical<double, 53>(engine_); }
  /// Uniform integer on {0, ..., n-1}; n must be positive.
  std::size_t uniform_index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  bool bernoulli(double p) { return uniform01() < p; }

  /// Independent stream derived from this one's seed; does not consume draws.
  RandomStream substream(std::uint64_t id) const;

  std::uint64_t seed() const { return seed_; }

 private:
  Philox4x32 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uint64_t seed_;
  std::uint64_t stream_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Stable seed for one run: mixes the master seed, a textual key describing
/// the experiment row, and the replicate index. Adding rows never changes the
/// seeds of existing ones.
std::uint64_t derive_seed(std::uint64_t master, std::string_view row_key, std::uint64_t index);

}  // namespace critpar
