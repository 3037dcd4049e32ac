#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace fsmcmc {

/// xoshiro256++ 1.0 (Blackman & Vigna). Satisfies UniformRandomBitGenerator.
class Xoshiro256pp {
public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(std::uint64_t seed = 0) noexcept { reseed(seed); }

  void reseed(std::uint64_t seed) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  friend bool operator==(const Xoshiro256pp&, const Xoshiro256pp&) = default;

private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> state_{};
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Mixes a root seed with an ordered list of stream coordinates.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0) noexcept;

/// Stable 64-bit hash of a name, used to turn experiment labels into stream keys.
std::uint64_t stream_tag(std::string_view name) noexcept;

/// Identifies one stream: (experiment, replica, chain).
struct StreamKey {
  std::uint64_t experiment = 0;
  std::uint64_t replica = 0;
  std::uint64_t chain = 0;

  friend bool operator==(const StreamKey&, const StreamKey&) = default;
};

/// An exclusively owned random stream. Children are derived from the root
/// seed and key only, never from the current engine state, so the stream a
/// replica sees does not depend on how many draws other replicas made.
class RngStream {
public:
  explicit RngStream(std::uint64_t seed, StreamKey key = {});

  double normal() { return normal_(engine_); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  RngStream replica(std::uint64_t index) const;
  RngStream chain(std::uint64_t index) const;
  /// Child keyed by an arbitrary label, e.g. a sub-estimator inside an experiment.
  RngStream child(std::uint64_t tag) const;

  std::uint64_t seed() const noexcept { return seed_; }
  const StreamKey& key() const noexcept { return key_; }
  Xoshiro256pp& engine() noexcept { return engine_; }

private:
  std::uint64_t seed_;
  StreamKey key_;
  Xoshiro256pp engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace fsmcmc
