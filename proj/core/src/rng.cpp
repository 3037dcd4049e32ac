#include "fsmcmc/rng.hpp"

namespace fsmcmc {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void Xoshiro256pp::reseed(std::uint64_t seed) noexcept {
  std::uint64_t sm = seed;
  for (auto& word : state_) word = splitmix64(sm);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) noexcept {
  std::uint64_t state = root;
  std::uint64_t h = splitmix64(state);
  for (std::uint64_t coord : {a, b, c}) {
    state = h ^ (coord + 0x632be59bd9b4e019ULL);
    h = splitmix64(state);
  }
  return h;
}

std::uint64_t stream_tag(std::string_view name) noexcept {
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RngStream::RngStream(std::uint64_t seed, StreamKey key)
    : seed_(seed), key_(key),
      engine_(derive_seed(seed, key.experiment, key.replica, key.chain)) {}

RngStream RngStream::replica(std::uint64_t index) const {
  return RngStream(seed_, StreamKey{key_.experiment, index, key_.chain});
}

RngStream RngStream::chain(std::uint64_t index) const {
  return RngStream(seed_, StreamKey{key_.experiment, key_.replica, index});
}

RngStream RngStream::child(std::uint64_t tag) const {
  // Fold the parent key into a fresh experiment coordinate.
  const std::uint64_t folded =
      derive_seed(key_.experiment, key_.replica, key_.chain, tag);
  return RngStream(seed_, StreamKey{folded, 0, 0});
}

}  // namespace fsmcmc
