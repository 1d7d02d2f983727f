#pragma once

#include <cassert>
#include <cstdint>
#include <random>

namespace popnet {

// splitmix64 step; used for seed mixing, never as a run generator.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d4a919d95d1b52ull ^ 0x95ull;
  return z ^ (z >> 31);
}

// Hashes a base seed with a stream tag (and optionally more words) into an
// independent substream seed. Pure function of its inputs.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t s = base;
  splitmix64(s);
  s ^= 0xd1b54a32d192ed03ull * (stream + 1);
  return splitmix64(s);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b) {
  return derive_seed(derive_seed(base, a), b ^ 0x632be59bd9b4e019ull);
}

// Substream tags. A single run seeds its scheduler from stream 1; protocol
// generation uses stream 0 so that generating a protocol and running it from
// the same base seed never shares randomness.
inline constexpr std::uint64_t kProtocolStream = 0;
inline constexpr std::uint64_t kSchedulerStream = 1;

// Deterministic generator with portable bounded sampling. The mt19937_64
// engine is fully specified by the standard; the distributions below avoid
// std::uniform_*_distribution, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Unbiased integer in [0, bound), bound > 0. Classic modulo rejection.
  std::uint64_t below(std::uint64_t bound) {
    assert(bound > 0);
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return r % bound;
    }
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  bool chance(double p) { return next_double() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace popnet
