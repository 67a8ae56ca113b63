#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace pagpass {

// Stable 64-bit FNV-1a. Used wherever a hash must be identical across runs,
// platforms and standard library implementations.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

std::uint64_t splitmix64(std::uint64_t x);

// Order-sensitive combination of a seed with a sequence of small integers.
std::uint64_t mix_seed(std::uint64_t seed, std::span<const std::uint8_t> values);
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t value);

// splitmix64 stream. Satisfies UniformRandomBitGenerator so it can be used
// with <random>, but the library only relies on next_unit() for sampling so
// results do not depend on the standard library's distributions.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64_finalize(state_);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller.
  double next_normal();

 private:
  static std::uint64_t splitmix64_finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace pagpass
