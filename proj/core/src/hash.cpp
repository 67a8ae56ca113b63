#include "pagpass/hash.hpp"

#include <cmath>
#include <numbers>

namespace pagpass {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::span<const std::uint8_t> values) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint8_t v : values) h = splitmix64(h ^ (std::uint64_t{v} + 0x100));
  return splitmix64(h ^ values.size());
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t value) {
  return splitmix64(splitmix64(seed) ^ splitmix64(value + 0x632be59bd9b4e019ULL));
}

double Rng::next_normal() {
  double u1 = next_unit();
  while (u1 <= 0.0) u1 = next_unit();
  const double u2 = next_unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace pagpass
