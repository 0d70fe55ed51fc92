#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace holeburn {

// SplitMix64 (Steele, Lea & Flood). Portable and bit-reproducible; normals come from
// Box-Muller on raw 53-bit uniforms rather than std:: distributions, whose output
// differs between standard libraries.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    return mix(z);
  }

  // Uniform on (0, 1].
  double uniform() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Stream-splitting rule: the generator for a cell is seeded with
// mix(... mix(mix(seed) ^ k0) ^ k1 ...) over the cell's key (dataset tag, indices),
// so every cell's draws are independent of generation order and thread count.
inline SplitMix64 cell_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> key) {
  std::uint64_t s = SplitMix64::mix(seed + 0x9E3779B97F4A7C15ull);
  for (const auto k : key) s = SplitMix64::mix(s ^ (k + 0x632BE59BD9B4E019ull));
  return SplitMix64(s);
}

}  // namespace holeburn
