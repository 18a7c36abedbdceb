#pragma once

// Portable seeded streams. The standard distributions are implementation
// defined, so uniform and normal draws are computed here from raw mt19937_64
// output to keep results identical across toolchains.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace sniff {

/// Stream ids derived from one experiment seed.
enum class Stream : std::uint64_t {
  kModel = 1,
  kAttackInputs = 2,
  kDataset = 3,
  kTrials = 4,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
  Rng(std::uint64_t seed, Stream stream)
      : engine_(splitmix64(splitmix64(seed) ^ splitmix64(static_cast<std::uint64_t>(stream)))) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double low, double high) { return low + (high - low) * unit(); }

  /// Box-Muller; the second variate is discarded to keep draw counts fixed.
  double normal() {
    double u1 = 1.0 - unit();  // (0, 1]
    double u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t below(std::uint64_t bound) { return engine_() % bound; }

private:
  std::mt19937_64 engine_;
};

}  // namespace sniff
