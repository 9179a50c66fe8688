#pragma once

#include <cstdint>
#include <random>

namespace evqr {

/// Deterministic uniform stream. std::mt19937_64 is fully specified by the
/// standard and the double conversion below avoids library-specific
/// distributions, so a (seed, stream) pair yields the same draws everywhere.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent substream for work unit `stream` of a run seeded with `seed`.
  static Rng substream(std::uint64_t seed, std::uint64_t stream);

  /// Uniform on the open interval (0, 1) with 53-bit resolution.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finaliser; used to decorrelate substream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline Rng Rng::substream(std::uint64_t seed, std::uint64_t stream) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL)));
}

}  // namespace evqr
