#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace inertiaid {

// Seeded RNG with hand-rolled distributions. std distributions are
// implementation-defined, so uniform/gaussian are generated here from raw
// engine output to keep seeded artifacts byte-reproducible.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(scramble(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; the second draw of each pair is cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double gaussian(double mean, double std) { return mean + std * gaussian(); }

  // Counter-style derivation of independent streams, e.g. one per Monte Carlo
  // run, so results do not depend on execution order.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    return scramble(seed + 0x9e3779b97f4a7c15ULL * (stream + 1));
  }

 private:
  // splitmix64 finalizer
  static std::uint64_t scramble(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace inertiaid
