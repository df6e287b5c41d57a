#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace facegrade {

/// Deterministic RNG wrapper. Only the raw mt19937_64 stream is consumed
/// and mapped here, so sequences are reproducible independent of the
/// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() { return (engine_() >> 11) * 0x1.0p-53; }

  std::size_t index(std::size_t n) {
    const std::size_t i = static_cast<std::size_t>(uniform01() * n);
    return i < n ? i : n - 1;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    if (u1 < 1e-300) u1 = 1e-300;
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace facegrade
