#pragma once

#include <cstdint>
#include <random>

namespace ldw {

// Seeded generator whose output does not depend on the standard library's
// distribution implementations, so seeded results match across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 bits of resolution.
  double canonical() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * canonical(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ldw
