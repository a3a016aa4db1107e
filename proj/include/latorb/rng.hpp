#pragma once

#include <cstdint>
#include <cmath>

#include "latorb/types.hpp"

namespace latorb {

// splitmix64; fixed algorithm so streams are reproducible across platforms.
struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Box-Muller, one value per call (the pair's partner is discarded to keep
  // the stream independent of call patterns).
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  Vec3 unit_sphere() {
    while (true) {
      Vec3 g(gaussian(), gaussian(), gaussian());
      double n = g.norm();
      if (n > 1e-12) return g / n;
    }
  }

  Vec2 unit_disk() {
    while (true) {
      Vec2 p(uniform(-1.0, 1.0), uniform(-1.0, 1.0));
      if (p.squaredNorm() <= 1.0) return p;
    }
  }

  // Derive an independent stream, e.g. one per worker shard.
  Rng fork(std::uint64_t salt) const {
    Rng r(state ^ (0x632be59bd9b4e019ull * (salt + 1)));
    r.next_u64();
    return r;
  }
};

}  // namespace latorb
