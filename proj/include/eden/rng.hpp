#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>

#include "eden/types.hpp"

namespace eden {

// Seeded random source whose full state round-trips through a string.
// Draws are built directly from engine output so sequences do not depend on
// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 1) : engine_(seed) {}

  // Independent stream for (key, stream). Gives every node its own
  // generator inside a parallel phase without sharing state.
  static Rng derive(std::uint64_t key, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }

  // [0, 1) with 53 bits of resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  // Uniform integer in [0, n); n must be > 0.
  std::size_t below(std::size_t n);
  // Uniform integer in [lo, hi] inclusive.
  std::int64_t between(std::int64_t lo, std::int64_t hi);
  bool chance(double p) { return uniform01() < p; }
  Vec3 unit_vector();

  std::string state() const;
  void set_state(const std::string& s);

  bool operator==(const Rng& o) const { return engine_ == o.engine_; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace eden
