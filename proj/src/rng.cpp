#include "eden/rng.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace eden {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

Rng Rng::derive(std::uint64_t key, std::uint64_t stream) {
  return Rng(splitmix64(key ^ splitmix64(stream + 0x632be59bd9b4e019ull)));
}

std::size_t Rng::below(std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v = engine_();
  while (v >= limit) v = engine_();
  return static_cast<std::size_t>(v % bound);
}

std::int64_t Rng::between(std::int64_t lo, std::int64_t hi) {
  if (hi <= lo) return lo;
  return lo + static_cast<std::int64_t>(below(static_cast<std::size_t>(hi - lo) + 1));
}

Vec3 Rng::unit_vector() {
  // Rejection sampling inside the unit ball, then normalize.
  for (;;) {
    Vec3 v{uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0)};
    const double n2 = v.norm_sq();
    if (n2 > 1e-12 && n2 <= 1.0) return v * (1.0 / std::sqrt(n2));
  }
}

std::string Rng::state() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::set_state(const std::string& s) {
  std::istringstream is(s);
  std::mt19937_64 e;
  is >> e;
  if (is.fail()) throw LoadError("malformed rng_state");
  engine_ = e;
}

}  // namespace eden
