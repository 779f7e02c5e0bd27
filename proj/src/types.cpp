#include "eden/types.hpp"

#include <algorithm>

namespace eden {

namespace {

std::string join_violations(const std::vector<std::string>& v) {
  std::string out = "invalid configuration:";
  for (const auto& s : v) {
    out += " [";
    out += s;
    out += "]";
  }
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : EdenError(join_violations(violations)), violations_(std::move(violations)) {}

Vec3 Box::clamp(const Vec3& p) const {
  return {std::clamp(p.x, lo.x, hi.x), std::clamp(p.y, lo.y, hi.y), std::clamp(p.z, lo.z, hi.z)};
}

}  // namespace eden
