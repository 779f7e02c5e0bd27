#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace eden {

using NodeId = std::uint64_t;
using PayloadId = std::uint64_t;
using FunctomeId = std::uint64_t;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  bool operator==(const Vec3&) const = default;

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm_sq() const { return dot(*this); }
  double norm() const { return std::sqrt(norm_sq()); }
};

inline double distance_sq(const Vec3& a, const Vec3& b) { return (a - b).norm_sq(); }

struct Box {
  Vec3 lo{0.0, 0.0, 0.0};
  Vec3 hi{8.0, 8.0, 8.0};

  bool contains(const Vec3& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z &&
           p.z <= hi.z;
  }
  Vec3 clamp(const Vec3& p) const;
  bool operator==(const Box&) const = default;
};

// Error hierarchy. The CLI maps each kind to a distinct exit code.
class EdenError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration; carries every violation found, not just the first.
class ConfigError : public EdenError {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class IndexError : public EdenError {
 public:
  using EdenError::EdenError;
};

// Bad caller-supplied data (deposit coordinates, probe positions).
class InputError : public EdenError {
 public:
  using EdenError::EdenError;
};

// Shape mismatches between cooperating structures.
class StructuralError : public EdenError {
 public:
  using EdenError::EdenError;
};

// Unreadable or unwritable files.
class IoError : public EdenError {
 public:
  using EdenError::EdenError;
};

class LoadError : public EdenError {
 public:
  using EdenError::EdenError;
};

class VersionError : public LoadError {
 public:
  using LoadError::LoadError;
};

}  // namespace eden
