#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace eden {

constexpr std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : data) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x00000100000001b3ull;
  }
  return h;
}

// 16 lowercase hex digits.
std::string hex_digest(std::uint64_t h);

}  // namespace eden
