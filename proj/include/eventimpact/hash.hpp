#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace eventimpact {

/// FNV-1a, 64-bit. Used for content hashes in manifests and draw-file
/// headers; stable across platforms, no external dependency.
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t seed = 0xcbf29ce484222325ull) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace eventimpact
