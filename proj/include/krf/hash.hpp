#pragma once
// 64-bit FNV-1a, printed as 16 hex digits. Identifies configs, snapshots and
// input files in exports; not a cryptographic hash.

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace krf {

inline std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace krf
