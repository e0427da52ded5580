#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>

namespace alkit {

// FNV-1a 64-bit. Used for dataset fingerprints, config hashes, and record
// fingerprints; collision resistance beyond accidental corruption is not a goal.
inline std::uint64_t fnv1a64(std::span<const std::byte> bytes,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (std::byte b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a64(std::as_bytes(std::span<const char>(s.data(), s.size())), h);
}

template <typename T>
std::uint64_t fnv1a64_values(std::span<const T> values,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  static_assert(std::is_trivially_copyable_v<T>);
  return fnv1a64(std::as_bytes(values), h);
}

}  // namespace alkit
