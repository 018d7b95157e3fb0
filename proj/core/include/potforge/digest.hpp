#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace potforge {

// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

// 64-bit FNV-1a. Used where a fast, stable, non-cryptographic hash is
// enough (word bucketing, RNG seeding).
std::uint64_t fnv1a64(std::string_view data) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace potforge
