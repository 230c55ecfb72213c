#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace leaklab {

// SHA-256 of the input bytes, as a lowercase hex string.
std::string sha256_hex(std::string_view data);

// FNV-1a 64-bit. Used for token bucketing, not for identity.
std::uint64_t fnv1a64(std::string_view data);

}  // namespace leaklab
