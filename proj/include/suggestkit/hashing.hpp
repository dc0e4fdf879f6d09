#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace suggestkit {

inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

/// 64-bit FNV-1a over the bytes of `data`, continuing from `seed`.
constexpr std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = kFnvOffsetBasis) noexcept {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

// 16 lowercase hex digits, zero padded.
std::string to_hex(std::uint64_t value);
std::uint64_t from_hex(std::string_view hex);

}  // namespace suggestkit
