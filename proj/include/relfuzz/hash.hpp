#pragma once

#include <cstdint>
#include <string_view>

namespace relfuzz {

inline constexpr std::uint64_t kFnvOffset = 0xCBF29CE484222325ull;

/// 64-bit FNV-1a; fixed for report stability.
constexpr std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = kFnvOffset)
{
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

}  // namespace relfuzz
