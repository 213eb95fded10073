#pragma once

#include <cstddef>
#include <cstdint>

namespace burrsim {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

// FNV-1a, 64-bit.
inline void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) noexcept
{
    const auto* p = static_cast<const std::uint8_t*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
}

template <typename T>
inline void fnv_value(std::uint64_t& h, T v) noexcept
{
    fnv_bytes(h, &v, sizeof(T));
}

} // namespace burrsim
