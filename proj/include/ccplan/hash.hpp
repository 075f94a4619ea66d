#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace ccplan {

// FNV-1a 64-bit. Used only for provenance fingerprints in output files,
// where a stable cross-platform hash matters more than collision strength.
inline std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x00000100000001b3ull;
    }
    return h;
}

inline std::string fnv1a64_hex(std::span<const std::uint8_t> bytes) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t h = fnv1a64(bytes);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

inline std::string fnv1a64_hex(const std::string& text) {
    return fnv1a64_hex(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

} // namespace ccplan
