#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>

#include "icstb/core/rng.hpp"

namespace icstb {

// FNV-1a64 content digests: good enough to certify trace equality between
// deterministic runs (not a cryptographic commitment).
inline std::string digest_hex(std::uint64_t h) {
    static const char* k = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = k[h & 0xf];
        h >>= 4;
    }
    return out;
}

inline std::uint64_t digest_string(std::string_view s) { return fnv1a64(s); }

inline std::uint64_t digest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

} // namespace icstb
