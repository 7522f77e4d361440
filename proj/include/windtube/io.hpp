#pragma once

#include <charconv>
#include <cstdint>
#include <string>

namespace windtube {

/// Shortest decimal representation that round-trips the double exactly.
inline std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

/// FNV-1a, used for artifact checksums in the JSON sidecar.
inline std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace windtube
