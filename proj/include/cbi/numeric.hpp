#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace cbi {

inline constexpr double inf = std::numeric_limits<double>::infinity();

/// Extended-real addition: +inf absorbs. Operands are never of opposite
/// infinite sign in this library (all divergent integrals are +inf).
inline double xadd(double a, double b) {
    if (std::isinf(a) || std::isinf(b)) return inf;
    return a + b;
}

inline bool close(double a, double b, double rel, double abs = 0.0) {
    return std::abs(a - b) <= abs + rel * std::max(std::abs(a), std::abs(b));
}

/// SplitMix64 finalizer; used to derive independent per-path seeds from a
/// master seed and a path counter, so parallel execution order is irrelevant.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// FNV-1a over a byte string; stable across platforms, used for config hashes.
inline std::uint64_t fnv1a(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace cbi
