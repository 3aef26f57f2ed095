#pragma once

#include <cstdint>
#include <string_view>

namespace egibbs {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Stream seed for a named component. Streams for different labels are
/// unrelated, so adding a component never shifts another's draws.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
    return splitmix64(master ^ splitmix64(fnv1a(label)));
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index) {
    return splitmix64(derive_seed(master, label) + splitmix64(index));
}

} // namespace egibbs
