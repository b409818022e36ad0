#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace octave {

// One root seed expands into independent child streams, one per purpose.
// Derivation: FNV-1a over the purpose string, mixed with the root seed by
// splitmix64. Stable across runs and platforms.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t fnv1a(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t child_seed(uint64_t root, std::string_view purpose) {
    return splitmix64(root ^ splitmix64(fnv1a(purpose)));
}

inline std::mt19937_64 make_rng(uint64_t root, std::string_view purpose) {
    return std::mt19937_64(child_seed(root, purpose));
}

}  // namespace octave
