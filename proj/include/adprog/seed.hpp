#ifndef ADPROG_SEED_HPP
#define ADPROG_SEED_HPP

#include <cstdint>
#include <string_view>

namespace adprog {

// splitmix64 finalizer; good avalanche, cheap, stable across platforms.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic sub-seed for a named job: FNV-1a over the label folded into
// the master seed. Every stochastic component derives its seed through this
// so that serial and parallel runs agree.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return mix64(master ^ h);
}

} // namespace adprog

#endif
