#pragma once

#include <cstdint>
#include <initializer_list>

// Counter-based randomness: every quenched quantity is a pure function of
// (seed, tag, site), so environments never have to be stored or synchronized.
// Sequential streams (walk steps, sampling) use xoshiro256** seeded through
// the same mixer.

namespace sinai::rng {

inline uint64_t splitmix64(uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Order-sensitive combination of an arbitrary key tuple into one 64-bit value.
inline uint64_t mix(std::initializer_list<uint64_t> parts) {
    uint64_t h = 0x8BADF00D5EEDC0DEULL;
    for (uint64_t p : parts) h = splitmix64(h ^ p);
    return h;
}

// Uniform in [0,1) with 53 random bits, as a pure function of the key tuple.
inline double u01_from_key(uint64_t seed, uint64_t tag, int64_t site) {
    uint64_t h = mix({seed, tag, static_cast<uint64_t>(site)});
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// xoshiro256** (Blackman/Vigna), state seeded via splitmix64.
struct Stream {
    uint64_t s[4];

    explicit Stream(uint64_t seed) {
        uint64_t z = seed;
        for (auto& w : s) {
            z = splitmix64(z);
            w = z;
        }
        // all-zero state is invalid; splitmix output never yields it for all 4 words
    }

    static Stream from_key(std::initializer_list<uint64_t> parts) {
        return Stream(mix(parts));
    }

    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t next_u64() {
        const uint64_t result = rotl(s[1] * 5, 7) * 9;
        const uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }

    double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, n)
    uint64_t below(uint64_t n) { return next_u64() % n; }
};

// Fixed salts keeping the per-purpose key spaces disjoint.
inline constexpr uint64_t kWalkerSalt = 0x77616C6B65720001ULL;
inline constexpr uint64_t kEnvSalt = 0x656E760000000001ULL;

}  // namespace sinai::rng
