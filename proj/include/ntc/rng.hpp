#pragma once

#include <cstdint>
#include <string_view>

#include "ntc/bytes.hpp"

namespace ntc {

// splitmix64: tiny, well-mixed, and identical on every platform, which the
// byte-exact reproducibility guarantees depend on.
struct RandomByteStream {
    uint64_t state = 0;
    uint64_t word = 0;
    unsigned left = 0;

    explicit RandomByteStream(uint64_t seed) : state(seed) {}

    uint64_t next_u64() {
        state += 0x9E3779B97F4A7C15ULL;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    uint8_t next_byte() {
        if (left == 0) {
            word = next_u64();
            left = 8;
        }
        uint8_t b = static_cast<uint8_t>(word & 0xFF);
        word >>= 8;
        --left;
        return b;
    }
};

// Per-sample seed: keyed hash of the global seed with the sample identity,
// so results cannot depend on worker count or processing order.
inline uint64_t derive_seed(uint64_t global_seed, std::string_view source_file,
                            std::string_view unit_key, uint32_t window_index) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (int shift = 0; shift < 64; shift += 8) {
        h ^= (global_seed >> shift) & 0xFF;
        h *= 0x100000001b3ULL;
    }
    h = fnv1a64(source_file, h);
    h = fnv1a64(std::string_view("\x1f", 1), h);
    h = fnv1a64(unit_key, h);
    h = fnv1a64(std::string_view("\x1f", 1), h);
    for (int shift = 0; shift < 32; shift += 8) {
        h ^= (window_index >> shift) & 0xFF;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace ntc
