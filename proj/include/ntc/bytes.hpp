#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ntc {

using Bytes = std::vector<uint8_t>;

// Half-open byte span, (offset, length), relative to some enclosing buffer.
struct ByteRange {
    uint32_t offset = 0;
    uint32_t length = 0;

    uint32_t end() const { return offset + length; }
    bool empty() const { return length == 0; }
    bool contains(const ByteRange& inner) const {
        return inner.offset >= offset && inner.end() <= end();
    }
    bool overlaps(const ByteRange& other) const {
        return offset < other.end() && other.offset < end();
    }
    bool within(size_t buffer_size) const { return end() <= buffer_size; }

    friend bool operator==(const ByteRange&, const ByteRange&) = default;
};

inline uint16_t rd16be(std::span<const uint8_t> b, size_t off) {
    return static_cast<uint16_t>(b[off] << 8 | b[off + 1]);
}

inline uint32_t rd32be(std::span<const uint8_t> b, size_t off) {
    return static_cast<uint32_t>(b[off]) << 24 | static_cast<uint32_t>(b[off + 1]) << 16 |
           static_cast<uint32_t>(b[off + 2]) << 8 | static_cast<uint32_t>(b[off + 3]);
}

inline uint32_t rd24be(std::span<const uint8_t> b, size_t off) {
    return static_cast<uint32_t>(b[off]) << 16 | static_cast<uint32_t>(b[off + 1]) << 8 |
           static_cast<uint32_t>(b[off + 2]);
}

// FNV-1a, used for stable non-cryptographic digests (manifests, seed derivation).
inline uint64_t fnv1a64(std::span<const uint8_t> data, uint64_t h = 0xcbf29ce484222325ULL) {
    for (uint8_t b : data) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a64(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(s.data()), s.size()),
                   h);
}

std::string ipv4_to_string(uint32_t ip);
std::string hex_u16(uint16_t v);

}  // namespace ntc
