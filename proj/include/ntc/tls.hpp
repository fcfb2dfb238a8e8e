#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ntc/bytes.hpp"

namespace ntc::tls {

// Record content types that participate in the framing heuristic.
constexpr uint8_t kChangeCipherSpec = 20;
constexpr uint8_t kAlert = 21;
constexpr uint8_t kHandshake = 22;
constexpr uint8_t kApplicationData = 23;

// 2^14 payload plus the ciphertext expansion allowance of RFC 8446.
constexpr uint32_t kMaxPlausibleRecordLen = 16384 + 256;

struct RecordView {
    uint8_t content_type = 0;
    uint16_t version = 0;
    ByteRange body;  // within the scanned stream; may be clipped at stream end
};

// Framing-based record detection, never port-based. Tries offset 0 first,
// then scans forward so upgrades appearing mid-stream (STARTTLS style) are
// still caught. Mid-stream matches must chain into a second plausible record
// or consume the remainder, which keeps false positives on binary payloads
// negligible.
std::vector<RecordView> find_records(std::span<const uint8_t> stream);

struct HandshakeInfo {
    enum class Role { ClientHello, ServerHello, Other };
    Role role = Role::Other;
    uint16_t legacy_version = 0;
    std::optional<uint16_t> cipher_suite;  // ServerHello only
    std::optional<std::string> sni_host;   // ClientHello only
    // Hostname bytes within the scanned stream; present only when they are
    // contiguous there (a hostname split across two records has no range).
    std::optional<ByteRange> sni_range;
};

// Parses handshake messages (ClientHello / ServerHello) out of the record
// stream of one reassembled direction. No TLS evidence yields an empty list.
std::vector<HandshakeInfo> parse_tls_records(std::span<const uint8_t> stream);

// DTLS: same extraction against the 13-byte record layer.
std::vector<HandshakeInfo> parse_dtls_records(std::span<const uint8_t> datagram);

enum class UdpEncryption { None, DTLS, QUIC };

// DTLS by record framing (version 0xFEFF/0xFEFD), QUIC by the long-header
// form bit plus a recognized version field. A session whose first packet was
// a long header is QUIC even if later packets use short headers, which the
// any-payload scan subsumes.
UdpEncryption detect_udp_encryption(const std::vector<std::span<const uint8_t>>& payloads);

struct Segment {
    uint32_t seq = 0;  // TCP sequence number (or ordinal for UDP)
    std::span<const uint8_t> payload;
};

// Minimal one-direction reassembly: segments concatenated in sequence order,
// duplicate sequence numbers dropped, a gap ends the stream.
Bytes reassemble(std::vector<Segment> segments);

}  // namespace ntc::tls
