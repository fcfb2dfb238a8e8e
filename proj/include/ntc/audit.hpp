#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ntc/granularity.hpp"
#include "ntc/tls.hpp"

namespace ntc::audit {

// Fixed algorithm buckets of the report; anything else lands in OTHER.
constexpr std::array<std::string_view, 8> kAlgorithms = {
    "AES-128-GCM", "AES-256-GCM", "CHACHA20-POLY1305", "AES-128-CBC",
    "AES-256-CBC", "3DES",        "RC4",               "OTHER",
};

struct SuiteInfo {
    std::string_view name;       // IANA cipher-suite name
    std::string_view algorithm;  // one of kAlgorithms
};

// TLS 1.3 suites plus the legacy suites needed to bucket older captures.
const std::map<uint16_t, SuiteInfo>& suite_registry();
std::string_view algorithm_for(uint16_t suite_code);

enum class EncryptionKind { TLS, DTLS, QUIC };

struct Classification {
    bool encrypted = false;
    std::optional<EncryptionKind> kind;
};

// Presence-based: a TCP session is encrypted iff TLS record framing appears
// in either direction (any port, mid-session upgrades included); a UDP
// session iff DTLS or QUIC framing is detected.
Classification classify_session(std::span<const ParsedPacket> stream, const TrafficUnit& unit);

// The ServerHello's selected suite, when one is parseable; nullopt for
// handshake-less captures, resumed sessions, and QUIC.
std::optional<uint16_t> cipher_suite_of(std::span<const ParsedPacket> stream,
                                        const TrafficUnit& unit);

// Reassembled payload streams of the two directions of a session unit
// (initiator first). TCP directions are sequence-ordered; UDP keeps
// timestamp order.
std::pair<Bytes, Bytes> session_directions(std::span<const ParsedPacket> stream,
                                           const TrafficUnit& unit);

struct FileStats {
    uint64_t total_sessions = 0;
    uint64_t unencrypted = 0;
    uint64_t encrypted = 0;
    uint64_t unknown = 0;  // encrypted, suite undetermined
    std::map<std::string, uint64_t> per_algorithm;
    uint64_t packets = 0;
    uint64_t fragmented_packets = 0;
    uint64_t malformed_packets = 0;
    std::optional<std::string> error;  // file-level read failure

    void add(const FileStats& other);
    bool consistent() const;
};

struct AuditStats {
    std::vector<std::pair<std::string, FileStats>> per_file;
    FileStats aggregate() const;
};

FileStats audit_file(const std::filesystem::path& path);
AuditStats audit_dataset(const std::vector<std::filesystem::path>& paths, unsigned workers = 0);

// CSV: one row per file plus the aggregate; columns file, total,
// unencrypted, encrypted, unknown, then one column per algorithm.
void write_csv(const AuditStats& stats, const std::filesystem::path& path);
void write_json(const AuditStats& stats, const std::filesystem::path& path);

// Stacked-bar style text: percentage segments of encryption usage and of
// the per-algorithm distribution.
std::string render_text(const AuditStats& stats);

}  // namespace ntc::audit
