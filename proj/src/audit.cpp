#include "ntc/audit.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "ntc/pcap.hpp"

namespace ntc::audit {

const std::map<uint16_t, SuiteInfo>& suite_registry() {
    static const std::map<uint16_t, SuiteInfo> registry = {
        // TLS 1.3 (RFC 8446)
        {0x1301, {"TLS_AES_128_GCM_SHA256", "AES-128-GCM"}},
        {0x1302, {"TLS_AES_256_GCM_SHA384", "AES-256-GCM"}},
        {0x1303, {"TLS_CHACHA20_POLY1305_SHA256", "CHACHA20-POLY1305"}},
        {0x1304, {"TLS_AES_128_CCM_SHA256", "OTHER"}},
        {0x1305, {"TLS_AES_128_CCM_8_SHA256", "OTHER"}},
        // AES-GCM
        {0x009C, {"TLS_RSA_WITH_AES_128_GCM_SHA256", "AES-128-GCM"}},
        {0x009D, {"TLS_RSA_WITH_AES_256_GCM_SHA384", "AES-256-GCM"}},
        {0x009E, {"TLS_DHE_RSA_WITH_AES_128_GCM_SHA256", "AES-128-GCM"}},
        {0x009F, {"TLS_DHE_RSA_WITH_AES_256_GCM_SHA384", "AES-256-GCM"}},
        {0x00A2, {"TLS_DHE_DSS_WITH_AES_128_GCM_SHA256", "AES-128-GCM"}},
        {0x00A3, {"TLS_DHE_DSS_WITH_AES_256_GCM_SHA384", "AES-256-GCM"}},
        {0x00A8, {"TLS_PSK_WITH_AES_128_GCM_SHA256", "AES-128-GCM"}},
        {0x00A9, {"TLS_PSK_WITH_AES_256_GCM_SHA384", "AES-256-GCM"}},
        {0xC02B, {"TLS_ECDHE_ECDSA_WITH_AES_128_GCM_SHA256", "AES-128-GCM"}},
        {0xC02C, {"TLS_ECDHE_ECDSA_WITH_AES_256_GCM_SHA384", "AES-256-GCM"}},
        {0xC02F, {"TLS_ECDHE_RSA_WITH_AES_128_GCM_SHA256", "AES-128-GCM"}},
        {0xC030, {"TLS_ECDHE_RSA_WITH_AES_256_GCM_SHA384", "AES-256-GCM"}},
        // ChaCha20-Poly1305 (RFC 7905)
        {0xCCA8, {"TLS_ECDHE_RSA_WITH_CHACHA20_POLY1305_SHA256", "CHACHA20-POLY1305"}},
        {0xCCA9, {"TLS_ECDHE_ECDSA_WITH_CHACHA20_POLY1305_SHA256", "CHACHA20-POLY1305"}},
        {0xCCAA, {"TLS_DHE_RSA_WITH_CHACHA20_POLY1305_SHA256", "CHACHA20-POLY1305"}},
        {0xCCAB, {"TLS_PSK_WITH_CHACHA20_POLY1305_SHA256", "CHACHA20-POLY1305"}},
        {0xCCAC, {"TLS_ECDHE_PSK_WITH_CHACHA20_POLY1305_SHA256", "CHACHA20-POLY1305"}},
        // AES-CBC 128
        {0x002F, {"TLS_RSA_WITH_AES_128_CBC_SHA", "AES-128-CBC"}},
        {0x0032, {"TLS_DHE_DSS_WITH_AES_128_CBC_SHA", "AES-128-CBC"}},
        {0x0033, {"TLS_DHE_RSA_WITH_AES_128_CBC_SHA", "AES-128-CBC"}},
        {0x003C, {"TLS_RSA_WITH_AES_128_CBC_SHA256", "AES-128-CBC"}},
        {0x0040, {"TLS_DHE_DSS_WITH_AES_128_CBC_SHA256", "AES-128-CBC"}},
        {0x0067, {"TLS_DHE_RSA_WITH_AES_128_CBC_SHA256", "AES-128-CBC"}},
        {0x008C, {"TLS_PSK_WITH_AES_128_CBC_SHA", "AES-128-CBC"}},
        {0xC004, {"TLS_ECDH_ECDSA_WITH_AES_128_CBC_SHA", "AES-128-CBC"}},
        {0xC009, {"TLS_ECDHE_ECDSA_WITH_AES_128_CBC_SHA", "AES-128-CBC"}},
        {0xC00E, {"TLS_ECDH_RSA_WITH_AES_128_CBC_SHA", "AES-128-CBC"}},
        {0xC013, {"TLS_ECDHE_RSA_WITH_AES_128_CBC_SHA", "AES-128-CBC"}},
        {0xC023, {"TLS_ECDHE_ECDSA_WITH_AES_128_CBC_SHA256", "AES-128-CBC"}},
        {0xC027, {"TLS_ECDHE_RSA_WITH_AES_128_CBC_SHA256", "AES-128-CBC"}},
        // AES-CBC 256
        {0x0035, {"TLS_RSA_WITH_AES_256_CBC_SHA", "AES-256-CBC"}},
        {0x0038, {"TLS_DHE_DSS_WITH_AES_256_CBC_SHA", "AES-256-CBC"}},
        {0x0039, {"TLS_DHE_RSA_WITH_AES_256_CBC_SHA", "AES-256-CBC"}},
        {0x003D, {"TLS_RSA_WITH_AES_256_CBC_SHA256", "AES-256-CBC"}},
        {0x006A, {"TLS_DHE_DSS_WITH_AES_256_CBC_SHA256", "AES-256-CBC"}},
        {0x006B, {"TLS_DHE_RSA_WITH_AES_256_CBC_SHA256", "AES-256-CBC"}},
        {0x008D, {"TLS_PSK_WITH_AES_256_CBC_SHA", "AES-256-CBC"}},
        {0xC005, {"TLS_ECDH_ECDSA_WITH_AES_256_CBC_SHA", "AES-256-CBC"}},
        {0xC00A, {"TLS_ECDHE_ECDSA_WITH_AES_256_CBC_SHA", "AES-256-CBC"}},
        {0xC00F, {"TLS_ECDH_RSA_WITH_AES_256_CBC_SHA", "AES-256-CBC"}},
        {0xC014, {"TLS_ECDHE_RSA_WITH_AES_256_CBC_SHA", "AES-256-CBC"}},
        {0xC024, {"TLS_ECDHE_ECDSA_WITH_AES_256_CBC_SHA384", "AES-256-CBC"}},
        {0xC028, {"TLS_ECDHE_RSA_WITH_AES_256_CBC_SHA384", "AES-256-CBC"}},
        // 3DES
        {0x000A, {"TLS_RSA_WITH_3DES_EDE_CBC_SHA", "3DES"}},
        {0x0013, {"TLS_DHE_DSS_WITH_3DES_EDE_CBC_SHA", "3DES"}},
        {0x0016, {"TLS_DHE_RSA_WITH_3DES_EDE_CBC_SHA", "3DES"}},
        {0x008B, {"TLS_PSK_WITH_3DES_EDE_CBC_SHA", "3DES"}},
        {0xC003, {"TLS_ECDH_ECDSA_WITH_3DES_EDE_CBC_SHA", "3DES"}},
        {0xC008, {"TLS_ECDHE_ECDSA_WITH_3DES_EDE_CBC_SHA", "3DES"}},
        {0xC00D, {"TLS_ECDH_RSA_WITH_3DES_EDE_CBC_SHA", "3DES"}},
        {0xC012, {"TLS_ECDHE_RSA_WITH_3DES_EDE_CBC_SHA", "3DES"}},
        // RC4
        {0x0004, {"TLS_RSA_WITH_RC4_128_MD5", "RC4"}},
        {0x0005, {"TLS_RSA_WITH_RC4_128_SHA", "RC4"}},
        {0x008A, {"TLS_PSK_WITH_RC4_128_SHA", "RC4"}},
        {0xC002, {"TLS_ECDH_ECDSA_WITH_RC4_128_SHA", "RC4"}},
        {0xC007, {"TLS_ECDHE_ECDSA_WITH_RC4_128_SHA", "RC4"}},
        {0xC00C, {"TLS_ECDH_RSA_WITH_RC4_128_SHA", "RC4"}},
        {0xC011, {"TLS_ECDHE_RSA_WITH_RC4_128_SHA", "RC4"}},
    };
    return registry;
}

std::string_view algorithm_for(uint16_t suite_code) {
    const auto& reg = suite_registry();
    auto it = reg.find(suite_code);
    return it == reg.end() ? std::string_view("OTHER") : it->second.algorithm;
}

std::pair<Bytes, Bytes> session_directions(std::span<const ParsedPacket> stream,
                                           const TrafficUnit& unit) {
    const SessionKey& key = std::get<SessionKey>(unit.key);
    std::vector<tls::Segment> fwd_seg, rev_seg;
    Bytes fwd, rev;

    for (uint32_t idx : unit.packets) {
        const ParsedPacket& pkt = stream[idx];
        if (!pkt.tuple || !pkt.fields.payload)
            continue;
        std::span<const uint8_t> payload(pkt.raw.data.data() + pkt.fields.payload->offset,
                                         pkt.fields.payload->length);
        bool forward = pkt.tuple->src_ip == key.endpoint_a.ip &&
                       pkt.tuple->src_port == key.endpoint_a.port;
        if (pkt.tuple->protocol == Protocol::TCP) {
            uint32_t seq = rd32be(pkt.raw.data, pkt.fields.tcp_seq->offset);
            (forward ? fwd_seg : rev_seg).push_back({seq, payload});
        } else {
            Bytes& dir = forward ? fwd : rev;  // datagrams: arrival order as-is
            dir.insert(dir.end(), payload.begin(), payload.end());
        }
    }
    if (key.protocol == Protocol::TCP)
        return {tls::reassemble(std::move(fwd_seg)), tls::reassemble(std::move(rev_seg))};
    return {std::move(fwd), std::move(rev)};
}

Classification classify_session(std::span<const ParsedPacket> stream, const TrafficUnit& unit) {
    const SessionKey& key = std::get<SessionKey>(unit.key);

    if (key.protocol == Protocol::UDP) {
        std::vector<std::span<const uint8_t>> payloads;
        for (uint32_t idx : unit.packets) {
            const ParsedPacket& pkt = stream[idx];
            if (pkt.fields.payload)
                payloads.emplace_back(pkt.raw.data.data() + pkt.fields.payload->offset,
                                      pkt.fields.payload->length);
        }
        switch (tls::detect_udp_encryption(payloads)) {
            case tls::UdpEncryption::DTLS: return {true, EncryptionKind::DTLS};
            case tls::UdpEncryption::QUIC: return {true, EncryptionKind::QUIC};
            case tls::UdpEncryption::None: return {false, std::nullopt};
        }
    }

    auto [fwd, rev] = session_directions(stream, unit);
    if (!tls::find_records(fwd).empty() || !tls::find_records(rev).empty())
        return {true, EncryptionKind::TLS};
    return {false, std::nullopt};
}

std::optional<uint16_t> cipher_suite_of(std::span<const ParsedPacket> stream,
                                        const TrafficUnit& unit) {
    const SessionKey& key = std::get<SessionKey>(unit.key);

    if (key.protocol == Protocol::UDP) {
        // DTLS ServerHellos are parseable per datagram; QUIC stays unknown
        // (Initial packets are header-protected).
        for (uint32_t idx : unit.packets) {
            const ParsedPacket& pkt = stream[idx];
            if (!pkt.fields.payload)
                continue;
            std::span<const uint8_t> payload(pkt.raw.data.data() + pkt.fields.payload->offset,
                                             pkt.fields.payload->length);
            for (const tls::HandshakeInfo& info : tls::parse_dtls_records(payload))
                if (info.role == tls::HandshakeInfo::Role::ServerHello && info.cipher_suite)
                    return info.cipher_suite;
        }
        return std::nullopt;
    }

    auto [fwd, rev] = session_directions(stream, unit);
    for (const Bytes* dir : {&rev, &fwd}) {  // the responder usually speaks second
        for (const tls::HandshakeInfo& info : tls::parse_tls_records(*dir))
            if (info.role == tls::HandshakeInfo::Role::ServerHello && info.cipher_suite)
                return info.cipher_suite;
    }
    return std::nullopt;
}

void FileStats::add(const FileStats& other) {
    total_sessions += other.total_sessions;
    unencrypted += other.unencrypted;
    encrypted += other.encrypted;
    unknown += other.unknown;
    for (const auto& [algo, count] : other.per_algorithm)
        per_algorithm[algo] += count;
    packets += other.packets;
    fragmented_packets += other.fragmented_packets;
    malformed_packets += other.malformed_packets;
}

bool FileStats::consistent() const {
    uint64_t algo_total = 0;
    for (const auto& [algo, count] : per_algorithm)
        algo_total += count;
    return encrypted + unencrypted == total_sessions && unknown + algo_total == encrypted;
}

FileStats AuditStats::aggregate() const {
    FileStats agg;
    for (const auto& [path, stats] : per_file)
        agg.add(stats);
    return agg;
}

FileStats audit_file(const std::filesystem::path& path) {
    FileStats stats;
    pcap::CaptureFile capture = pcap::read_capture(path);

    std::vector<ParsedPacket> stream;
    stream.reserve(capture.packets.size());
    for (pcap::RawPacket& raw : capture.packets)
        stream.push_back(parse_packet(std::move(raw)));

    stats.packets = stream.size();
    for (const ParsedPacket& pkt : stream) {
        if (pkt.fragment)
            ++stats.fragmented_packets;
        if (pkt.malformed)
            ++stats.malformed_packets;
    }

    for (const TrafficUnit& session : split_sessions(stream)) {
        ++stats.total_sessions;
        Classification cls = classify_session(stream, session);
        if (!cls.encrypted) {
            ++stats.unencrypted;
            continue;
        }
        ++stats.encrypted;
        std::optional<uint16_t> suite = cipher_suite_of(stream, session);
        if (suite)
            ++stats.per_algorithm[std::string(algorithm_for(*suite))];
        else
            ++stats.unknown;
    }
    return stats;
}

AuditStats audit_dataset(const std::vector<std::filesystem::path>& paths, unsigned workers) {
    AuditStats out;
    out.per_file.resize(paths.size());
    if (workers == 0)
        workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, std::max<size_t>(paths.size(), 1));

    std::atomic<size_t> cursor{0};
    auto worker = [&] {
        for (size_t i = cursor.fetch_add(1); i < paths.size(); i = cursor.fetch_add(1)) {
            FileStats stats;
            try {
                stats = audit_file(paths[i]);
            } catch (const std::exception& e) {
                stats = FileStats{};
                stats.error = e.what();
            }
            out.per_file[i] = {paths[i].string(), std::move(stats)};
        }
    };

    std::vector<std::thread> threads;
    for (unsigned w = 1; w < workers; ++w)
        threads.emplace_back(worker);
    worker();
    for (std::thread& t : threads)
        t.join();
    return out;
}

namespace {

void csv_row(std::ostream& os, const std::string& name, const FileStats& s) {
    os << name << ',' << s.total_sessions << ',' << s.unencrypted << ',' << s.encrypted << ','
       << s.unknown;
    for (std::string_view algo : kAlgorithms) {
        auto it = s.per_algorithm.find(std::string(algo));
        os << ',' << (it == s.per_algorithm.end() ? 0 : it->second);
    }
    os << '\n';
}

std::string pct(uint64_t part, uint64_t whole) {
    if (whole == 0)
        return "0.0%";
    double v = 100.0 * static_cast<double>(part) / static_cast<double>(whole);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.1f%%", v);
    return buf;
}

}  // namespace

void write_csv(const AuditStats& stats, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os)
        throw IoFailure("cannot create " + path.string());
    os << "file,total,unencrypted,encrypted,unknown";
    for (std::string_view algo : kAlgorithms)
        os << ',' << algo;
    os << '\n';
    for (const auto& [name, s] : stats.per_file)
        csv_row(os, name, s);
    csv_row(os, "aggregate", stats.aggregate());
    if (!os)
        throw IoFailure("short write to " + path.string());
}

void write_json(const AuditStats& stats, const std::filesystem::path& path) {
    auto to_json = [](const FileStats& s) {
        nlohmann::ordered_json j;
        j["total_sessions"] = s.total_sessions;
        j["unencrypted"] = s.unencrypted;
        j["encrypted"] = s.encrypted;
        j["unknown"] = s.unknown;
        nlohmann::ordered_json algos;
        for (std::string_view algo : kAlgorithms) {
            auto it = s.per_algorithm.find(std::string(algo));
            algos[std::string(algo)] = it == s.per_algorithm.end() ? 0 : it->second;
        }
        j["per_algorithm"] = algos;
        j["packets"] = s.packets;
        j["fragmented_packets"] = s.fragmented_packets;
        j["malformed_packets"] = s.malformed_packets;
        if (s.error)
            j["error"] = *s.error;
        return j;
    };

    nlohmann::ordered_json j;
    j["aggregate"] = to_json(stats.aggregate());
    nlohmann::ordered_json files;
    for (const auto& [name, s] : stats.per_file)
        files[name] = to_json(s);
    j["per_file"] = files;

    std::ofstream os(path, std::ios::trunc);
    if (!os)
        throw IoFailure("cannot create " + path.string());
    os << j.dump(2) << '\n';
    if (!os)
        throw IoFailure("short write to " + path.string());
}

std::string render_text(const AuditStats& stats) {
    FileStats agg = stats.aggregate();
    std::string out;
    out += "files: " + std::to_string(stats.per_file.size()) + "\n";
    out += "sessions: " + std::to_string(agg.total_sessions) + "\n";
    out += "encryption usage: encrypted " + pct(agg.encrypted, agg.total_sessions) + " (" +
           std::to_string(agg.encrypted) + ") | unencrypted " +
           pct(agg.unencrypted, agg.total_sessions) + " (" + std::to_string(agg.unencrypted) +
           ")\n";
    out += "cipher algorithms (of encrypted):";
    bool any = false;
    for (std::string_view algo : kAlgorithms) {
        auto it = agg.per_algorithm.find(std::string(algo));
        if (it == agg.per_algorithm.end() || it->second == 0)
            continue;
        out += std::string(any ? " |" : "") + " " + std::string(algo) + " " +
               pct(it->second, agg.encrypted) + " (" + std::to_string(it->second) + ")";
        any = true;
    }
    if (agg.unknown > 0) {
        out += std::string(any ? " |" : "") + " unknown " + pct(agg.unknown, agg.encrypted) +
               " (" + std::to_string(agg.unknown) + ")";
        any = true;
    }
    if (!any)
        out += " none";
    out += "\n";
    for (const auto& [name, s] : stats.per_file)
        if (s.error)
            out += "error: " + name + ": " + *s.error + "\n";
    return out;
}

}  // namespace ntc::audit
