#include "ntc/tls.hpp"

#include <algorithm>
#include <functional>

namespace ntc::tls {

namespace {

constexpr uint16_t kExtServerName = 0;

bool plausible_header(std::span<const uint8_t> s, size_t off) {
    if (off + 5 > s.size())
        return false;
    uint8_t type = s[off];
    if (type < kChangeCipherSpec || type > kApplicationData)
        return false;
    uint16_t version = rd16be(s, off + 1);
    if (version < 0x0300 || version > 0x0304)  // SSLv3 through the TLS 1.3 record version
        return false;
    uint16_t len = rd16be(s, off + 3);
    return len >= 1 && len <= kMaxPlausibleRecordLen;
}

struct Chain {
    std::vector<RecordView> records;
    size_t end = 0;
    bool first_complete = false;
};

Chain chain_from(std::span<const uint8_t> s, size_t off) {
    Chain c;
    size_t pos = off;
    while (plausible_header(s, pos)) {
        uint16_t len = rd16be(s, pos + 3);
        size_t body = pos + 5;
        size_t avail = std::min<size_t>(len, s.size() - body);
        c.records.push_back({s[pos], rd16be(s, pos + 1),
                             {static_cast<uint32_t>(body), static_cast<uint32_t>(avail)}});
        if (c.records.size() == 1)
            c.first_complete = avail == len;
        if (avail < len)
            break;  // clipped at stream end
        pos = body + len;
    }
    c.end = pos;
    return c;
}

struct Cursor {
    std::span<const uint8_t> b;
    size_t pos = 0;
    bool ok = true;

    bool need(size_t n) {
        if (!ok || pos + n > b.size())
            ok = false;
        return ok;
    }
    uint8_t u8() { return need(1) ? b[pos++] : 0; }
    uint16_t u16() {
        if (!need(2))
            return 0;
        uint16_t v = rd16be(b, pos);
        pos += 2;
        return v;
    }
    void skip(size_t n) {
        if (need(n))
            pos += n;
    }
};

// Extension walk shared by the TLS and DTLS hello parsers. `base` converts a
// position inside `cur.b` into the caller's stream coordinate space.
void parse_extensions(Cursor& cur, HandshakeInfo& info,
                      const std::function<std::optional<uint32_t>(size_t, size_t)>& base) {
    if (cur.pos >= cur.b.size())
        return;  // extensions are optional
    uint16_t total = cur.u16();
    size_t ext_end = std::min(cur.pos + total, cur.b.size());
    while (cur.ok && cur.pos + 4 <= ext_end) {
        uint16_t ext_type = cur.u16();
        uint16_t ext_len = cur.u16();
        if (cur.pos + ext_len > ext_end)
            break;
        if (ext_type == kExtServerName && ext_len >= 5) {
            Cursor sn{cur.b.subspan(cur.pos, ext_len)};
            sn.u16();  // server_name_list length
            while (sn.ok && sn.pos + 3 <= sn.b.size()) {
                uint8_t name_type = sn.u8();
                uint16_t name_len = sn.u16();
                if (!sn.need(name_len))
                    break;
                if (name_type == 0 && !info.sni_host) {
                    size_t host_pos = cur.pos + sn.pos;
                    info.sni_host.emplace(reinterpret_cast<const char*>(cur.b.data()) + host_pos,
                                          name_len);
                    if (auto off = base(host_pos, name_len))
                        info.sni_range = ByteRange{*off, name_len};
                }
                sn.skip(name_len);
            }
        }
        cur.skip(ext_len);
    }
}

HandshakeInfo parse_client_hello(std::span<const uint8_t> body, bool dtls,
                                 const std::function<std::optional<uint32_t>(size_t, size_t)>& base) {
    HandshakeInfo info;
    info.role = HandshakeInfo::Role::ClientHello;
    Cursor cur{body};
    info.legacy_version = cur.u16();
    cur.skip(32);          // random
    cur.skip(cur.u8());    // legacy_session_id
    if (dtls)
        cur.skip(cur.u8());  // cookie
    cur.skip(cur.u16());   // cipher_suites
    cur.skip(cur.u8());    // compression_methods
    if (cur.ok)
        parse_extensions(cur, info, base);
    return info;
}

HandshakeInfo parse_server_hello(std::span<const uint8_t> body) {
    HandshakeInfo info;
    info.role = HandshakeInfo::Role::ServerHello;
    Cursor cur{body};
    info.legacy_version = cur.u16();
    cur.skip(32);
    cur.skip(cur.u8());
    uint16_t suite = cur.u16();
    if (cur.ok)
        info.cipher_suite = suite;
    return info;
}

}  // namespace

std::vector<RecordView> find_records(std::span<const uint8_t> stream) {
    if (plausible_header(stream, 0))
        return chain_from(stream, 0).records;
    // Mid-stream upgrade: demand stronger evidence than a single header.
    for (size_t off = 1; off + 5 <= stream.size(); ++off) {
        if (!plausible_header(stream, off))
            continue;
        Chain c = chain_from(stream, off);
        if (c.first_complete && (c.records.size() >= 2 || c.end == stream.size()))
            return c.records;
    }
    return {};
}

std::vector<HandshakeInfo> parse_tls_records(std::span<const uint8_t> stream) {
    std::vector<HandshakeInfo> out;
    std::vector<RecordView> records = find_records(stream);

    // Handshake messages may span records; reassemble type-22 bodies while
    // remembering where each byte came from so SNI ranges can be mapped back.
    Bytes hs;
    std::vector<uint32_t> origin;
    for (const RecordView& r : records) {
        if (r.content_type != kHandshake)
            continue;
        for (uint32_t i = 0; i < r.body.length; ++i) {
            hs.push_back(stream[r.body.offset + i]);
            origin.push_back(r.body.offset + i);
        }
    }

    auto to_stream = [&](size_t msg_base) {
        return [&origin, msg_base](size_t pos, size_t len) -> std::optional<uint32_t> {
            size_t start = msg_base + pos;
            if (start + len > origin.size())
                return std::nullopt;
            for (size_t i = 1; i < len; ++i)
                if (origin[start + i] != origin[start] + i)
                    return std::nullopt;  // split across records
            return origin[start];
        };
    };

    size_t pos = 0;
    while (pos + 4 <= hs.size()) {
        uint8_t msg_type = hs[pos];
        uint32_t msg_len = rd24be(hs, pos + 1);
        if (pos + 4 + msg_len > hs.size())
            break;  // truncated by a gap or the capture end
        std::span<const uint8_t> body(hs.data() + pos + 4, msg_len);
        if (msg_type == 1) {
            out.push_back(parse_client_hello(body, false, to_stream(pos + 4)));
        } else if (msg_type == 2) {
            out.push_back(parse_server_hello(body));
        } else {
            HandshakeInfo other;
            other.role = HandshakeInfo::Role::Other;
            out.push_back(other);
        }
        pos += 4 + msg_len;
    }
    return out;
}

std::vector<HandshakeInfo> parse_dtls_records(std::span<const uint8_t> datagram) {
    std::vector<HandshakeInfo> out;
    size_t pos = 0;
    while (pos + 13 <= datagram.size()) {
        uint8_t type = datagram[pos];
        uint16_t version = rd16be(datagram, pos + 1);
        uint16_t len = rd16be(datagram, pos + 11);
        if (type < kChangeCipherSpec || type > kApplicationData ||
            (version != 0xFEFF && version != 0xFEFD) || pos + 13 + len > datagram.size())
            break;
        if (type == kHandshake && len >= 12) {
            std::span<const uint8_t> msg = datagram.subspan(pos + 13, len);
            uint8_t msg_type = msg[0];
            uint32_t msg_len = rd24be(msg, 1);
            uint32_t frag_off = rd24be(msg, 6);
            uint32_t frag_len = rd24be(msg, 9);
            // Only whole, unfragmented messages are examined.
            if (frag_off == 0 && frag_len == msg_len && 12 + msg_len <= msg.size()) {
                std::span<const uint8_t> body = msg.subspan(12, msg_len);
                size_t body_base = pos + 13 + 12;
                if (msg_type == 1) {
                    out.push_back(parse_client_hello(
                        body, true, [body_base](size_t p, size_t) -> std::optional<uint32_t> {
                            return static_cast<uint32_t>(body_base + p);
                        }));
                } else if (msg_type == 2) {
                    out.push_back(parse_server_hello(body));
                }
            }
        }
        pos += 13 + len;
    }
    return out;
}

UdpEncryption detect_udp_encryption(const std::vector<std::span<const uint8_t>>& payloads) {
    for (std::span<const uint8_t> p : payloads) {
        if (p.size() >= 7 && (p[0] & 0x80)) {
            uint32_t version = rd32be(p, 1);
            bool recognized = version == 0x00000001   // QUIC v1
                              || version == 0x6b3343cf  // QUIC v2
                              || version == 0x00000000  // version negotiation
                              || (version & 0xFFFFFF00) == 0xFF000000;  // drafts
            if (recognized)
                return UdpEncryption::QUIC;
        }
        if (p.size() >= 13 && p[0] >= kChangeCipherSpec && p[0] <= kApplicationData &&
            p[1] == 0xFE && (p[2] == 0xFF || p[2] == 0xFD))
            return UdpEncryption::DTLS;
    }
    return UdpEncryption::None;
}

Bytes reassemble(std::vector<Segment> segments) {
    std::stable_sort(segments.begin(), segments.end(),
                     [](const Segment& a, const Segment& b) { return a.seq < b.seq; });
    Bytes out;
    bool have_expected = false;
    uint32_t expected = 0;
    for (const Segment& s : segments) {
        if (s.payload.empty())
            continue;
        if (!have_expected) {
            expected = s.seq;
            have_expected = true;
        }
        if (s.seq == expected) {
            out.insert(out.end(), s.payload.begin(), s.payload.end());
            expected += static_cast<uint32_t>(s.payload.size());
        } else if (s.seq < expected) {
            continue;  // duplicate or overlap, first copy wins
        } else {
            break;  // gap: handshake parsing stops here for this direction
        }
    }
    return out;
}

}  // namespace ntc::tls
