#include "ntc/packet.hpp"

#include <algorithm>

#include "ntc/tls.hpp"

namespace ntc {

std::string ipv4_to_string(uint32_t ip) {
    return std::to_string(ip >> 24) + "." + std::to_string((ip >> 16) & 0xFF) + "." +
           std::to_string((ip >> 8) & 0xFF) + "." + std::to_string(ip & 0xFF);
}

std::string hex_u16(uint16_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s = "0x";
    for (int shift = 12; shift >= 0; shift -= 4)
        s += digits[(v >> shift) & 0xF];
    return s;
}

std::string FiveTuple::str() const {
    return std::string(protocol == Protocol::TCP ? "tcp" : "udp") + ":" + ipv4_to_string(src_ip) +
           ":" + std::to_string(src_port) + ">" + ipv4_to_string(dst_ip) + ":" +
           std::to_string(dst_port);
}

const std::optional<ByteRange>& field_of(const FieldMap& map, FieldId id) {
    return field_of(const_cast<FieldMap&>(map), id);
}

std::optional<ByteRange>& field_of(FieldMap& map, FieldId id) {
    switch (id) {
        case FieldId::MacDst: return map.mac_dst;
        case FieldId::MacSrc: return map.mac_src;
        case FieldId::IpSrc: return map.ip_src;
        case FieldId::IpDst: return map.ip_dst;
        case FieldId::IpId: return map.ip_id;
        case FieldId::IpChecksum: return map.ip_checksum;
        case FieldId::TcpSrcPort: return map.tcp_src_port;
        case FieldId::TcpDstPort: return map.tcp_dst_port;
        case FieldId::TcpSeq: return map.tcp_seq;
        case FieldId::TcpAck: return map.tcp_ack;
        case FieldId::TcpWindow: return map.tcp_window;
        case FieldId::TcpTsVal: return map.tcp_ts_val;
        case FieldId::TcpTsEcr: return map.tcp_ts_ecr;
        case FieldId::TcpOptionsFull: return map.tcp_options_full;
        case FieldId::UdpSrcPort: return map.udp_src_port;
        case FieldId::UdpDstPort: return map.udp_dst_port;
        case FieldId::Payload: return map.payload;
        case FieldId::Sni: return map.sni;
    }
    return map.payload;  // unreachable
}

std::string_view field_name(FieldId id) {
    switch (id) {
        case FieldId::MacDst: return "mac_dst";
        case FieldId::MacSrc: return "mac_src";
        case FieldId::IpSrc: return "ip_src";
        case FieldId::IpDst: return "ip_dst";
        case FieldId::IpId: return "ip_id";
        case FieldId::IpChecksum: return "ip_checksum";
        case FieldId::TcpSrcPort: return "tcp_src_port";
        case FieldId::TcpDstPort: return "tcp_dst_port";
        case FieldId::TcpSeq: return "tcp_seq";
        case FieldId::TcpAck: return "tcp_ack";
        case FieldId::TcpWindow: return "tcp_window";
        case FieldId::TcpTsVal: return "tcp_ts_val";
        case FieldId::TcpTsEcr: return "tcp_ts_ecr";
        case FieldId::TcpOptionsFull: return "tcp_options_full";
        case FieldId::UdpSrcPort: return "udp_src_port";
        case FieldId::UdpDstPort: return "udp_dst_port";
        case FieldId::Payload: return "payload";
        case FieldId::Sni: return "sni";
    }
    return "?";
}

namespace {

constexpr uint16_t kEtherIpv4 = 0x0800;
constexpr uint16_t kEtherVlan = 0x8100;
constexpr uint8_t kTcpOptEnd = 0, kTcpOptNop = 1, kTcpOptTimestamp = 8;

ByteRange range(size_t off, size_t len) {
    return {static_cast<uint32_t>(off), static_cast<uint32_t>(len)};
}

// Walk the options list for the timestamp option. A zero or overrunning
// length byte ends the walk; garbage options do not invalidate the frame.
void locate_tcp_timestamps(std::span<const uint8_t> data, size_t opt_off, size_t opt_len,
                           FieldMap& fields) {
    size_t pos = opt_off;
    size_t end = opt_off + opt_len;
    while (pos < end) {
        uint8_t kind = data[pos];
        if (kind == kTcpOptEnd)
            return;
        if (kind == kTcpOptNop) {
            ++pos;
            continue;
        }
        if (pos + 2 > end)
            return;
        uint8_t len = data[pos + 1];
        if (len < 2 || pos + len > end)
            return;
        if (kind == kTcpOptTimestamp && len == 10) {
            fields.tcp_ts_val = range(pos + 2, 4);
            fields.tcp_ts_ecr = range(pos + 6, 4);
            return;
        }
        pos += len;
    }
}

}  // namespace

ParsedPacket parse_packet(pcap::RawPacket raw) {
    ParsedPacket pp;
    pp.raw = std::move(raw);
    std::span<const uint8_t> data(pp.raw.data);
    const size_t n = data.size();

    if (n < 14) {
        pp.malformed = true;
        return pp;
    }
    pp.fields.mac_dst = range(0, 6);
    pp.fields.mac_src = range(6, 6);

    size_t l3 = 14;
    uint16_t ethertype = rd16be(data, 12);
    if (ethertype == kEtherVlan) {
        if (n < 18) {
            pp.malformed = true;
            return pp;
        }
        ethertype = rd16be(data, 16);
        l3 = 18;
    }
    if (ethertype != kEtherIpv4)
        return pp;  // ARP, IPv6, ... : L2 ranges only

    if (l3 + 20 > n) {
        pp.malformed = true;
        return pp;
    }
    uint8_t vihl = data[l3];
    size_t ihl = static_cast<size_t>(vihl & 0x0F) * 4;
    uint16_t total_len = rd16be(data, l3 + 2);
    if ((vihl >> 4) != 4 || ihl < 20 || l3 + ihl > n || total_len < ihl) {
        pp.malformed = true;
        return pp;
    }

    pp.fields.ip_id = range(l3 + 4, 2);
    pp.fields.ip_checksum = range(l3 + 10, 2);
    pp.fields.ip_src = range(l3 + 12, 4);
    pp.fields.ip_dst = range(l3 + 16, 4);

    uint8_t proto = data[l3 + 9];
    uint16_t frag_offset = rd16be(data, l3 + 6) & 0x1FFF;
    const size_t l4 = l3 + ihl;
    // The IP total length is a semantic claim that snaplen slicing routinely
    // breaks, so it only clamps the payload; structural offsets must fit.
    const size_t ip_end = std::min<size_t>(l3 + total_len, n);

    if (frag_offset != 0) {
        // Non-first fragment: payload-opaque, no L4 interpretation.
        pp.fragment = true;
        if (ip_end > l4)
            pp.fields.payload = range(l4, ip_end - l4);
        return pp;
    }

    if (proto == static_cast<uint8_t>(Protocol::TCP)) {
        if (l4 + 20 > n) {
            pp.malformed = true;
            return pp;
        }
        size_t doff = static_cast<size_t>(data[l4 + 12] >> 4) * 4;
        if (doff < 20 || l4 + doff > n) {
            pp.malformed = true;
            return pp;
        }
        pp.fields.tcp_src_port = range(l4, 2);
        pp.fields.tcp_dst_port = range(l4 + 2, 2);
        pp.fields.tcp_seq = range(l4 + 4, 4);
        pp.fields.tcp_ack = range(l4 + 8, 4);
        pp.fields.tcp_window = range(l4 + 14, 2);
        pp.tcp_flags = data[l4 + 13];
        if (doff > 20) {
            pp.fields.tcp_options_full = range(l4 + 20, doff - 20);
            locate_tcp_timestamps(data, l4 + 20, doff - 20, pp.fields);
        }
        size_t payload_off = l4 + doff;
        if (ip_end > payload_off)
            pp.fields.payload = range(payload_off, ip_end - payload_off);
        pp.tuple = FiveTuple{rd32be(data, l3 + 12), rd32be(data, l3 + 16), rd16be(data, l4),
                             rd16be(data, l4 + 2), Protocol::TCP};
    } else if (proto == static_cast<uint8_t>(Protocol::UDP)) {
        if (l4 + 8 > n) {
            pp.malformed = true;
            return pp;
        }
        uint16_t udp_len = rd16be(data, l4 + 4);
        if (udp_len < 8) {
            pp.malformed = true;
            return pp;
        }
        pp.fields.udp_src_port = range(l4, 2);
        pp.fields.udp_dst_port = range(l4 + 2, 2);
        size_t payload_off = l4 + 8;
        size_t payload_end = std::min<size_t>(l4 + udp_len, ip_end);
        if (payload_end > payload_off)
            pp.fields.payload = range(payload_off, payload_end - payload_off);
        pp.tuple = FiveTuple{rd32be(data, l3 + 12), rd32be(data, l3 + 16), rd16be(data, l4),
                             rd16be(data, l4 + 2), Protocol::UDP};
    } else {
        // Other IP protocols carry no occludable L3/L4 fields downstream.
        pp.fields = FieldMap{};
        pp.fields.mac_dst = range(0, 6);
        pp.fields.mac_src = range(6, 6);
        return pp;
    }

    if (pp.fields.payload) {
        std::span<const uint8_t> payload =
            data.subspan(pp.fields.payload->offset, pp.fields.payload->length);
        auto infos = pp.tuple->protocol == Protocol::TCP ? tls::parse_tls_records(payload)
                                                         : tls::parse_dtls_records(payload);
        for (const tls::HandshakeInfo& info : infos) {
            if (info.role == tls::HandshakeInfo::Role::ClientHello && info.sni_range) {
                pp.fields.sni =
                    range(pp.fields.payload->offset + info.sni_range->offset,
                          info.sni_range->length);
                break;
            }
        }
    }
    return pp;
}

}  // namespace ntc
