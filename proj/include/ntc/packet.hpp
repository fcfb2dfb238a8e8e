#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "ntc/bytes.hpp"
#include "ntc/pcap.hpp"

namespace ntc {

enum class Protocol : uint8_t { TCP = 6, UDP = 17 };

struct FiveTuple {
    uint32_t src_ip = 0;
    uint32_t dst_ip = 0;
    uint16_t src_port = 0;
    uint16_t dst_port = 0;
    Protocol protocol = Protocol::TCP;

    FiveTuple reversed() const { return {dst_ip, src_ip, dst_port, src_port, protocol}; }
    std::string str() const;

    friend bool operator==(const FiveTuple&, const FiveTuple&) = default;
    friend auto operator<=>(const FiveTuple&, const FiveTuple&) = default;
};

// Byte-range index of every occludable protocol field within one frame,
// offsets relative to the frame start. Ranges never overlap except that the
// TCP timestamp halves lie inside tcp_options_full and the SNI hostname lies
// inside the transport payload.
struct FieldMap {
    std::optional<ByteRange> mac_dst, mac_src;                                   // L2
    std::optional<ByteRange> ip_src, ip_dst, ip_id, ip_checksum;                 // L3
    std::optional<ByteRange> tcp_src_port, tcp_dst_port, tcp_seq, tcp_ack,       // L4 (TCP)
        tcp_window, tcp_ts_val, tcp_ts_ecr, tcp_options_full;
    std::optional<ByteRange> udp_src_port, udp_dst_port;                         // L4 (UDP)
    std::optional<ByteRange> payload;                                            // L7
    std::optional<ByteRange> sni;  // hostname bytes of a ClientHello server_name extension
};

enum class FieldId : uint8_t {
    MacDst,
    MacSrc,
    IpSrc,
    IpDst,
    IpId,
    IpChecksum,
    TcpSrcPort,
    TcpDstPort,
    TcpSeq,
    TcpAck,
    TcpWindow,
    TcpTsVal,
    TcpTsEcr,
    TcpOptionsFull,
    UdpSrcPort,
    UdpDstPort,
    Payload,
    Sni,
};
constexpr std::array<FieldId, 18> kAllFields = {
    FieldId::MacDst,     FieldId::MacSrc,     FieldId::IpSrc,        FieldId::IpDst,
    FieldId::IpId,       FieldId::IpChecksum, FieldId::TcpSrcPort,   FieldId::TcpDstPort,
    FieldId::TcpSeq,     FieldId::TcpAck,     FieldId::TcpWindow,    FieldId::TcpTsVal,
    FieldId::TcpTsEcr,   FieldId::TcpOptionsFull, FieldId::UdpSrcPort, FieldId::UdpDstPort,
    FieldId::Payload,    FieldId::Sni,
};

const std::optional<ByteRange>& field_of(const FieldMap& map, FieldId id);
std::optional<ByteRange>& field_of(FieldMap& map, FieldId id);
std::string_view field_name(FieldId id);

namespace tcpflag {
constexpr uint8_t kFin = 0x01, kSyn = 0x02, kRst = 0x04, kPsh = 0x08, kAck = 0x10, kUrg = 0x20;
}

struct ParsedPacket {
    pcap::RawPacket raw;
    std::optional<FiveTuple> tuple;
    FieldMap fields;
    uint8_t tcp_flags = 0;
    bool malformed = false;  // structural header claims exceed captured bytes
    bool fragment = false;   // non-first IPv4 fragment, carried payload-opaque
};

// Exact field offsets per the RFC 791 / RFC 9293 layouts, honoring IHL and
// the TCP data offset. One 802.1Q tag is skipped. Non-IPv4 frames and frames
// whose structural lengths exceed the captured bytes come back with the
// tuple absent and only the L2 ranges populated.
ParsedPacket parse_packet(pcap::RawPacket raw);

}  // namespace ntc
