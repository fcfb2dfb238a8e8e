#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ntc/errors.hpp"
#include "ntc/packet.hpp"

namespace ntc {

struct Endpoint {
    uint32_t ip = 0;
    uint16_t port = 0;

    friend bool operator==(const Endpoint&, const Endpoint&) = default;
    friend auto operator<=>(const Endpoint&, const Endpoint&) = default;
};

// Bidirectional conversation identity. endpoint_a is the initiator: the
// sender of the first observed packet, except that a leading SYN-ACK marks
// its receiver as initiator, and a mid-capture start (TCP without any SYN
// evidence) falls back to the lexicographically smaller endpoint.
struct SessionKey {
    Endpoint endpoint_a;
    Endpoint endpoint_b;
    Protocol protocol = Protocol::TCP;

    std::string str() const;
    std::string file_safe() const;

    friend bool operator==(const SessionKey&, const SessionKey&) = default;
};

enum class UnitKind { Packet, Burst, Flow, Session };

using UnitKey = std::variant<SessionKey, FiveTuple, uint32_t>;

// An ordered packet group at one granularity. Packets are indices into the
// parsed stream the unit was built from, ordered by (ts, file index).
struct TrafficUnit {
    UnitKind kind = UnitKind::Session;
    UnitKey key;
    std::vector<uint32_t> packets;

    std::string key_str() const;
};

// Partitions of the tuple-bearing packets; units appear in order of their
// first packet. Input order is file order; members are re-sorted by
// timestamp with the file index as tie-break.
std::vector<TrafficUnit> split_sessions(std::span<const ParsedPacket> stream);
std::vector<TrafficUnit> split_flows(std::span<const ParsedPacket> stream);

// Same partitions restricted to an already time-ordered member list (for
// deriving sub-units of a session).
std::vector<TrafficUnit> split_flows(std::span<const ParsedPacket> stream,
                                     std::span<const uint32_t> ordered);
std::vector<TrafficUnit> split_packets(std::span<const ParsedPacket> stream,
                                       std::span<const uint32_t> ordered);

// Burst rule: packet i opens a new burst iff i == 0 or its gap to the
// previous packet exceeds `gap` seconds (boundary gaps equal to `gap` stay
// inside the burst). `ordered` must already be (ts, index) sorted.
std::vector<TrafficUnit> split_bursts(std::span<const ParsedPacket> stream,
                                      std::span<const uint32_t> ordered, double gap);

// Bursts over every frame of the capture, timestamps only.
std::vector<TrafficUnit> split_bursts_global(std::span<const ParsedPacket> stream, double gap);

// One unit per tuple-bearing packet.
std::vector<TrafficUnit> split_packets(std::span<const ParsedPacket> stream);

}  // namespace ntc
