#include "ntc/granularity.hpp"

#include <algorithm>
#include <map>

namespace ntc {

namespace {

std::string endpoint_str(const Endpoint& e) {
    return ipv4_to_string(e.ip) + ":" + std::to_string(e.port);
}

// (ts, file index) order; file order is the index order.
std::vector<uint32_t> time_ordered_indices(std::span<const ParsedPacket> stream,
                                           bool tuple_bearing_only) {
    std::vector<uint32_t> idx;
    idx.reserve(stream.size());
    for (uint32_t i = 0; i < stream.size(); ++i)
        if (!tuple_bearing_only || stream[i].tuple)
            idx.push_back(i);
    std::stable_sort(idx.begin(), idx.end(), [&](uint32_t a, uint32_t b) {
        return stream[a].raw.seconds() < stream[b].raw.seconds();
    });
    return idx;
}

}  // namespace

std::string SessionKey::str() const {
    return std::string(protocol == Protocol::TCP ? "tcp" : "udp") + ":" +
           endpoint_str(endpoint_a) + "<>" + endpoint_str(endpoint_b);
}

std::string SessionKey::file_safe() const {
    std::string s = str();
    for (char& c : s)
        if (c == ':' || c == '<' || c == '>' || c == '.')
            c = c == '.' ? '-' : '_';
    return s;
}

std::string TrafficUnit::key_str() const {
    switch (kind) {
        case UnitKind::Session:
            return std::get<SessionKey>(key).str();
        case UnitKind::Flow:
            return std::get<FiveTuple>(key).str();
        case UnitKind::Burst:
            return "burst:" + std::to_string(std::get<uint32_t>(key));
        case UnitKind::Packet:
            return "packet:" + std::to_string(std::get<uint32_t>(key));
    }
    return "?";
}

std::vector<TrafficUnit> split_sessions(std::span<const ParsedPacket> stream) {
    using PairKey = std::tuple<Endpoint, Endpoint, Protocol>;  // unordered endpoints
    std::map<PairKey, size_t> by_pair;
    std::vector<TrafficUnit> units;

    for (uint32_t i : time_ordered_indices(stream, true)) {
        const FiveTuple& t = *stream[i].tuple;
        Endpoint src{t.src_ip, t.src_port};
        Endpoint dst{t.dst_ip, t.dst_port};
        PairKey pk{std::min(src, dst), std::max(src, dst), t.protocol};

        auto [it, inserted] = by_pair.try_emplace(pk, units.size());
        if (inserted) {
            Endpoint initiator = src;
            Endpoint responder = dst;
            if (t.protocol == Protocol::TCP) {
                bool syn = stream[i].tcp_flags & tcpflag::kSyn;
                bool ack = stream[i].tcp_flags & tcpflag::kAck;
                if (syn && ack)
                    std::swap(initiator, responder);
                else if (!syn) {
                    initiator = std::min(src, dst);
                    responder = std::max(src, dst);
                }
            }
            units.push_back({UnitKind::Session,
                             SessionKey{initiator, responder, t.protocol},
                             {}});
        }
        units[it->second].packets.push_back(i);
    }
    return units;
}

std::vector<TrafficUnit> split_flows(std::span<const ParsedPacket> stream,
                                     std::span<const uint32_t> ordered) {
    std::map<FiveTuple, size_t> by_tuple;
    std::vector<TrafficUnit> units;
    for (uint32_t i : ordered) {
        if (!stream[i].tuple)
            continue;
        const FiveTuple& t = *stream[i].tuple;
        auto [it, inserted] = by_tuple.try_emplace(t, units.size());
        if (inserted)
            units.push_back({UnitKind::Flow, t, {}});
        units[it->second].packets.push_back(i);
    }
    return units;
}

std::vector<TrafficUnit> split_flows(std::span<const ParsedPacket> stream) {
    std::vector<uint32_t> ordered = time_ordered_indices(stream, true);
    return split_flows(stream, ordered);
}

std::vector<TrafficUnit> split_bursts(std::span<const ParsedPacket> stream,
                                      std::span<const uint32_t> ordered, double gap) {
    if (!(gap > 0.0))
        throw NonPositiveGap("burst gap must be > 0");

    std::vector<TrafficUnit> bursts;
    double prev_ts = 0.0;
    for (uint32_t i : ordered) {
        double ts = stream[i].raw.seconds();
        if (bursts.empty() || ts - prev_ts > gap)
            bursts.push_back({UnitKind::Burst, static_cast<uint32_t>(bursts.size()), {}});
        bursts.back().packets.push_back(i);
        prev_ts = ts;
    }
    return bursts;
}

std::vector<TrafficUnit> split_bursts_global(std::span<const ParsedPacket> stream, double gap) {
    std::vector<uint32_t> ordered = time_ordered_indices(stream, false);
    return split_bursts(stream, ordered, gap);
}

std::vector<TrafficUnit> split_packets(std::span<const ParsedPacket> stream,
                                       std::span<const uint32_t> ordered) {
    std::vector<TrafficUnit> units;
    for (uint32_t i : ordered)
        if (stream[i].tuple)
            units.push_back({UnitKind::Packet, i, {i}});
    return units;
}

std::vector<TrafficUnit> split_packets(std::span<const ParsedPacket> stream) {
    std::vector<uint32_t> ordered = time_ordered_indices(stream, true);
    return split_packets(stream, ordered);
}

}  // namespace ntc
