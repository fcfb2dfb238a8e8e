#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "forge.hpp"
#include "ntc/granularity.hpp"

using namespace ntc;

namespace {

pcap::RawPacket frame_at(Bytes data, double ts, uint32_t index) {
    pcap::RawPacket p;
    p.index = index;
    p.ts_sec = static_cast<uint32_t>(ts);
    p.ts_nsec = static_cast<uint32_t>((ts - p.ts_sec) * 1e9 + 0.5);
    p.original_len = static_cast<uint32_t>(data.size());
    p.data = std::move(data);
    return p;
}

std::vector<ParsedPacket> tcp_stream(const std::vector<forge::TcpHeader>& headers) {
    std::vector<pcap::RawPacket> raws;
    for (size_t i = 0; i < headers.size(); ++i)
        raws.push_back(frame_at(forge::tcp_frame(headers[i], {}), 1.0 + 0.001 * i,
                                static_cast<uint32_t>(i)));
    return forge::parse_all(raws);
}

// Brute-force partition by unordered endpoint pair, independent of the
// implementation's keying.
std::map<std::string, std::set<uint32_t>> oracle_sessions(
    std::span<const ParsedPacket> stream) {
    std::map<std::string, std::set<uint32_t>> out;
    for (uint32_t i = 0; i < stream.size(); ++i) {
        if (!stream[i].tuple)
            continue;
        const FiveTuple& t = *stream[i].tuple;
        std::string a = std::to_string(t.src_ip) + ":" + std::to_string(t.src_port);
        std::string b = std::to_string(t.dst_ip) + ":" + std::to_string(t.dst_port);
        std::string key = (t.protocol == Protocol::TCP ? "t" : "u") + std::min(a, b) + "|" +
                          std::max(a, b);
        out[key].insert(i);
    }
    return out;
}

}  // namespace

TEST_CASE("single SYN packet: initiator is the sender") {
    forge::TcpHeader h;
    h.src_ip = 0x0A000001;
    h.dst_ip = 0x0A000002;
    h.src_port = 1234;
    h.dst_port = 443;
    h.flags = 0x02;
    auto stream = tcp_stream({h});
    auto sessions = split_sessions(stream);
    REQUIRE(sessions.size() == 1);
    const auto& key = std::get<SessionKey>(sessions[0].key);
    CHECK(key.endpoint_a.ip == 0x0A000001);
    CHECK(key.endpoint_a.port == 1234);
    CHECK(key.endpoint_b.port == 443);
}

TEST_CASE("leading SYN-ACK marks its receiver as initiator") {
    forge::TcpHeader h;
    h.src_ip = 0x0A000002;  // server talks first in this capture
    h.dst_ip = 0x0A000001;
    h.src_port = 443;
    h.dst_port = 1234;
    h.flags = 0x12;
    auto stream = tcp_stream({h});
    auto sessions = split_sessions(stream);
    REQUIRE(sessions.size() == 1);
    const auto& key = std::get<SessionKey>(sessions[0].key);
    CHECK(key.endpoint_a.port == 1234);
}

TEST_CASE("mid-capture start falls back to the smaller endpoint") {
    forge::TcpHeader h;
    h.src_ip = 0x0A000009;
    h.dst_ip = 0x0A000001;
    h.src_port = 50000;
    h.dst_port = 443;
    h.flags = 0x18;  // no SYN evidence
    auto stream = tcp_stream({h});
    auto sessions = split_sessions(stream);
    const auto& key = std::get<SessionKey>(sessions[0].key);
    CHECK(key.endpoint_a.ip == 0x0A000001);  // lexicographically smaller
}

TEST_CASE("bidirectional exchange merges into one session, two flows") {
    forge::TcpHeader fwd;
    fwd.flags = 0x02;
    forge::TcpHeader rev;
    rev.src_ip = fwd.dst_ip;
    rev.dst_ip = fwd.src_ip;
    rev.src_port = fwd.dst_port;
    rev.dst_port = fwd.src_port;
    rev.flags = 0x12;
    auto stream = tcp_stream({fwd, rev});

    auto sessions = split_sessions(stream);
    REQUIRE(sessions.size() == 1);
    CHECK(sessions[0].packets.size() == 2);

    auto flows = split_flows(stream);
    CHECK(flows.size() == 2);
}

TEST_CASE("interleaved handshakes split into exactly two sessions") {
    auto s1 = forge::tcp_session({.client_ip = 0x0A000001, .server_ip = 0x0A000002}, {});
    auto s2 = forge::tcp_session(
        {.client_ip = 0x0A000003, .server_ip = 0x0A000004, .ts_base = 1.0002}, {});
    auto raws = forge::renumber({std::move(s1), std::move(s2)});
    auto stream = forge::parse_all(raws);

    auto sessions = split_sessions(stream);
    REQUIRE(sessions.size() == 2);

    auto oracle = oracle_sessions(stream);
    REQUIRE(oracle.size() == 2);
    for (const auto& unit : sessions) {
        std::set<uint32_t> members(unit.packets.begin(), unit.packets.end());
        bool matched = false;
        for (const auto& [key, expected] : oracle)
            matched = matched || members == expected;
        CHECK(matched);
    }
}

TEST_CASE("burst boundaries follow the gap rule") {
    forge::TcpHeader h;
    auto make_stream = [&](const std::vector<double>& ts) {
        std::vector<pcap::RawPacket> raws;
        for (size_t i = 0; i < ts.size(); ++i)
            raws.push_back(frame_at(forge::tcp_frame(h, {}), ts[i], static_cast<uint32_t>(i)));
        return forge::parse_all(raws);
    };
    auto ordered = [](size_t n) {
        std::vector<uint32_t> idx(n);
        for (uint32_t i = 0; i < n; ++i)
            idx[i] = i;
        return idx;
    };

    {
        auto stream = make_stream({0.0, 0.1, 0.2});
        auto bursts = split_bursts(stream, ordered(3), 1.0);
        REQUIRE(bursts.size() == 1);
        CHECK(bursts[0].packets.size() == 3);
    }
    {
        auto stream = make_stream({0.0, 0.1, 2.0, 2.05});
        auto bursts = split_bursts(stream, ordered(4), 1.0);
        REQUIRE(bursts.size() == 2);
        CHECK(bursts[0].packets.size() == 2);
        CHECK(bursts[1].packets.size() == 2);
    }
    {
        // Boundary case: a gap equal to the threshold stays in the burst.
        auto stream = make_stream({0.0, 1.0});
        auto bursts = split_bursts(stream, ordered(2), 1.0);
        CHECK(bursts.size() == 1);
    }
    {
        auto stream = make_stream({0.0, 0.5, 1.2});
        CHECK_THROWS_AS(split_bursts(stream, ordered(3), 0.0), NonPositiveGap);
    }
}

TEST_CASE("burst extremes: huge gap keeps one burst, tiny gap isolates packets") {
    forge::TcpHeader h;
    std::vector<pcap::RawPacket> raws;
    for (int i = 0; i < 10; ++i)
        raws.push_back(frame_at(forge::tcp_frame(h, {}), 1.0 + i * 0.25, i));
    auto stream = forge::parse_all(raws);
    std::vector<uint32_t> idx(10);
    for (uint32_t i = 0; i < 10; ++i)
        idx[i] = i;

    CHECK(split_bursts(stream, idx, 1e18).size() == 1);
    CHECK(split_bursts(stream, idx, 0.001).size() == 10);
}

TEST_CASE("partition laws over randomized streams") {
    uint64_t rng = 0x5EED;
    for (int round = 0; round < 50; ++round) {
        std::vector<forge::TcpHeader> headers;
        size_t count = 5 + forge::rng_u64(rng) % 40;
        for (size_t i = 0; i < count; ++i) {
            forge::TcpHeader h;
            h.src_ip = 0x0A000001 + forge::rng_u64(rng) % 4;
            h.dst_ip = 0x0A000001 + forge::rng_u64(rng) % 4;
            h.src_port = static_cast<uint16_t>(1000 + forge::rng_u64(rng) % 6);
            h.dst_port = static_cast<uint16_t>(1000 + forge::rng_u64(rng) % 6);
            h.flags = forge::rng_u64(rng) % 2 ? 0x02 : 0x18;
            headers.push_back(h);
        }
        auto stream = tcp_stream(headers);
        auto sessions = split_sessions(stream);
        auto flows = split_flows(stream);

        size_t session_total = 0, flow_total = 0;
        for (const auto& s : sessions)
            session_total += s.packets.size();
        for (const auto& f : flows)
            flow_total += f.packets.size();
        CHECK(session_total == count);
        CHECK(flow_total == count);
        CHECK(flows.size() >= sessions.size());
        CHECK(flows.size() <= 2 * sessions.size());

        // Each session is the union of one or two flows.
        for (const auto& s : sessions) {
            std::set<uint32_t> session_set(s.packets.begin(), s.packets.end());
            std::set<uint32_t> flow_union;
            size_t contributing = 0;
            for (const auto& f : flows) {
                bool inside = true;
                for (uint32_t p : f.packets)
                    inside = inside && session_set.count(p) > 0;
                if (inside && !f.packets.empty() &&
                    session_set.count(f.packets.front()) > 0) {
                    ++contributing;
                    flow_union.insert(f.packets.begin(), f.packets.end());
                }
            }
            CHECK(flow_union == session_set);
            CHECK(contributing >= 1);
            CHECK(contributing <= 2);
        }
    }
}

TEST_CASE("determinism: same input, same keys and orderings") {
    auto raws = forge::renumber({forge::tcp_session({}, {}),
                                 forge::tcp_session({.client_port = 41000, .ts_base = 1.3}, {})});
    auto stream = forge::parse_all(raws);
    auto a = split_sessions(stream);
    auto b = split_sessions(stream);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].key_str() == b[i].key_str());
        CHECK(a[i].packets == b[i].packets);
    }
}
