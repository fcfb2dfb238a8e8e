#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "forge.hpp"
#include "ntc/pcap.hpp"

using namespace ntc;

namespace {

std::filesystem::path tmp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "ntc_pcap_test";
    std::filesystem::create_directories(dir);
    return dir;
}

// Test-local pcap emitter, big-endian on request, kept independent of the
// library's writer on purpose.
void independent_write(const std::filesystem::path& path,
                       const std::vector<pcap::RawPacket>& packets, bool big_endian) {
    auto put32 = [&](Bytes& b, uint32_t v) {
        if (big_endian) {
            b.push_back(v >> 24);
            b.push_back((v >> 16) & 0xFF);
            b.push_back((v >> 8) & 0xFF);
            b.push_back(v & 0xFF);
        } else {
            b.push_back(v & 0xFF);
            b.push_back((v >> 8) & 0xFF);
            b.push_back((v >> 16) & 0xFF);
            b.push_back(v >> 24);
        }
    };
    auto put16 = [&](Bytes& b, uint16_t v) {
        if (big_endian) {
            b.push_back(v >> 8);
            b.push_back(v & 0xFF);
        } else {
            b.push_back(v & 0xFF);
            b.push_back(v >> 8);
        }
    };
    Bytes out;
    put32(out, 0xA1B2C3D4);
    put16(out, 2);
    put16(out, 4);
    put32(out, 0);
    put32(out, 0);
    put32(out, 65535);
    put32(out, 1);  // Ethernet
    for (const auto& p : packets) {
        put32(out, p.ts_sec);
        put32(out, p.ts_nsec / 1000);
        put32(out, static_cast<uint32_t>(p.data.size()));
        put32(out, p.original_len);
        out.insert(out.end(), p.data.begin(), p.data.end());
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

std::vector<pcap::RawPacket> two_packet_fixture() {
    std::vector<pcap::RawPacket> packets(2);
    for (int i = 0; i < 2; ++i) {
        packets[i].index = i;
        packets[i].ts_sec = 1;
        packets[i].data.assign(60, static_cast<uint8_t>(0x40 + i));
        packets[i].original_len = 60;
    }
    packets[1].ts_nsec = 500 * 1000;  // 1.000500: 500 microseconds
    return packets;
}

}  // namespace

TEST_CASE("empty capture: global header only") {
    auto path = tmp_dir() / "empty.pcap";
    pcap::write_capture(pcap::CaptureMeta{}, {}, path);
    CHECK(std::filesystem::file_size(path) == 24);

    auto capture = pcap::read_capture(path);
    CHECK(capture.packets.empty());
    CHECK_FALSE(capture.truncated);
    CHECK(capture.meta.link_type == pcap::kLinkEthernet);
}

TEST_CASE("two-packet fixture reads back bit-exact") {
    auto fixture = two_packet_fixture();
    auto path = tmp_dir() / "two_packets.pcap";
    independent_write(path, fixture, false);

    auto capture = pcap::read_capture(path);
    REQUIRE(capture.packets.size() == 2);
    CHECK(capture.packets[0].ts_sec == 1);
    CHECK(capture.packets[0].ts_nsec == 0);
    CHECK(capture.packets[1].ts_sec == 1);
    CHECK(capture.packets[1].ts_nsec == 500 * 1000);  // 1.000500 exactly
    CHECK(capture.packets[0].data == fixture[0].data);
    CHECK(capture.packets[1].data == fixture[1].data);
    CHECK(capture.packets[0].index == 0);
    CHECK(capture.packets[1].index == 1);
}

TEST_CASE("byte-swapped magic yields the identical packet stream") {
    auto fixture = two_packet_fixture();
    auto le = tmp_dir() / "two_le.pcap";
    auto be = tmp_dir() / "two_be.pcap";
    independent_write(le, fixture, false);
    independent_write(be, fixture, true);

    auto a = pcap::read_capture(le);
    auto b = pcap::read_capture(be);
    REQUIRE(a.packets.size() == b.packets.size());
    for (size_t i = 0; i < a.packets.size(); ++i) {
        CHECK(a.packets[i].data == b.packets[i].data);
        CHECK(a.packets[i].ts_sec == b.packets[i].ts_sec);
        CHECK(a.packets[i].ts_nsec == b.packets[i].ts_nsec);
        CHECK(a.packets[i].original_len == b.packets[i].original_len);
    }
}

TEST_CASE("round trip: read, write, read is identical") {
    auto fixture = two_packet_fixture();
    auto p1 = tmp_dir() / "rt1.pcap";
    auto p2 = tmp_dir() / "rt2.pcap";
    independent_write(p1, fixture, false);

    auto first = pcap::read_capture(p1);
    pcap::write_capture(first.meta, first.packets, p2);
    auto second = pcap::read_capture(p2);

    REQUIRE(first.packets.size() == second.packets.size());
    for (size_t i = 0; i < first.packets.size(); ++i) {
        CHECK(first.packets[i].data == second.packets[i].data);
        CHECK(first.packets[i].ts_sec == second.packets[i].ts_sec);
        CHECK(first.packets[i].ts_nsec == second.packets[i].ts_nsec);
        CHECK(first.packets[i].original_len == second.packets[i].original_len);
    }
}

TEST_CASE("nanosecond-magic capture preserves the fractional part") {
    std::vector<pcap::RawPacket> packets(1);
    packets[0].ts_sec = 7;
    packets[0].ts_nsec = 123456789;
    packets[0].data.assign(20, 0xAB);
    packets[0].original_len = 20;

    auto path = tmp_dir() / "nano.pcap";
    pcap::CaptureMeta meta;
    meta.resolution = pcap::TsResolution::Nano;
    pcap::write_capture(meta, packets, path);

    auto capture = pcap::read_capture(path);
    REQUIRE(capture.packets.size() == 1);
    CHECK(capture.meta.resolution == pcap::TsResolution::Nano);
    CHECK(capture.packets[0].ts_nsec == 123456789);
}

TEST_CASE("unrecognized magic is rejected") {
    auto path = tmp_dir() / "bogus.pcap";
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    const char junk[] = "this is not a capture file at all.....";
    os.write(junk, sizeof junk);
    os.close();
    CHECK_THROWS_AS(pcap::read_capture(path), UnrecognizedMagic);
}

TEST_CASE("short global header is a TruncatedHeader") {
    auto path = tmp_dir() / "short.pcap";
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    const char start[] = {'\xd4', '\xc3', '\xb2', '\xa1', 2, 0};
    os.write(start, sizeof start);
    os.close();
    CHECK_THROWS_AS(pcap::read_capture(path), TruncatedHeader);
}

TEST_CASE("non-Ethernet link type rejected at open") {
    auto path = tmp_dir() / "linktype.pcap";
    pcap::CaptureMeta meta;
    meta.link_type = 101;  // raw IP
    pcap::write_capture(meta, {}, path);
    CHECK_THROWS_AS(pcap::read_capture(path), UnsupportedLinkType);
}

TEST_CASE("file cut mid-record yields the prefix plus a terminal truncation") {
    auto fixture = two_packet_fixture();
    auto whole = tmp_dir() / "whole.pcap";
    independent_write(whole, fixture, false);
    auto size = std::filesystem::file_size(whole);

    auto cut = tmp_dir() / "cut.pcap";
    {
        std::ifstream is(whole, std::ios::binary);
        Bytes data(size - 30);  // cut inside the second packet's data
        is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
        std::ofstream os(cut, std::ios::binary | std::ios::trunc);
        os.write(reinterpret_cast<const char*>(data.data()),
                 static_cast<std::streamsize>(data.size()));
    }

    auto capture = pcap::read_capture(cut);
    CHECK(capture.packets.size() == 1);  // no packet silently dropped, no garbage yielded
    CHECK(capture.truncated);
    CHECK(capture.packets[0].data == fixture[0].data);
}

TEST_CASE("a record claiming more bytes than the file holds is terminal truncation") {
    auto path = tmp_dir() / "hugeclaim.pcap";
    {
        auto fixture = two_packet_fixture();
        independent_write(path, {fixture[0]}, false);
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(24 + 8);  // incl_len of record 0
        uint32_t huge = 0xFFFFFF00;
        f.write(reinterpret_cast<const char*>(&huge), 4);
    }
    auto capture = pcap::read_capture(path);
    CHECK(capture.packets.empty());
    CHECK(capture.truncated);
}

TEST_CASE("captured_len above original_len is rejected before writing") {
    pcap::RawPacket bad;
    bad.data.assign(100, 0);
    bad.original_len = 60;
    std::vector<pcap::RawPacket> packets = {bad};
    CHECK_THROWS_AS(
        pcap::write_capture(pcap::CaptureMeta{}, packets, tmp_dir() / "reject.pcap"),
        InvalidPacket);
}

TEST_CASE("order preservation over a larger synthetic capture") {
    std::vector<pcap::RawPacket> packets;
    uint64_t rng = 99;
    for (int i = 0; i < 200; ++i) {
        pcap::RawPacket p;
        p.ts_sec = 100 + i / 7;
        p.ts_nsec = static_cast<uint32_t>(forge::rng_u64(rng) % 1000000) * 1000;
        p.data.assign(14 + forge::rng_u64(rng) % 200, static_cast<uint8_t>(i));
        p.original_len = static_cast<uint32_t>(p.data.size());
        packets.push_back(std::move(p));
    }
    auto path = tmp_dir() / "order.pcap";
    pcap::write_capture(pcap::CaptureMeta{}, packets, path);
    auto capture = pcap::read_capture(path);
    REQUIRE(capture.packets.size() == packets.size());
    for (size_t i = 0; i < packets.size(); ++i) {
        CHECK(capture.packets[i].index == i);
        CHECK(capture.packets[i].data == packets[i].data);
    }
}
