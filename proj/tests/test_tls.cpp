#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "forge.hpp"
#include "ntc/tls.hpp"

using namespace ntc;

namespace {

tls::HandshakeInfo first_of(const std::vector<tls::HandshakeInfo>& infos,
                            tls::HandshakeInfo::Role role) {
    for (const auto& info : infos)
        if (info.role == role)
            return info;
    REQUIRE(false);
    return {};
}

}  // namespace

TEST_CASE("synthetic ClientHello: host and byte-exact range") {
    Bytes stream = forge::client_hello("example.com");
    auto infos = tls::parse_tls_records(stream);
    REQUIRE_FALSE(infos.empty());
    auto ch = first_of(infos, tls::HandshakeInfo::Role::ClientHello);
    REQUIRE(ch.sni_host.has_value());
    CHECK(*ch.sni_host == "example.com");
    REQUIRE(ch.sni_range.has_value());
    std::string sliced(stream.begin() + ch.sni_range->offset,
                       stream.begin() + ch.sni_range->end());
    CHECK(sliced == "example.com");
}

TEST_CASE("synthetic ServerHello carries the advertised suite") {
    Bytes stream = forge::server_hello(0x1301);
    auto infos = tls::parse_tls_records(stream);
    auto sh = first_of(infos, tls::HandshakeInfo::Role::ServerHello);
    REQUIRE(sh.cipher_suite.has_value());
    CHECK(*sh.cipher_suite == 0x1301);
}

TEST_CASE("plain HTTP payload yields nothing") {
    const char http[] = "GET / HTTP/1.1\r\nHost: example.com\r\n\r\n";
    std::span<const uint8_t> stream(reinterpret_cast<const uint8_t*>(http), sizeof http - 1);
    CHECK(tls::parse_tls_records(stream).empty());
    CHECK(tls::find_records(stream).empty());
}

TEST_CASE("handshake message split across two records still parses") {
    Bytes record = forge::client_hello("split.example.net");
    Bytes message(record.begin() + 5, record.end());  // strip the record header
    size_t half = message.size() / 2;
    Bytes first(message.begin(), message.begin() + half);
    Bytes second(message.begin() + half, message.end());

    Bytes stream = forge::tls_record(22, 0x0301, first);
    Bytes rec2 = forge::tls_record(22, 0x0301, second);
    stream.insert(stream.end(), rec2.begin(), rec2.end());

    auto infos = tls::parse_tls_records(stream);
    auto ch = first_of(infos, tls::HandshakeInfo::Role::ClientHello);
    REQUIRE(ch.sni_host.has_value());
    CHECK(*ch.sni_host == "split.example.net");
    // The hostname either sits in one record (contiguous range) or spans the
    // boundary (no range); both must decode consistently.
    if (ch.sni_range) {
        std::string sliced(stream.begin() + ch.sni_range->offset,
                           stream.begin() + ch.sni_range->end());
        CHECK(sliced == "split.example.net");
    }
}

TEST_CASE("records appearing mid-stream are found (upgrade style)") {
    const char banner[] = "220 mail.example.com ESMTP ready\r\nSTARTTLS\r\n";
    Bytes stream(reinterpret_cast<const uint8_t*>(banner),
                 reinterpret_cast<const uint8_t*>(banner) + sizeof banner - 1);
    Bytes hello = forge::client_hello("mail.example.com");
    stream.insert(stream.end(), hello.begin(), hello.end());

    auto records = tls::find_records(stream);
    REQUIRE_FALSE(records.empty());
    auto infos = tls::parse_tls_records(stream);
    auto ch = first_of(infos, tls::HandshakeInfo::Role::ClientHello);
    CHECK(*ch.sni_host == "mail.example.com");
}

TEST_CASE("application-data-only stream is framed but yields no handshakes") {
    Bytes stream = forge::application_data_record(400);
    Bytes more = forge::application_data_record(1200);
    stream.insert(stream.end(), more.begin(), more.end());
    CHECK(tls::find_records(stream).size() == 2);
    CHECK(tls::parse_tls_records(stream).empty());
}

TEST_CASE("reassembly orders, deduplicates, and stops at gaps") {
    Bytes a = {'a', 'b', 'c'};
    Bytes b = {'d', 'e'};
    Bytes c = {'f', 'g'};
    std::vector<tls::Segment> segments = {
        {1003, b}, {1000, a}, {1003, b}, {1005, c},
    };
    Bytes out = tls::reassemble(segments);
    CHECK(std::string(out.begin(), out.end()) == "abcdefg");

    std::vector<tls::Segment> gap = {{1000, a}, {1010, c}};
    Bytes stopped = tls::reassemble(gap);
    CHECK(std::string(stopped.begin(), stopped.end()) == "abc");
}

TEST_CASE("DNS payload is not UDP-encrypted") {
    Bytes dns = {0x12, 0x34, 0x01, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
                 0x03, 'w',  'w',  'w',  0x00, 0x00, 0x01, 0x00, 0x01};
    std::vector<std::span<const uint8_t>> payloads = {dns};
    CHECK(tls::detect_udp_encryption(payloads) == tls::UdpEncryption::None);
}

TEST_CASE("QUIC Initial long header is detected") {
    Bytes quic = forge::quic_initial_payload();
    CHECK(quic[0] == 0xC3);
    CHECK(rd32be(quic, 1) == 0x00000001);
    std::vector<std::span<const uint8_t>> payloads = {quic};
    CHECK(tls::detect_udp_encryption(payloads) == tls::UdpEncryption::QUIC);

    // Short-header packets after a long-header first packet stay QUIC.
    Bytes short_hdr = {0x41, 0xA0, 0xA1, 0xA2, 0xA3, 0x00, 0x01, 0x02};
    std::vector<std::span<const uint8_t>> session = {quic, short_hdr};
    CHECK(tls::detect_udp_encryption(session) == tls::UdpEncryption::QUIC);
}

TEST_CASE("DTLS 1.2 ClientHello record is detected and parsed") {
    Bytes dtls = forge::dtls_client_hello("dtls.example.com");
    std::vector<std::span<const uint8_t>> payloads = {dtls};
    CHECK(tls::detect_udp_encryption(payloads) == tls::UdpEncryption::DTLS);

    auto infos = tls::parse_dtls_records(dtls);
    auto ch = first_of(infos, tls::HandshakeInfo::Role::ClientHello);
    REQUIRE(ch.sni_host.has_value());
    CHECK(*ch.sni_host == "dtls.example.com");

    auto sh_infos = tls::parse_dtls_records(forge::dtls_server_hello(0xC02B));
    auto sh = first_of(sh_infos, tls::HandshakeInfo::Role::ServerHello);
    CHECK(*sh.cipher_suite == 0xC02B);
}

TEST_CASE("mutated streams never crash or produce out-of-stream ranges") {
    Bytes seed_stream = forge::client_hello("fuzz.example.com");
    Bytes sh = forge::server_hello(0x1302);
    seed_stream.insert(seed_stream.end(), sh.begin(), sh.end());

    uint64_t rng = 0xF022;
    for (int round = 0; round < 5000; ++round) {
        Bytes mutated = seed_stream;
        for (size_t f = 0; f < 1 + forge::rng_u64(rng) % 6; ++f)
            mutated[forge::rng_u64(rng) % mutated.size()] =
                static_cast<uint8_t>(forge::rng_u64(rng));
        if (forge::rng_u64(rng) % 3 == 0)
            mutated.resize(forge::rng_u64(rng) % (mutated.size() + 1));

        for (const auto& info : tls::parse_tls_records(mutated))
            if (info.sni_range)
                REQUIRE(info.sni_range->within(mutated.size()));
        tls::parse_dtls_records(mutated);
        std::vector<std::span<const uint8_t>> payloads = {mutated};
        tls::detect_udp_encryption(payloads);
    }
}

TEST_CASE("reference OpenSSL ClientHello parses with the requested SNI") {
    Bytes hello = forge::openssl_client_hello("ref.example.org");
    auto infos = tls::parse_tls_records(hello);
    auto ch = first_of(infos, tls::HandshakeInfo::Role::ClientHello);
    REQUIRE(ch.sni_host.has_value());
    CHECK(*ch.sni_host == "ref.example.org");
    REQUIRE(ch.sni_range.has_value());
    std::string sliced(hello.begin() + ch.sni_range->offset,
                       hello.begin() + ch.sni_range->end());
    CHECK(sliced == "ref.example.org");
}

TEST_CASE("reference OpenSSL handshakes negotiate the intended suites") {
    struct Case {
        const char* tls13;
        const char* tls12;
        uint16_t expected;
    };
    const Case cases[] = {
        {"TLS_AES_128_GCM_SHA256", "", 0x1301},
        {"TLS_AES_256_GCM_SHA384", "", 0x1302},
        {"TLS_CHACHA20_POLY1305_SHA256", "", 0x1303},
        {"", "ECDHE-ECDSA-AES128-SHA", 0xC009},  // CBC suite under the EC test cert
    };
    for (const Case& c : cases) {
        auto hs = forge::openssl_handshake("suite.example.com", c.tls13, c.tls12);
        CHECK(hs.negotiated_suite == c.expected);

        Bytes server_stream;
        for (const auto& flight : hs.flights)
            if (!flight.client_to_server)
                server_stream.insert(server_stream.end(), flight.payload.begin(),
                                     flight.payload.end());
        auto infos = tls::parse_tls_records(server_stream);
        auto sh = first_of(infos, tls::HandshakeInfo::Role::ServerHello);
        REQUIRE(sh.cipher_suite.has_value());
        CHECK(*sh.cipher_suite == c.expected);
    }
}
