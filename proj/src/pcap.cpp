#include "ntc/pcap.hpp"

#include <array>
#include <bit>
#include <cstring>

namespace ntc::pcap {

namespace {

uint32_t swap32(uint32_t v) {
    return (v >> 24) | ((v >> 8) & 0xFF00u) | ((v << 8) & 0xFF0000u) | (v << 24);
}

uint16_t swap16(uint16_t v) {
    return static_cast<uint16_t>((v >> 8) | (v << 8));
}

struct GlobalHeader {
    uint32_t magic;
    uint16_t version_major;
    uint16_t version_minor;
    int32_t thiszone;
    uint32_t sigfigs;
    uint32_t snaplen;
    uint32_t network;
};
static_assert(sizeof(GlobalHeader) == 24);

struct RecordHeader {
    uint32_t ts_sec;
    uint32_t ts_frac;
    uint32_t incl_len;
    uint32_t orig_len;
};
static_assert(sizeof(RecordHeader) == 16);

constexpr bool kHostIsBig = std::endian::native == std::endian::big;

}  // namespace

Reader::Reader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_)
        throw IoFailure("cannot open " + path.string());
    std::error_code ec;
    file_size_ = std::filesystem::file_size(path, ec);

    GlobalHeader gh{};
    in_.read(reinterpret_cast<char*>(&gh), sizeof gh);
    if (in_.gcount() != sizeof gh)
        throw TruncatedHeader(path.string() + ": file shorter than the 24-byte global header");

    bool swapped;
    uint32_t magic = gh.magic;
    if (magic == kMagicMicro || magic == kMagicNano) {
        swapped = false;
    } else if (swap32(magic) == kMagicMicro || swap32(magic) == kMagicNano) {
        swapped = true;
        magic = swap32(magic);
    } else {
        throw UnrecognizedMagic(path.string() + ": not a classic pcap file");
    }

    meta_.resolution = magic == kMagicNano ? TsResolution::Nano : TsResolution::Micro;
    meta_.big_endian = swapped != kHostIsBig;
    meta_.snaplen = swapped ? swap32(gh.snaplen) : gh.snaplen;
    meta_.link_type = swapped ? swap32(gh.network) : gh.network;
    if (swapped ? swap16(gh.version_major) != 2 : gh.version_major != 2)
        throw UnrecognizedMagic(path.string() + ": unexpected pcap version");

    if (meta_.link_type != kLinkEthernet)
        throw UnsupportedLinkType(path.string() + ": link type " +
                                  std::to_string(meta_.link_type) + " (only Ethernet handled)");
    swapped_ = swapped;
}

std::optional<RawPacket> Reader::next() {
    if (done_)
        return std::nullopt;

    RecordHeader rh{};
    in_.read(reinterpret_cast<char*>(&rh), sizeof rh);
    if (in_.gcount() == 0) {
        done_ = true;  // clean EOF on a record boundary
        return std::nullopt;
    }
    if (in_.gcount() != sizeof rh) {
        done_ = truncated_ = true;
        truncation_detail_ = "file ends inside a record header";
        return std::nullopt;
    }
    if (swapped_) {
        rh.ts_sec = swap32(rh.ts_sec);
        rh.ts_frac = swap32(rh.ts_frac);
        rh.incl_len = swap32(rh.incl_len);
        rh.orig_len = swap32(rh.orig_len);
    }

    // A corrupt incl_len must not turn into a giant allocation: the record
    // cannot hold more bytes than the file has left.
    uint64_t consumed = static_cast<uint64_t>(in_.tellg());
    if (rh.incl_len > file_size_ - std::min<uint64_t>(consumed, file_size_)) {
        done_ = truncated_ = true;
        truncation_detail_ = "record " + std::to_string(next_index_) +
                             " claims more bytes than the file holds";
        return std::nullopt;
    }

    RawPacket pkt;
    pkt.index = next_index_;
    pkt.ts_sec = rh.ts_sec;
    pkt.ts_nsec = meta_.resolution == TsResolution::Nano ? rh.ts_frac : rh.ts_frac * 1000u;
    pkt.original_len = rh.orig_len;
    pkt.data.resize(rh.incl_len);
    in_.read(reinterpret_cast<char*>(pkt.data.data()), rh.incl_len);
    if (static_cast<uint32_t>(in_.gcount()) != rh.incl_len) {
        done_ = truncated_ = true;
        truncation_detail_ = "file ends inside record " + std::to_string(next_index_);
        return std::nullopt;
    }
    ++next_index_;
    return pkt;
}

CaptureFile read_capture(const std::filesystem::path& path) {
    Reader reader(path);
    CaptureFile out;
    out.meta = reader.meta();
    while (auto pkt = reader.next())
        out.packets.push_back(std::move(*pkt));
    out.truncated = reader.truncated();
    return out;
}

void write_capture(const CaptureMeta& meta, std::span<const RawPacket> packets,
                   const std::filesystem::path& path) {
    for (const RawPacket& p : packets)
        if (!p.valid())
            throw InvalidPacket("packet " + std::to_string(p.index) +
                                ": captured_len exceeds original_len");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoFailure("cannot create " + path.string());

    const bool nano = meta.resolution == TsResolution::Nano;
    GlobalHeader gh{};
    gh.magic = nano ? kMagicNano : kMagicMicro;
    gh.version_major = 2;
    gh.version_minor = 4;
    gh.snaplen = meta.snaplen;
    gh.network = meta.link_type;
    out.write(reinterpret_cast<const char*>(&gh), sizeof gh);

    for (const RawPacket& p : packets) {
        RecordHeader rh{};
        rh.ts_sec = p.ts_sec;
        rh.ts_frac = nano ? p.ts_nsec : p.ts_nsec / 1000u;
        rh.incl_len = p.captured_len();
        rh.orig_len = p.original_len;
        out.write(reinterpret_cast<const char*>(&rh), sizeof rh);
        out.write(reinterpret_cast<const char*>(p.data.data()),
                  static_cast<std::streamsize>(p.data.size()));
    }
    if (!out)
        throw IoFailure("short write to " + path.string());
}

}  // namespace ntc::pcap
