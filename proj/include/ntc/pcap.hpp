#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "ntc/bytes.hpp"
#include "ntc/errors.hpp"

namespace ntc::pcap {

// Classic pcap only. Both byte orders, microsecond and nanosecond magics.
constexpr uint32_t kMagicMicro = 0xA1B2C3D4;
constexpr uint32_t kMagicNano = 0xA1B23C4D;
constexpr uint32_t kLinkEthernet = 1;

enum class TsResolution { Micro, Nano };

struct CaptureMeta {
    uint32_t link_type = kLinkEthernet;
    uint32_t snaplen = 65535;
    bool big_endian = false;
    TsResolution resolution = TsResolution::Micro;
};

// One captured frame. The fractional timestamp is held in nanoseconds
// regardless of the file's resolution; micro-resolution input is scaled by
// 1000 on read and back on write, so round trips are lossless.
struct RawPacket {
    uint32_t index = 0;
    uint32_t ts_sec = 0;
    uint32_t ts_nsec = 0;
    uint32_t original_len = 0;
    Bytes data;

    uint32_t captured_len() const { return static_cast<uint32_t>(data.size()); }
    double seconds() const { return static_cast<double>(ts_sec) + ts_nsec * 1e-9; }
    bool valid() const { return captured_len() <= original_len; }
};

// Streaming single-consumer reader. The constructor validates the global
// header (magic, link type); next() yields frames until clean EOF. A file
// that ends mid-record yields the packets read so far and sets truncated().
class Reader {
  public:
    explicit Reader(const std::filesystem::path& path);

    const CaptureMeta& meta() const { return meta_; }
    std::optional<RawPacket> next();
    bool truncated() const { return truncated_; }
    const std::string& truncation_detail() const { return truncation_detail_; }

  private:
    std::ifstream in_;
    CaptureMeta meta_;
    uint64_t file_size_ = 0;
    uint32_t next_index_ = 0;
    bool swapped_ = false;
    bool truncated_ = false;
    bool done_ = false;
    std::string truncation_detail_;
};

struct CaptureFile {
    CaptureMeta meta;
    std::vector<RawPacket> packets;
    bool truncated = false;
};

CaptureFile read_capture(const std::filesystem::path& path);

// Round-trip guarantee: re-reading a written file reproduces the packet
// records (data, timestamps, lengths) bit-exactly. Packets violating
// captured_len <= original_len are rejected up front.
void write_capture(const CaptureMeta& meta, std::span<const RawPacket> packets,
                   const std::filesystem::path& path);

}  // namespace ntc::pcap
