#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ntc/errors.hpp"
#include "ntc/granularity.hpp"
#include "ntc/packet.hpp"

namespace ntc {

enum class Strategy : uint8_t { T1, T2, T3 };
enum class Selection : uint8_t { FirstN, AnyConsecutiveN };

std::string_view strategy_name(Strategy s);
std::string_view selection_name(Selection s);

struct ExtractionSpec {
    Strategy strategy = Strategy::T1;
    uint32_t m = 0;           // bytes (per sample for T1/T2, per packet for T3)
    uint32_t n = 1;           // packet count, T2/T3 only
    Selection selection = Selection::FirstN;
    uint32_t stride = 0;      // AnyConsecutiveN window step; 0 means n (non-overlap)
    uint8_t pad_byte = 0x00;
    bool drop_short = false;  // FirstN strict mode: discard units with < n packets
    bool payload_only_concat = false;  // T1 variant: concatenate transport payloads only

    uint32_t sample_len() const { return strategy == Strategy::T3 ? m * n : m; }
    std::string str() const;
};

// Which sub-slice of which packet landed where in the sample.
struct PacketSpan {
    uint32_t packet = 0;       // index into the parsed stream
    uint32_t frame_offset = 0; // first contributed byte within the frame
    ByteRange range;           // destination within the sample
};

struct Sample {
    Bytes bytes;               // exactly sample_len() after padding/truncation
    uint32_t segment_len = 0;  // m
    uint32_t segments = 1;     // 1 for T1/T2, n for T3
    uint8_t pad_byte = 0x00;
    std::string unit_key;
    uint32_t window_index = 0;
    std::vector<PacketSpan> packet_spans;
    // Set by occlusion when an SNI rule found a surviving range; an SNI that
    // was truncated away cannot be occluded, and consumers may want to know.
    bool sni_occluded = false;
};

// Fixed-size byte representations of one unit. FirstN yields at most one
// window; AnyConsecutiveN yields windows at offsets 0, stride, 2*stride, ...
// while n packets remain. Short FirstN units are padded out (T2: the
// concatenation, T3: phantom all-pad packets) unless drop_short is set.
std::vector<Sample> extract(std::span<const ParsedPacket> stream, const TrafficUnit& unit,
                            const ExtractionSpec& spec);

// Per-field byte ranges of a sample, i.e. each contributing packet's
// FieldMap re-based into sample coordinates with truncation clipping.
struct SampleFieldMap {
    struct Entry {
        uint32_t packet = 0;
        FieldMap fields;  // sample-relative offsets
    };
    std::vector<Entry> per_packet;
};

SampleFieldMap spans_to_fields(std::span<const ParsedPacket> stream, const Sample& sample);

}  // namespace ntc
