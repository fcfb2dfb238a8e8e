#include "ntc/extraction.hpp"

#include <algorithm>

namespace ntc {

std::string_view strategy_name(Strategy s) {
    switch (s) {
        case Strategy::T1: return "t1";
        case Strategy::T2: return "t2";
        case Strategy::T3: return "t3";
    }
    return "?";
}

std::string_view selection_name(Selection s) {
    return s == Selection::FirstN ? "first" : "any";
}

std::string ExtractionSpec::str() const {
    std::string out(strategy_name(strategy));
    out += " m=" + std::to_string(m);
    if (strategy != Strategy::T1) {
        out += " n=" + std::to_string(n);
        out += " sel=";
        out += selection_name(selection);
        if (selection == Selection::AnyConsecutiveN)
            out += " stride=" + std::to_string(stride == 0 ? n : stride);
    }
    return out;
}

namespace {

void validate(const TrafficUnit& unit, const ExtractionSpec& spec) {
    if (spec.m == 0)
        throw IncompatibleSpec("extraction byte count m must be > 0");
    if (spec.strategy != Strategy::T1 && spec.n == 0)
        throw IncompatibleSpec("packet count n must be > 0");
    if (unit.kind == UnitKind::Packet && spec.strategy != Strategy::T1)
        throw IncompatibleSpec("packet granularity admits only the first-m-bytes strategy");
}

// The slice of a frame that participates in concatenation.
ByteRange contribution(const ParsedPacket& pkt, bool payload_only) {
    if (!payload_only)
        return {0, pkt.raw.captured_len()};
    if (pkt.fields.payload)
        return *pkt.fields.payload;
    return {0, 0};
}

// T1/T2: concatenate the frames' bytes, then truncate or pad to m.
Sample concat_sample(std::span<const ParsedPacket> stream, const TrafficUnit& unit,
                     std::span<const uint32_t> members, const ExtractionSpec& spec,
                     uint32_t window_index) {
    Sample s;
    s.segment_len = spec.m;
    s.segments = 1;
    s.pad_byte = spec.pad_byte;
    s.unit_key = unit.key_str();
    s.window_index = window_index;
    s.bytes.reserve(spec.m);

    for (uint32_t idx : members) {
        if (s.bytes.size() >= spec.m)
            break;
        const ParsedPacket& pkt = stream[idx];
        ByteRange src = contribution(pkt, spec.payload_only_concat);
        uint32_t room = spec.m - static_cast<uint32_t>(s.bytes.size());
        uint32_t take = std::min(src.length, room);
        if (take == 0)
            continue;
        s.packet_spans.push_back(
            {idx, src.offset, {static_cast<uint32_t>(s.bytes.size()), take}});
        const uint8_t* begin = pkt.raw.data.data() + src.offset;
        s.bytes.insert(s.bytes.end(), begin, begin + take);
    }
    s.bytes.resize(spec.m, spec.pad_byte);
    return s;
}

// T3: one m-byte segment per packet; short frames are padded, phantom
// packets (FirstN on short units) are pure padding.
Sample per_packet_sample(std::span<const ParsedPacket> stream, const TrafficUnit& unit,
                         std::span<const uint32_t> members, const ExtractionSpec& spec,
                         uint32_t window_index) {
    Sample s;
    s.segment_len = spec.m;
    s.segments = spec.n;
    s.pad_byte = spec.pad_byte;
    s.unit_key = unit.key_str();
    s.window_index = window_index;
    s.bytes.assign(static_cast<size_t>(spec.m) * spec.n, spec.pad_byte);

    for (uint32_t seg = 0; seg < members.size() && seg < spec.n; ++seg) {
        const ParsedPacket& pkt = stream[members[seg]];
        uint32_t take = std::min(pkt.raw.captured_len(), spec.m);
        if (take == 0)
            continue;
        uint32_t dst = seg * spec.m;
        std::copy_n(pkt.raw.data.data(), take, s.bytes.data() + dst);
        s.packet_spans.push_back({members[seg], 0, {dst, take}});
    }
    return s;
}

}  // namespace

std::vector<Sample> extract(std::span<const ParsedPacket> stream, const TrafficUnit& unit,
                            const ExtractionSpec& spec) {
    validate(unit, spec);
    std::span<const uint32_t> members(unit.packets);
    std::vector<Sample> out;

    if (spec.strategy == Strategy::T1) {
        out.push_back(concat_sample(stream, unit, members, spec, 0));
        return out;
    }

    const uint32_t p = static_cast<uint32_t>(members.size());
    if (spec.selection == Selection::FirstN) {
        if (p < spec.n && spec.drop_short)
            return out;
        std::span<const uint32_t> window = members.subspan(0, std::min(p, spec.n));
        out.push_back(spec.strategy == Strategy::T2
                          ? concat_sample(stream, unit, window, spec, 0)
                          : per_packet_sample(stream, unit, window, spec, 0));
        return out;
    }

    const uint32_t stride = spec.stride == 0 ? spec.n : spec.stride;
    uint32_t window_index = 0;
    for (uint32_t off = 0; off + spec.n <= p; off += stride, ++window_index) {
        std::span<const uint32_t> window = members.subspan(off, spec.n);
        out.push_back(spec.strategy == Strategy::T2
                          ? concat_sample(stream, unit, window, spec, window_index)
                          : per_packet_sample(stream, unit, window, spec, window_index));
    }
    return out;
}

SampleFieldMap spans_to_fields(std::span<const ParsedPacket> stream, const Sample& sample) {
    SampleFieldMap out;
    for (const PacketSpan& span : sample.packet_spans) {
        SampleFieldMap::Entry entry;
        entry.packet = span.packet;
        const FieldMap& src = stream[span.packet].fields;
        const uint32_t lo = span.frame_offset;
        const uint32_t hi = span.frame_offset + span.range.length;
        for (FieldId id : kAllFields) {
            const std::optional<ByteRange>& fr = field_of(src, id);
            if (!fr)
                continue;
            uint32_t start = std::max(fr->offset, lo);
            uint32_t end = std::min(fr->end(), hi);
            if (end <= start)
                continue;  // truncated away
            field_of(entry.fields, id) =
                ByteRange{span.range.offset + (start - lo), end - start};
        }
        out.per_packet.push_back(std::move(entry));
    }
    return out;
}

}  // namespace ntc
