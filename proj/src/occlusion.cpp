#include "ntc/occlusion.hpp"

#include <algorithm>

namespace ntc {

std::string_view action_name(ActionKind a) {
    switch (a) {
        case ActionKind::Eradicate: return "E";
        case ActionKind::Randomize: return "R";
        case ActionKind::MaskFF: return "MSK";
        case ActionKind::Obfuscate: return "OBF";
    }
    return "?";
}

std::string_view field_class_name(FieldClass f) {
    switch (f) {
        case FieldClass::MacSrc: return "mac_src";
        case FieldClass::MacDst: return "mac_dst";
        case FieldClass::IpSrc: return "ip_src";
        case FieldClass::IpDst: return "ip_dst";
        case FieldClass::IpId: return "ip_id";
        case FieldClass::IpChecksum: return "ip_checksum";
        case FieldClass::Ports: return "ports";
        case FieldClass::SeqAck: return "seq_ack";
        case FieldClass::WindowSize: return "window_size";
        case FieldClass::TcpOptions: return "tcp_options";
        case FieldClass::Payload: return "payload";
        case FieldClass::Sni: return "sni";
    }
    return "?";
}

namespace {

std::vector<FieldId> members_of(FieldClass fc) {
    switch (fc) {
        case FieldClass::MacSrc: return {FieldId::MacSrc};
        case FieldClass::MacDst: return {FieldId::MacDst};
        case FieldClass::IpSrc: return {FieldId::IpSrc};
        case FieldClass::IpDst: return {FieldId::IpDst};
        case FieldClass::IpId: return {FieldId::IpId};
        case FieldClass::IpChecksum: return {FieldId::IpChecksum};
        case FieldClass::Ports:
            return {FieldId::TcpSrcPort, FieldId::TcpDstPort, FieldId::UdpSrcPort,
                    FieldId::UdpDstPort};
        case FieldClass::SeqAck: return {FieldId::TcpSeq, FieldId::TcpAck};
        case FieldClass::WindowSize: return {FieldId::TcpWindow};
        case FieldClass::TcpOptions: return {FieldId::TcpOptionsFull};
        case FieldClass::Payload: return {FieldId::Payload};
        case FieldClass::Sni: return {FieldId::Sni};
    }
    return {};
}

constexpr FieldClass kSiiClasses[] = {FieldClass::MacSrc, FieldClass::MacDst, FieldClass::IpSrc,
                                      FieldClass::IpDst, FieldClass::Ports};
constexpr FieldClass kContextualClasses[] = {FieldClass::IpId, FieldClass::IpChecksum,
                                             FieldClass::SeqAck};
constexpr FieldClass kTemporalClasses[] = {FieldClass::WindowSize, FieldClass::TcpOptions};
constexpr FieldClass kAllHeaderClasses[] = {
    FieldClass::MacSrc, FieldClass::MacDst,     FieldClass::IpSrc,      FieldClass::IpDst,
    FieldClass::IpId,   FieldClass::IpChecksum, FieldClass::Ports,      FieldClass::SeqAck,
    FieldClass::WindowSize, FieldClass::TcpOptions,
};

std::vector<std::pair<FieldClass, ActionKind>> with_action(std::span<const FieldClass> classes,
                                                           ActionKind action) {
    std::vector<std::pair<FieldClass, ActionKind>> rules;
    for (FieldClass fc : classes)
        rules.emplace_back(fc, action);
    return rules;
}

std::vector<OcclusionStrategy> build_catalog() {
    std::vector<OcclusionStrategy> c;

    c.push_back({"A1", {}, PayloadPolicy::Keep, 1.0, false, "all data, baseline"});

    OcclusionStrategy d1{"D1", with_action(kSiiClasses, ActionKind::Randomize),
                         PayloadPolicy::Keep, 1.0, false, "anonymized SII"};
    c.push_back(d1);

    OcclusionStrategy d2 = d1;
    d2.id = "D2";
    d2.description = "anonymized SII and SNI";
    d2.rules.emplace_back(FieldClass::Sni, ActionKind::Randomize);
    c.push_back(d2);

    OcclusionStrategy ctx = d1;
    ctx.id = "C";
    ctx.description = "without contextual fields";
    for (FieldClass fc : kContextualClasses)
        ctx.rules.emplace_back(fc, ActionKind::Randomize);
    c.push_back(ctx);

    OcclusionStrategy tmp = d1;
    tmp.id = "T";
    tmp.description = "without temporal fields";
    for (FieldClass fc : kTemporalClasses)
        tmp.rules.emplace_back(fc, ActionKind::Randomize);
    c.push_back(tmp);

    OcclusionStrategy ctd = d1;
    ctd.id = "CTD";
    ctd.description = "without any overfitting-prone fields";
    for (FieldClass fc : kContextualClasses)
        ctd.rules.emplace_back(fc, ActionKind::Randomize);
    for (FieldClass fc : kTemporalClasses)
        ctd.rules.emplace_back(fc, ActionKind::Randomize);
    ctd.rules.emplace_back(FieldClass::Sni, ActionKind::Randomize);
    c.push_back(ctd);

    OcclusionStrategy h1 = d1;
    h1.id = "H1";
    h1.description = "header only, payload eradicated";
    h1.payload_policy = PayloadPolicy::Eradicate;
    h1.rules.emplace_back(FieldClass::Sni, ActionKind::Randomize);
    c.push_back(h1);

    OcclusionStrategy p1{"P1", with_action(kAllHeaderClasses, ActionKind::Eradicate),
                         PayloadPolicy::Keep, 1.0, true, "payload only, headers eradicated"};
    c.push_back(p1);

    OcclusionStrategy e1{"E1", with_action(kAllHeaderClasses, ActionKind::Eradicate),
                         PayloadPolicy::Encrypted, 1.0, false, "encrypted payload only"};
    e1.rules.emplace_back(FieldClass::Sni, ActionKind::Eradicate);
    c.push_back(e1);

    OcclusionStrategy e2 = e1;
    e2.id = "E2";
    e2.description = "encrypted payload masked with 0xFF";
    e2.payload_policy = PayloadPolicy::MaskFF;
    c.push_back(e2);

    OcclusionStrategy e3 = e1;
    e3.id = "E3";
    e3.description = "encrypted payload obfuscated with random bytes";
    e3.payload_policy = PayloadPolicy::Obfuscate;
    c.push_back(e3);

    OcclusionStrategy e2t25 = e2;
    e2t25.id = "E2T25";
    e2t25.description = "masked payload truncated by 25%";
    e2t25.truncation_factor = 0.75;
    c.push_back(e2t25);

    OcclusionStrategy e2t50 = e2;
    e2t50.id = "E2T50";
    e2t50.description = "masked payload truncated by 50%";
    e2t50.truncation_factor = 0.5;
    c.push_back(e2t50);

    return c;
}

}  // namespace

const std::vector<OcclusionStrategy>& strategy_catalog() {
    static const std::vector<OcclusionStrategy> catalog = build_catalog();
    return catalog;
}

const OcclusionStrategy* find_strategy(std::string_view id) {
    for (const OcclusionStrategy& s : strategy_catalog())
        if (s.id == id)
            return &s;
    return nullptr;
}

std::vector<ByteRange> resolve(const SampleFieldMap& map, FieldClass fc) {
    std::vector<ByteRange> out;
    std::vector<FieldId> ids = members_of(fc);
    for (const SampleFieldMap::Entry& entry : map.per_packet)
        for (FieldId id : ids)
            if (const std::optional<ByteRange>& r = field_of(entry.fields, id))
                out.push_back(*r);
    std::sort(out.begin(), out.end(),
              [](const ByteRange& a, const ByteRange& b) { return a.offset < b.offset; });
    return out;
}

void apply_action(std::span<uint8_t> bytes, ByteRange range, ActionKind action,
                  RandomByteStream& stream) {
    if (!range.within(bytes.size()))
        throw RangeOutOfBounds("occlusion range [" + std::to_string(range.offset) + "," +
                               std::to_string(range.end()) + ") exceeds buffer of " +
                               std::to_string(bytes.size()));
    uint8_t* p = bytes.data() + range.offset;
    switch (action) {
        case ActionKind::Eradicate:
            std::fill_n(p, range.length, uint8_t{0x00});
            break;
        case ActionKind::MaskFF:
            std::fill_n(p, range.length, uint8_t{0xFF});
            break;
        case ActionKind::Randomize:
        case ActionKind::Obfuscate:
            for (uint32_t i = 0; i < range.length; ++i)
                p[i] = stream.next_byte();
            break;
    }
}

namespace {

// Remove the given ranges from [begin, end) of the buffer, shifting the
// remainder left and padding the vacated tail.
void strip_ranges(std::span<uint8_t> bytes, uint32_t begin, uint32_t end,
                  std::span<const ByteRange> ranges, uint8_t pad) {
    uint32_t write = begin;
    uint32_t read = begin;
    for (const ByteRange& r : ranges) {
        if (r.offset < begin || r.end() > end)
            continue;
        while (read < r.offset)
            bytes[write++] = bytes[read++];
        read = r.end();
    }
    while (read < end)
        bytes[write++] = bytes[read++];
    std::fill(bytes.begin() + write, bytes.begin() + end, pad);
}

}  // namespace

Sample apply_strategy(const Sample& sample, const SampleFieldMap& map,
                      const OcclusionStrategy& strategy, uint64_t derived_seed) {
    Sample out = sample;
    if (strategy.rules.empty() && strategy.payload_policy == PayloadPolicy::Keep &&
        strategy.truncation_factor >= 1.0 && !strategy.strip_tcp_options)
        return out;  // baseline: identity

    RandomByteStream stream(derived_seed);
    std::span<uint8_t> bytes(out.bytes);
    std::vector<ByteRange> payload = resolve(map, FieldClass::Payload);

    switch (strategy.payload_policy) {
        case PayloadPolicy::Keep:
        case PayloadPolicy::Encrypted:
            break;
        case PayloadPolicy::Eradicate:
            for (const ByteRange& r : payload)
                apply_action(bytes, r, ActionKind::Eradicate, stream);
            break;
        case PayloadPolicy::MaskFF:
            for (const ByteRange& r : payload)
                apply_action(bytes, r, ActionKind::MaskFF, stream);
            break;
        case PayloadPolicy::Obfuscate:
            for (const ByteRange& r : payload)
                apply_action(bytes, r, ActionKind::Obfuscate, stream);
            break;
    }

    for (const auto& [fc, action] : strategy.rules)
        for (const ByteRange& r : resolve(map, fc)) {
            apply_action(bytes, r, action, stream);
            if (fc == FieldClass::Sni)
                out.sni_occluded = true;
        }

    if (strategy.truncation_factor < 1.0) {
        // Destroy the tail of each payload range in place; the sample keeps
        // its mandated length, only information goes away.
        for (const ByteRange& r : payload) {
            uint32_t keep = static_cast<uint32_t>(r.length * strategy.truncation_factor);
            std::fill(bytes.begin() + r.offset + keep, bytes.begin() + r.end(), out.pad_byte);
        }
    }

    if (strategy.strip_tcp_options) {
        std::vector<ByteRange> options = resolve(map, FieldClass::TcpOptions);
        if (out.segments > 1) {
            for (uint32_t seg = 0; seg < out.segments; ++seg)
                strip_ranges(bytes, seg * out.segment_len, (seg + 1) * out.segment_len, options,
                             out.pad_byte);
        } else {
            strip_ranges(bytes, 0, static_cast<uint32_t>(out.bytes.size()), options,
                         out.pad_byte);
        }
    }
    return out;
}

Bytes apply_strategy_to_frame(const ParsedPacket& packet, const OcclusionStrategy& strategy,
                              uint64_t global_seed, std::string_view source_file) {
    Sample frame;
    frame.bytes = packet.raw.data;
    frame.segment_len = packet.raw.captured_len();
    frame.segments = 1;
    frame.unit_key = "frame";
    frame.window_index = packet.raw.index;
    frame.packet_spans.push_back({packet.raw.index, 0, {0, packet.raw.captured_len()}});

    SampleFieldMap map;
    map.per_packet.push_back({packet.raw.index, packet.fields});

    uint64_t seed = derive_seed(global_seed, source_file, frame.unit_key, frame.window_index);
    return apply_strategy(frame, map, strategy, seed).bytes;
}

bool applicability(const OcclusionStrategy& strategy, UnitKind granularity,
                   const ExtractionSpec& extraction) {
    const std::string& id = strategy.id;

    // SNI occlusion is meaningful only where samples start at the beginning
    // of a conversation: whole-stream prefixes or first-n windows of flows
    // and sessions.
    if (id == "D2") {
        if (granularity != UnitKind::Flow && granularity != UnitKind::Session)
            return false;
        return extraction.strategy == Strategy::T1 ||
               extraction.selection == Selection::FirstN;
    }

    // Session-random and time-variant artifacts (and the encrypted-payload
    // family) need samples that can come from anywhere in a conversation;
    // prefix-anchored extraction always includes handshake plaintext.
    if (id == "C" || id == "T" || id == "CTD" || id == "E1" || id == "E2" || id == "E3" ||
        id == "E2T25" || id == "E2T50") {
        if (granularity == UnitKind::Packet || granularity == UnitKind::Burst)
            return true;
        return extraction.strategy != Strategy::T1 &&
               extraction.selection == Selection::AnyConsecutiveN;
    }

    return true;  // A1, D1, H1, P1
}

}  // namespace ntc
