#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ntc/errors.hpp"
#include "ntc/extraction.hpp"
#include "ntc/rng.hpp"

namespace ntc {

// Byte-level occlusion actions: eradicate writes 0x00, mask writes 0xFF,
// randomize and obfuscate draw from the seeded stream.
enum class ActionKind : uint8_t { Eradicate, Randomize, MaskFF, Obfuscate };

// Field families the strategies target. Each resolves to zero or more byte
// ranges of a sample; families absent from a sample (window size in a UDP
// packet, say) are no-ops rather than errors.
enum class FieldClass : uint8_t {
    MacSrc,
    MacDst,
    IpSrc,
    IpDst,
    IpId,
    IpChecksum,
    Ports,
    SeqAck,
    WindowSize,
    TcpOptions,
    Payload,
    Sni,
};

std::string_view action_name(ActionKind a);
std::string_view field_class_name(FieldClass f);
std::vector<ByteRange> resolve(const SampleFieldMap& map, FieldClass fc);

enum class PayloadPolicy : uint8_t { Keep, Eradicate, Encrypted, MaskFF, Obfuscate };

struct OcclusionStrategy {
    std::string id;
    std::vector<std::pair<FieldClass, ActionKind>> rules;
    PayloadPolicy payload_policy = PayloadPolicy::Keep;
    double truncation_factor = 1.0;  // < 1: payload tails re-padded in place
    bool strip_tcp_options = false;
    std::string description;
};

// The 13 named strategies. Catalog order is fixed.
const std::vector<OcclusionStrategy>& strategy_catalog();
const OcclusionStrategy* find_strategy(std::string_view id);

// In-place action over one range. Bytes outside the range are untouched;
// length never changes.
void apply_action(std::span<uint8_t> bytes, ByteRange range, ActionKind action,
                  RandomByteStream& stream);

// Applies one strategy to a sample. Deterministic in the derived seed; the
// baseline strategy returns the input byte-identical.
Sample apply_strategy(const Sample& sample, const SampleFieldMap& map,
                      const OcclusionStrategy& strategy, uint64_t derived_seed);

// Frame-level application (for emitting occluded captures): the whole frame
// is treated as a single-packet sample.
Bytes apply_strategy_to_frame(const ParsedPacket& packet, const OcclusionStrategy& strategy,
                              uint64_t global_seed, std::string_view source_file);

// Which (strategy, granularity, extraction) combinations are meaningful.
// Contextual/temporal strategies and the encrypted-payload family need
// samples drawn from arbitrary positions of a conversation; SNI occlusion
// needs samples anchored at the start where the handshake lives.
bool applicability(const OcclusionStrategy& strategy, UnitKind granularity,
                   const ExtractionSpec& extraction);

}  // namespace ntc
