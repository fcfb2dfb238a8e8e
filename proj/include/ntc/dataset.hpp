#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ntc/audit.hpp"
#include "ntc/extraction.hpp"
#include "ntc/granularity.hpp"
#include "ntc/occlusion.hpp"
#include "ntc/pcap.hpp"

namespace ntc::dataset {

struct ParsedCapture {
    std::filesystem::path path;
    pcap::CaptureMeta meta;
    std::vector<ParsedPacket> stream;
    bool truncated = false;
};

ParsedCapture load_capture(const std::filesystem::path& path);

enum class LabelSource : uint8_t { Sni, FileName, Manual };

struct LabeledSession {
    uint32_t capture = 0;  // index into the caller's capture list
    TrafficUnit unit;
    std::string label;
    LabelSource source = LabelSource::Sni;
    bool sni_conflict = false;  // differing SNIs across ClientHellos; first wins
};

struct LabelOptions {
    bool collapse_subdomains = false;
};

// "a.b.example.com" -> "example.com"; bare hosts pass through.
std::string collapse_subdomains(std::string host);

struct LabelResult {
    std::vector<LabeledSession> labeled;
    std::vector<TrafficUnit> unlabeled;
};

// Sessions with a parseable ClientHello SNI get that hostname as label.
LabelResult label_by_sni(std::span<const ParsedPacket> stream, std::vector<TrafficUnit> sessions,
                         const LabelOptions& opts = {}, uint32_t capture_index = 0);

// Drops unencrypted sessions and well-known infrastructure conversations
// (DNS, mDNS, NTP ports).
std::vector<TrafficUnit> filter_noise(std::span<const ParsedPacket> stream,
                                      std::vector<TrafficUnit> sessions);

struct SplitResult {
    std::vector<std::string> names;           // one per split
    std::vector<uint32_t> assignment;         // parallel to the labeled sessions
    std::vector<std::string> dropped_classes;  // too few sessions to stratify
    static constexpr uint32_t kDropped = 0xFFFFFFFF;
};

// Session-level stratified assignment: every sample of a session shares its
// split, per-class counts follow the ratios (largest remainder), and the
// shuffle is deterministic in the seed.
SplitResult split_train_test(const std::vector<LabeledSession>& labeled,
                             const std::vector<double>& ratios, uint64_t seed,
                             bool allow_small = false);

// Record container: 4-byte magic "NTCS" and u16 version once per file, then
// one (u16 label index, u32 byte length, raw bytes) triple per record.
// Everything little-endian.
constexpr char kRecordMagic[4] = {'N', 'T', 'C', 'S'};
constexpr uint16_t kRecordVersion = 1;

struct Record {
    uint16_t label = 0;
    Bytes bytes;
};

void write_records(const std::filesystem::path& path, std::span<const Record> records);
std::vector<Record> read_records(const std::filesystem::path& path);

struct BundleOptions {
    UnitKind granularity = UnitKind::Session;
    ExtractionSpec extraction;
    std::string strategy_id = "A1";
    uint64_t seed = 0;
    double burst_gap = 1.0;
    std::vector<double> ratios = {0.8, 0.1, 0.1};
    bool allow_small = false;
    unsigned workers = 0;
};

struct DatasetBundle {
    std::map<std::string, uint32_t> class_map;
    std::vector<std::string> split_names;
    std::vector<uint64_t> record_counts;
    std::vector<std::string> digests;  // fnv1a64 of each split file, hex
    std::filesystem::path manifest_path;
};

// Extraction + occlusion + labeling composed into record files and a
// manifest. Re-export with identical inputs is byte-identical.
DatasetBundle export_bundle(const std::vector<ParsedCapture>& captures,
                            const std::vector<LabeledSession>& labeled,
                            const SplitResult& split, const BundleOptions& opts,
                            const std::filesystem::path& out_dir);

std::string file_digest_hex(const std::filesystem::path& path);

}  // namespace ntc::dataset
