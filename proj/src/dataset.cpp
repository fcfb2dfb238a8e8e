#include "ntc/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "ntc/rng.hpp"

namespace ntc::dataset {

ParsedCapture load_capture(const std::filesystem::path& path) {
    ParsedCapture out;
    out.path = path;
    pcap::CaptureFile capture = pcap::read_capture(path);
    out.meta = capture.meta;
    out.truncated = capture.truncated;
    out.stream.reserve(capture.packets.size());
    for (pcap::RawPacket& raw : capture.packets)
        out.stream.push_back(parse_packet(std::move(raw)));
    return out;
}

std::string collapse_subdomains(std::string host) {
    size_t last = host.rfind('.');
    if (last == std::string::npos)
        return host;
    size_t second = host.rfind('.', last - 1);
    if (second == std::string::npos)
        return host;
    return host.substr(second + 1);
}

LabelResult label_by_sni(std::span<const ParsedPacket> stream, std::vector<TrafficUnit> sessions,
                         const LabelOptions& opts, uint32_t capture_index) {
    LabelResult out;
    for (TrafficUnit& session : sessions) {
        auto [fwd, rev] = audit::session_directions(stream, session);

        std::vector<std::string> hosts;
        for (const Bytes* dir : {&fwd, &rev}) {
            std::span<const uint8_t> bytes(*dir);
            auto infos = std::get<SessionKey>(session.key).protocol == Protocol::TCP
                             ? tls::parse_tls_records(bytes)
                             : tls::parse_dtls_records(bytes);
            for (const tls::HandshakeInfo& info : infos)
                if (info.role == tls::HandshakeInfo::Role::ClientHello && info.sni_host)
                    hosts.push_back(*info.sni_host);
        }

        if (hosts.empty()) {
            out.unlabeled.push_back(std::move(session));
            continue;
        }
        LabeledSession labeled;
        labeled.capture = capture_index;
        labeled.label = opts.collapse_subdomains ? collapse_subdomains(hosts.front())
                                                 : hosts.front();
        labeled.source = LabelSource::Sni;
        labeled.sni_conflict =
            std::any_of(hosts.begin(), hosts.end(),
                        [&](const std::string& h) { return h != hosts.front(); });
        labeled.unit = std::move(session);
        out.labeled.push_back(std::move(labeled));
    }
    return out;
}

namespace {

constexpr uint16_t kInfraPorts[] = {53, 5353, 123};  // DNS, mDNS, NTP

bool infrastructure_session(const SessionKey& key) {
    for (uint16_t port : kInfraPorts)
        if (key.endpoint_a.port == port || key.endpoint_b.port == port)
            return true;
    return false;
}

}  // namespace

std::vector<TrafficUnit> filter_noise(std::span<const ParsedPacket> stream,
                                      std::vector<TrafficUnit> sessions) {
    std::vector<TrafficUnit> kept;
    for (TrafficUnit& session : sessions) {
        if (infrastructure_session(std::get<SessionKey>(session.key)))
            continue;
        if (!audit::classify_session(stream, session).encrypted)
            continue;
        kept.push_back(std::move(session));
    }
    return kept;
}

SplitResult split_train_test(const std::vector<LabeledSession>& labeled,
                             const std::vector<double>& ratios, uint64_t seed,
                             bool allow_small) {
    double sum = 0;
    for (double r : ratios)
        sum += r;
    if (ratios.empty() || std::abs(sum - 1.0) > 1e-9)
        throw IncompatibleSpec("split ratios must sum to 1.0");

    SplitResult out;
    if (ratios.size() == 2)
        out.names = {"train", "test"};
    else if (ratios.size() == 3)
        out.names = {"train", "val", "test"};
    else
        for (size_t i = 0; i < ratios.size(); ++i)
            out.names.push_back("split" + std::to_string(i));
    out.assignment.assign(labeled.size(), SplitResult::kDropped);

    std::map<std::string, std::vector<uint32_t>> by_class;
    for (uint32_t i = 0; i < labeled.size(); ++i)
        by_class[labeled[i].label].push_back(i);

    for (auto& [label, members] : by_class) {
        if (members.size() < ratios.size() && !allow_small) {
            out.dropped_classes.push_back(label);
            continue;
        }
        // Stable pre-order, then a seeded Fisher-Yates keyed by the class
        // name so per-class shuffles are independent.
        std::sort(members.begin(), members.end(), [&](uint32_t a, uint32_t b) {
            return std::tuple(labeled[a].capture, labeled[a].unit.key_str()) <
                   std::tuple(labeled[b].capture, labeled[b].unit.key_str());
        });
        RandomByteStream rng(derive_seed(seed, "split", label, 0));
        for (size_t i = members.size(); i > 1; --i)
            std::swap(members[i - 1], members[rng.next_u64() % i]);

        // Largest-remainder allocation of the class across splits.
        size_t n = members.size();
        std::vector<size_t> counts(ratios.size());
        std::vector<std::pair<double, size_t>> remainders;
        size_t assigned = 0;
        for (size_t s = 0; s < ratios.size(); ++s) {
            double exact = ratios[s] * static_cast<double>(n);
            counts[s] = static_cast<size_t>(exact);
            assigned += counts[s];
            remainders.emplace_back(exact - static_cast<double>(counts[s]), s);
        }
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (size_t k = 0; k < n - assigned; ++k)
            ++counts[remainders[k % remainders.size()].second];

        size_t pos = 0;
        for (size_t s = 0; s < counts.size(); ++s)
            for (size_t k = 0; k < counts[s] && pos < n; ++k)
                out.assignment[members[pos++]] = static_cast<uint32_t>(s);
    }
    return out;
}

namespace {

void put_u16(std::ostream& os, uint16_t v) {
    char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
    os.write(b, 2);
}

void put_u32(std::ostream& os, uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i)
        b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(b, 4);
}

}  // namespace

void write_records(const std::filesystem::path& path, std::span<const Record> records) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw IoFailure("cannot create " + path.string());
    os.write(kRecordMagic, 4);
    put_u16(os, kRecordVersion);
    for (const Record& r : records) {
        put_u16(os, r.label);
        put_u32(os, static_cast<uint32_t>(r.bytes.size()));
        os.write(reinterpret_cast<const char*>(r.bytes.data()),
                 static_cast<std::streamsize>(r.bytes.size()));
    }
    if (!os)
        throw IoFailure("short write to " + path.string());
}

std::vector<Record> read_records(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw IoFailure("cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    uint8_t ver[2];
    is.read(reinterpret_cast<char*>(ver), 2);
    if (!is || std::memcmp(magic, kRecordMagic, 4) != 0)
        throw Error(path.string() + ": not a record file");
    if ((ver[0] | ver[1] << 8) != kRecordVersion)
        throw Error(path.string() + ": unknown record version");

    std::vector<Record> out;
    while (true) {
        uint8_t hdr[6];
        is.read(reinterpret_cast<char*>(hdr), 6);
        if (is.gcount() == 0)
            break;
        if (is.gcount() != 6)
            throw Error(path.string() + ": truncated record header");
        Record r;
        r.label = static_cast<uint16_t>(hdr[0] | hdr[1] << 8);
        uint32_t len = static_cast<uint32_t>(hdr[2]) | static_cast<uint32_t>(hdr[3]) << 8 |
                       static_cast<uint32_t>(hdr[4]) << 16 | static_cast<uint32_t>(hdr[5]) << 24;
        r.bytes.resize(len);
        is.read(reinterpret_cast<char*>(r.bytes.data()), len);
        if (static_cast<uint32_t>(is.gcount()) != len)
            throw Error(path.string() + ": truncated record");
        out.push_back(std::move(r));
    }
    return out;
}

std::string file_digest_hex(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw IoFailure("cannot open " + path.string());
    uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (is.read(buf, sizeof buf) || is.gcount() > 0) {
        h = fnv1a64(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(buf),
                                             static_cast<size_t>(is.gcount())),
                    h);
        if (!is)
            break;
    }
    static const char* digits = "0123456789abcdef";
    std::string hex(16, '0');
    for (int i = 0; i < 16; ++i)
        hex[i] = digits[(h >> (60 - 4 * i)) & 0xF];
    return hex;
}

namespace {

struct SortableRecord {
    std::string sort_key;
    uint32_t window_index = 0;
    Record record;
};

std::vector<TrafficUnit> units_for(const ParsedCapture& capture, const TrafficUnit& session,
                                   UnitKind granularity, double burst_gap) {
    switch (granularity) {
        case UnitKind::Session:
            return {session};
        case UnitKind::Flow:
            return split_flows(capture.stream, session.packets);
        case UnitKind::Burst:
            return split_bursts(capture.stream, session.packets, burst_gap);
        case UnitKind::Packet:
            return split_packets(capture.stream, session.packets);
    }
    return {};
}

}  // namespace

DatasetBundle export_bundle(const std::vector<ParsedCapture>& captures,
                            const std::vector<LabeledSession>& labeled,
                            const SplitResult& split, const BundleOptions& opts,
                            const std::filesystem::path& out_dir) {
    const OcclusionStrategy* strategy = find_strategy(opts.strategy_id);
    if (!strategy)
        throw IncompatibleSpec("unknown occlusion strategy " + opts.strategy_id);
    if (!applicability(*strategy, opts.granularity, opts.extraction))
        throw IncompatibleSpec("strategy " + opts.strategy_id +
                               " is not applicable to this granularity/extraction choice");
    if (opts.granularity == UnitKind::Packet && opts.extraction.strategy != Strategy::T1)
        throw IncompatibleSpec("packet granularity admits only the first-m-bytes strategy");

    DatasetBundle bundle;
    bundle.split_names = split.names;

    // Dense class indices in label order.
    {
        std::vector<std::string> classes;
        for (size_t i = 0; i < labeled.size(); ++i)
            if (split.assignment[i] != SplitResult::kDropped)
                classes.push_back(labeled[i].label);
        std::sort(classes.begin(), classes.end());
        classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
        for (uint32_t i = 0; i < classes.size(); ++i)
            bundle.class_map[classes[i]] = i;
    }

    std::vector<std::vector<SortableRecord>> per_split(split.names.size());
    std::mutex mu;
    std::atomic<size_t> cursor{0};
    std::atomic<bool> failed{false};
    std::string failure;

    auto process = [&](size_t i) {
        if (split.assignment[i] == SplitResult::kDropped)
            return;
        const LabeledSession& ls = labeled[i];
        const ParsedCapture& capture = captures[ls.capture];
        const std::string file_name = capture.path.filename().string();
        uint16_t label_index = static_cast<uint16_t>(bundle.class_map.at(ls.label));

        std::vector<SortableRecord> local;
        for (const TrafficUnit& unit :
             units_for(capture, ls.unit, opts.granularity, opts.burst_gap)) {
            std::string unit_tag = opts.granularity == UnitKind::Session
                                       ? ls.unit.key_str()
                                       : ls.unit.key_str() + "/" + unit.key_str();
            for (Sample& sample : extract(capture.stream, unit, opts.extraction)) {
                sample.unit_key = unit_tag;
                SampleFieldMap map = spans_to_fields(capture.stream, sample);
                uint64_t seed =
                    derive_seed(opts.seed, file_name, sample.unit_key, sample.window_index);
                Sample occluded = apply_strategy(sample, map, *strategy, seed);
                local.push_back({file_name + "/" + unit_tag, sample.window_index,
                                 {label_index, std::move(occluded.bytes)}});
            }
        }
        std::lock_guard<std::mutex> lock(mu);
        auto& dst = per_split[split.assignment[i]];
        for (SortableRecord& r : local)
            dst.push_back(std::move(r));
    };

    unsigned workers = opts.workers == 0
                           ? std::max(1u, std::thread::hardware_concurrency())
                           : opts.workers;
    workers = std::min<size_t>(workers, std::max<size_t>(labeled.size(), 1));
    auto worker = [&] {
        for (size_t i = cursor.fetch_add(1); i < labeled.size(); i = cursor.fetch_add(1)) {
            try {
                process(i);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(mu);
                failed = true;
                failure = e.what();
            }
        }
    };
    std::vector<std::thread> threads;
    for (unsigned w = 1; w < workers; ++w)
        threads.emplace_back(worker);
    worker();
    for (std::thread& t : threads)
        t.join();
    if (failed)
        throw Error("export failed: " + failure);

    std::filesystem::create_directories(out_dir);

    nlohmann::ordered_json manifest;
    manifest["format"] = "ntcs-bundle";
    manifest["version"] = 1;
    manifest["granularity"] = opts.granularity == UnitKind::Packet  ? "packet"
                              : opts.granularity == UnitKind::Burst ? "burst"
                              : opts.granularity == UnitKind::Flow  ? "flow"
                                                                    : "session";
    manifest["extraction"] = {
        {"strategy", std::string(strategy_name(opts.extraction.strategy))},
        {"m", opts.extraction.m},
        {"n", opts.extraction.n},
        {"selection", std::string(selection_name(opts.extraction.selection))},
        {"stride", opts.extraction.stride == 0 ? opts.extraction.n : opts.extraction.stride},
        {"pad_byte", opts.extraction.pad_byte},
        {"payload_only_concat", opts.extraction.payload_only_concat},
    };
    manifest["occlusion_strategy"] = opts.strategy_id;
    manifest["seed"] = opts.seed;
    manifest["burst_gap"] = opts.burst_gap;
    manifest["classes"] = bundle.class_map;
    if (!split.dropped_classes.empty())
        manifest["dropped_classes"] = split.dropped_classes;

    nlohmann::ordered_json splits = nlohmann::ordered_json::array();
    for (size_t s = 0; s < split.names.size(); ++s) {
        auto& records = per_split[s];
        // Deterministic record order regardless of worker interleaving.
        std::sort(records.begin(), records.end(), [](const SortableRecord& a,
                                                     const SortableRecord& b) {
            return std::tie(a.sort_key, a.window_index) < std::tie(b.sort_key, b.window_index);
        });
        std::vector<Record> flat;
        flat.reserve(records.size());
        for (SortableRecord& r : records)
            flat.push_back(std::move(r.record));

        std::filesystem::path file = out_dir / (split.names[s] + ".ntcs");
        write_records(file, flat);
        std::string digest = file_digest_hex(file);

        uint64_t sessions_in_split = 0;
        for (size_t i = 0; i < labeled.size(); ++i)
            if (split.assignment[i] == static_cast<uint32_t>(s))
                ++sessions_in_split;

        bundle.record_counts.push_back(flat.size());
        bundle.digests.push_back(digest);
        splits.push_back({{"name", split.names[s]},
                          {"ratio", opts.ratios[s]},
                          {"sessions", sessions_in_split},
                          {"records", flat.size()},
                          {"file", split.names[s] + ".ntcs"},
                          {"fnv1a64", digest}});
    }
    manifest["splits"] = splits;

    bundle.manifest_path = out_dir / "manifest.json";
    std::ofstream os(bundle.manifest_path, std::ios::trunc);
    if (!os)
        throw IoFailure("cannot create " + bundle.manifest_path.string());
    os << manifest.dump(2) << '\n';
    if (!os)
        throw IoFailure("short write to " + bundle.manifest_path.string());
    return bundle;
}

}  // namespace ntc::dataset
