// ntcprep: packet-capture preprocessing for traffic-classification
// research. Subcommands wire the library into a pipeline: audit encryption
// usage, split captures by granularity, extract fixed-size samples, occlude
// feature bytes, label sessions by SNI, and export ML-ready bundles.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ntc/audit.hpp"
#include "ntc/dataset.hpp"
#include "ntc/extraction.hpp"
#include "ntc/granularity.hpp"
#include "ntc/occlusion.hpp"
#include "ntc/pcap.hpp"

namespace fs = std::filesystem;
using namespace ntc;

namespace {

struct GlobalOpts {
    uint64_t seed = 0;
    unsigned workers = 0;
    bool verbose = false;
};

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
    std::vector<fs::path> files;
    for (const std::string& in : inputs) {
        fs::path p(in);
        if (fs::is_directory(p)) {
            for (const auto& entry : fs::directory_iterator(p))
                if (entry.is_regular_file() && entry.path().extension() == ".pcap")
                    files.push_back(entry.path());
        } else {
            files.push_back(p);
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

void log_config(const std::string& subcommand, const std::vector<std::string>& kv) {
    std::cerr << "config: command=" << subcommand;
    for (const std::string& item : kv)
        std::cerr << " " << item;
    std::cerr << "\n";
}

UnitKind parse_granularity(const std::string& name) {
    if (name == "packet")
        return UnitKind::Packet;
    if (name == "burst")
        return UnitKind::Burst;
    if (name == "flow")
        return UnitKind::Flow;
    if (name == "session")
        return UnitKind::Session;
    throw IncompatibleSpec("--granularity: expected packet|burst|flow|session");
}

struct ExtractionCli {
    std::string type = "t1";
    uint32_t m = 0;
    uint32_t n = 5;
    std::string selection = "first";
    uint32_t stride = 0;
    uint32_t pad_byte = 0;
    bool payload_only = false;
    bool drop_short = false;
    std::string preset;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--type", type, "extraction strategy: t1|t2|t3");
        cmd->add_option("--m", m, "bytes per sample (t1/t2) or per packet (t3)");
        cmd->add_option("--n", n, "packet count for t2/t3");
        cmd->add_option("--selection", selection, "window selection: first|any");
        cmd->add_option("--stride", stride, "window step for --selection any (default n)");
        cmd->add_option("--pad-byte", pad_byte, "padding byte value")->check(CLI::Range(0, 255));
        cmd->add_flag("--payload-only-concat", payload_only,
                      "t1 variant: concatenate transport payloads only");
        cmd->add_flag("--drop-short", drop_short,
                      "discard first-n units with fewer than n packets");
        cmd->add_option("--preset", preset, "size preset: etbert|yatc")
            ->check(CLI::IsMember({"etbert", "yatc"}));
    }

    ExtractionSpec resolve(UnitKind granularity, CLI::App* cmd) const {
        ExtractionSpec spec;
        if (type == "t1")
            spec.strategy = Strategy::T1;
        else if (type == "t2")
            spec.strategy = Strategy::T2;
        else if (type == "t3")
            spec.strategy = Strategy::T3;
        else
            throw IncompatibleSpec("--type: expected t1|t2|t3");
        if (selection == "first")
            spec.selection = Selection::FirstN;
        else if (selection == "any")
            spec.selection = Selection::AnyConsecutiveN;
        else
            throw IncompatibleSpec("--selection: expected first|any");

        spec.m = m;
        spec.n = n;
        if (!preset.empty()) {
            bool etbert = preset == "etbert";
            switch (spec.strategy) {
                case Strategy::T1:
                    spec.m = etbert ? (granularity == UnitKind::Packet ? 128 : 640) : 1600;
                    break;
                case Strategy::T2:
                    spec.m = etbert ? 640 : 1600;
                    spec.n = 5;
                    break;
                case Strategy::T3:
                    spec.m = etbert ? 128 : 320;
                    spec.n = 5;
                    break;
            }
            if (cmd->count("--m"))
                spec.m = m;
            if (cmd->count("--n"))
                spec.n = n;
        }
        if (spec.m == 0)
            throw IncompatibleSpec("--m: a byte count is required (or use --preset)");
        spec.stride = stride;
        spec.pad_byte = static_cast<uint8_t>(pad_byte);
        spec.payload_only_concat = payload_only;
        spec.drop_short = drop_short;
        return spec;
    }
};

int run_audit(const GlobalOpts& g, const std::vector<std::string>& inputs,
              const std::string& csv, const std::string& json, const std::string& text) {
    auto files = expand_inputs(inputs);
    log_config("audit", {"files=" + std::to_string(files.size()),
                         "workers=" + std::to_string(g.workers)});
    auto stats = audit::audit_dataset(files, g.workers);
    if (!csv.empty())
        audit::write_csv(stats, csv);
    if (!json.empty())
        audit::write_json(stats, json);
    std::string report = audit::render_text(stats);
    if (!text.empty()) {
        std::ofstream os(text, std::ios::trunc);
        os << report;
    }
    std::cout << report;
    for (const auto& [name, file_stats] : stats.per_file)
        if (file_stats.error) {
            std::cerr << "audit: some files failed to read; see report\n";
            break;
        }
    return 0;
}

int run_split(const GlobalOpts&, const std::string& input, const std::string& granularity,
              const std::string& out_dir, double gap, bool global_bursts) {
    log_config("split", {"input=" + input, "granularity=" + granularity,
                         "gap=" + std::to_string(gap)});
    UnitKind kind = parse_granularity(granularity);
    auto capture = dataset::load_capture(input);
    fs::create_directories(out_dir);

    std::vector<std::pair<std::string, std::vector<uint32_t>>> units;
    if (kind == UnitKind::Session) {
        for (const auto& u : split_sessions(capture.stream))
            units.emplace_back(std::get<SessionKey>(u.key).file_safe(), u.packets);
    } else if (kind == UnitKind::Flow) {
        for (const auto& u : split_flows(capture.stream)) {
            std::string name = u.key_str();
            for (char& c : name)
                if (c == ':' || c == '>' || c == '.')
                    c = '_';
            units.emplace_back(name, u.packets);
        }
    } else if (kind == UnitKind::Burst) {
        if (global_bursts) {
            for (const auto& u : split_bursts_global(capture.stream, gap))
                units.emplace_back("burst_" + std::to_string(std::get<uint32_t>(u.key)),
                                   u.packets);
        } else {
            for (const auto& s : split_sessions(capture.stream)) {
                std::string prefix = std::get<SessionKey>(s.key).file_safe();
                for (const auto& u : split_bursts(capture.stream, s.packets, gap))
                    units.emplace_back(
                        prefix + "_burst_" + std::to_string(std::get<uint32_t>(u.key)),
                        u.packets);
            }
        }
    } else {
        for (const auto& u : split_packets(capture.stream))
            units.emplace_back("packet_" + std::to_string(std::get<uint32_t>(u.key)),
                               u.packets);
    }

    for (const auto& [name, members] : units) {
        std::vector<pcap::RawPacket> subset;
        for (uint32_t idx : members)
            subset.push_back(capture.stream[idx].raw);
        pcap::write_capture(capture.meta, subset, fs::path(out_dir) / (name + ".pcap"));
    }
    std::cout << "split: wrote " << units.size() << " unit captures to " << out_dir << "\n";
    return 0;
}

// Units of the requested granularity over a whole capture.
std::vector<TrafficUnit> capture_units(const dataset::ParsedCapture& capture, UnitKind kind,
                                       double gap, bool global_bursts) {
    switch (kind) {
        case UnitKind::Session:
            return split_sessions(capture.stream);
        case UnitKind::Flow:
            return split_flows(capture.stream);
        case UnitKind::Packet:
            return split_packets(capture.stream);
        case UnitKind::Burst: {
            if (global_bursts)
                return split_bursts_global(capture.stream, gap);
            std::vector<TrafficUnit> all;
            for (const auto& s : split_sessions(capture.stream))
                for (auto& b : split_bursts(capture.stream, s.packets, gap)) {
                    b.key = static_cast<uint32_t>(all.size());
                    all.push_back(std::move(b));
                }
            return all;
        }
    }
    return {};
}

int run_extract(const GlobalOpts&, const std::string& input, const std::string& granularity,
                const ExtractionCli& ecli, CLI::App* cmd, const std::string& out_dir, double gap,
                bool global_bursts) {
    UnitKind kind = parse_granularity(granularity);
    ExtractionSpec spec = ecli.resolve(kind, cmd);
    log_config("extract", {"input=" + input, "granularity=" + granularity, spec.str()});

    auto capture = dataset::load_capture(input);
    fs::create_directories(out_dir);

    std::vector<dataset::Record> records;
    size_t units = 0;
    for (const TrafficUnit& unit : capture_units(capture, kind, gap, global_bursts)) {
        ++units;
        for (const Sample& sample : extract(capture.stream, unit, spec))
            records.push_back({0, sample.bytes});
    }
    dataset::write_records(fs::path(out_dir) / "samples.ntcs", records);
    std::cout << "extract: " << records.size() << " samples from " << units << " units ("
              << spec.str() << ") -> " << (fs::path(out_dir) / "samples.ntcs").string() << "\n";
    return 0;
}

int run_occlude(const GlobalOpts& g, const std::string& input, const std::string& strategy_id,
                const std::string& out_path, bool samples_mode, const std::string& granularity,
                const ExtractionCli& ecli, CLI::App* cmd, double gap, bool global_bursts) {
    log_config("occlude", {"input=" + input, "strategy=" + strategy_id,
                           "seed=" + std::to_string(g.seed),
                           samples_mode ? "mode=samples" : "mode=pcap"});
    const OcclusionStrategy* strategy = find_strategy(strategy_id);
    if (!strategy)
        throw IncompatibleSpec("--strategy: unknown strategy " + strategy_id);

    auto capture = dataset::load_capture(input);
    std::string file_name = fs::path(input).filename().string();

    if (samples_mode) {  // occluded, unlabeled sample records
        UnitKind kind = parse_granularity(granularity);
        ExtractionSpec spec = ecli.resolve(kind, cmd);
        if (!applicability(*strategy, kind, spec))
            throw IncompatibleSpec("--strategy: " + strategy_id +
                                   " is not applicable to granularity=" + granularity +
                                   " with " + spec.str());
        std::vector<dataset::Record> records;
        for (const TrafficUnit& unit : capture_units(capture, kind, gap, global_bursts)) {
            for (Sample& sample : extract(capture.stream, unit, spec)) {
                SampleFieldMap map = spans_to_fields(capture.stream, sample);
                uint64_t seed =
                    derive_seed(g.seed, file_name, sample.unit_key, sample.window_index);
                records.push_back({0, apply_strategy(sample, map, *strategy, seed).bytes});
            }
        }
        fs::create_directories(out_path);
        dataset::write_records(fs::path(out_path) / "samples.ntcs", records);
        std::cout << "occlude: " << records.size() << " samples under " << strategy_id
                  << " -> " << (fs::path(out_path) / "samples.ntcs").string() << "\n";
        return 0;
    }

    std::vector<pcap::RawPacket> out;
    out.reserve(capture.stream.size());
    for (const ParsedPacket& pkt : capture.stream) {
        pcap::RawPacket occluded = pkt.raw;
        occluded.data = apply_strategy_to_frame(pkt, *strategy, g.seed, file_name);
        out.push_back(std::move(occluded));
    }
    pcap::write_capture(capture.meta, out, out_path);
    std::cout << "occlude: " << out.size() << " frames under " << strategy_id << " -> "
              << out_path << "\n";
    return 0;
}

int run_label(const GlobalOpts&, const std::vector<std::string>& inputs, const std::string& csv,
              bool collapse) {
    auto files = expand_inputs(inputs);
    log_config("label", {"files=" + std::to_string(files.size())});
    std::ofstream os(csv, std::ios::trunc);
    if (!os)
        throw IoFailure("cannot create " + csv);
    os << "file,session,label,sni_conflict\n";
    dataset::LabelOptions opts;
    opts.collapse_subdomains = collapse;
    size_t labeled_count = 0, total = 0;
    for (const fs::path& file : files) {
        auto capture = dataset::load_capture(file);
        auto sessions = split_sessions(capture.stream);
        total += sessions.size();
        auto result = dataset::label_by_sni(capture.stream, std::move(sessions), opts);
        for (const auto& ls : result.labeled) {
            os << file.filename().string() << "," << ls.unit.key_str() << "," << ls.label << ","
               << (ls.sni_conflict ? 1 : 0) << "\n";
            ++labeled_count;
        }
    }
    std::cout << "label: " << labeled_count << "/" << total << " sessions labeled -> " << csv
              << "\n";
    return 0;
}

int run_dataset(const GlobalOpts& g, const std::vector<std::string>& inputs,
                const std::string& granularity, const std::string& strategy_id,
                const ExtractionCli& ecli, CLI::App* cmd, const std::string& split_arg,
                const std::string& out_dir, bool collapse, bool allow_small, double gap) {
    UnitKind kind = parse_granularity(granularity);
    ExtractionSpec spec = ecli.resolve(kind, cmd);

    std::vector<double> ratios;
    {
        std::stringstream ss(split_arg);
        std::string part;
        while (std::getline(ss, part, ',')) {
            try {
                size_t used = 0;
                ratios.push_back(std::stod(part, &used));
                if (used != part.size())
                    throw std::invalid_argument(part);
            } catch (const std::exception&) {
                throw IncompatibleSpec("--split: bad ratio '" + part + "'");
            }
        }
    }

    log_config("dataset",
               {"files=" + std::to_string(inputs.size()), "granularity=" + granularity,
                "strategy=" + strategy_id, spec.str(), "seed=" + std::to_string(g.seed)});

    const OcclusionStrategy* strategy = find_strategy(strategy_id);
    if (!strategy)
        throw IncompatibleSpec("--strategy: unknown strategy " + strategy_id);
    if (!applicability(*strategy, kind, spec))
        throw IncompatibleSpec("--strategy: " + strategy_id +
                               " is not applicable to granularity=" + granularity + " with " +
                               spec.str());

    std::vector<dataset::ParsedCapture> captures;
    std::vector<dataset::LabeledSession> labeled;
    dataset::LabelOptions lopts;
    lopts.collapse_subdomains = collapse;
    for (const fs::path& file : expand_inputs(inputs)) {
        dataset::ParsedCapture capture = dataset::load_capture(file);
        auto sessions = split_sessions(capture.stream);
        auto kept = dataset::filter_noise(capture.stream, std::move(sessions));
        auto result = dataset::label_by_sni(capture.stream, std::move(kept), lopts,
                                            static_cast<uint32_t>(captures.size()));
        for (auto& ls : result.labeled)
            labeled.push_back(std::move(ls));
        captures.push_back(std::move(capture));
    }
    if (labeled.empty()) {
        std::cerr << "dataset: no labelable sessions in the input\n";
        return 2;
    }

    auto split = dataset::split_train_test(labeled, ratios, g.seed, allow_small);
    for (const std::string& dropped : split.dropped_classes)
        std::cerr << "dataset: class too small, dropped: " << dropped << "\n";

    dataset::BundleOptions opts;
    opts.granularity = kind;
    opts.extraction = spec;
    opts.strategy_id = strategy_id;
    opts.seed = g.seed;
    opts.burst_gap = gap;
    opts.ratios = ratios;
    opts.allow_small = allow_small;
    opts.workers = g.workers;
    auto bundle = dataset::export_bundle(captures, labeled, split, opts, out_dir);

    std::cout << "dataset: " << bundle.class_map.size() << " classes";
    for (size_t i = 0; i < bundle.split_names.size(); ++i)
        std::cout << ", " << bundle.split_names[i] << "=" << bundle.record_counts[i];
    std::cout << " -> " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"packet-capture preprocessing for traffic-classification research"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    GlobalOpts g;
    if (const char* env_seed = std::getenv("NTC_SEED"))
        g.seed = std::strtoull(env_seed, nullptr, 10);
    app.add_option("--seed", g.seed, "global seed for all randomized actions (env NTC_SEED)");
    app.add_option("--workers", g.workers, "worker threads (default: hardware concurrency)");
    app.add_flag("-v,--verbose", g.verbose, "chatty diagnostics");

    // audit
    auto* audit_cmd = app.add_subcommand("audit", "encryption usage and cipher-suite report");
    std::vector<std::string> audit_inputs;
    std::string audit_csv, audit_json, audit_text;
    audit_cmd->add_option("--input", audit_inputs, "pcap files or directories")->required();
    audit_cmd->add_option("--csv", audit_csv, "CSV report path");
    audit_cmd->add_option("--json", audit_json, "JSON report path");
    audit_cmd->add_option("--text", audit_text, "text report path");

    // split
    auto* split_cmd = app.add_subcommand("split", "one capture per traffic unit");
    std::string split_input, split_gran = "session", split_out;
    double split_gap = 1.0;
    bool split_global_bursts = false;
    split_cmd->add_option("--input", split_input, "pcap file")->required();
    split_cmd->add_option("--granularity", split_gran, "packet|burst|flow|session");
    split_cmd->add_option("--out", split_out, "output directory")->required();
    split_cmd->add_option("--gap", split_gap, "burst gap threshold in seconds");
    split_cmd->add_flag("--global-bursts", split_global_bursts,
                        "bursts across the whole capture instead of per session");

    // extract
    auto* extract_cmd = app.add_subcommand("extract", "fixed-size byte samples");
    std::string extract_input, extract_gran = "session", extract_out;
    double extract_gap = 1.0;
    bool extract_global_bursts = false;
    ExtractionCli extract_ecli;
    extract_cmd->add_option("--input", extract_input, "pcap file")->required();
    extract_cmd->add_option("--granularity", extract_gran, "packet|burst|flow|session");
    extract_cmd->add_option("--out", extract_out, "output directory")->required();
    extract_cmd->add_option("--gap", extract_gap, "burst gap threshold in seconds");
    extract_cmd->add_flag("--global-bursts", extract_global_bursts, "whole-capture bursts");
    extract_ecli.add_to(extract_cmd);

    // occlude
    auto* occlude_cmd = app.add_subcommand("occlude", "feature occlusion over frames or samples");
    std::string occlude_input, occlude_strategy = "A1", occlude_out, occlude_gran = "session";
    bool occlude_samples = false, occlude_global_bursts = false;
    double occlude_gap = 1.0;
    ExtractionCli occlude_ecli;
    occlude_cmd->add_option("--input", occlude_input, "pcap file")->required();
    occlude_cmd->add_option("--strategy", occlude_strategy, "occlusion strategy id");
    occlude_cmd->add_option("--out", occlude_out,
                            "occluded pcap path, or a directory with --samples")
        ->required();
    occlude_cmd->add_flag("--samples", occlude_samples,
                          "emit occluded sample records instead of a pcap");
    occlude_cmd->add_option("--granularity", occlude_gran,
                            "unit kind for --samples: packet|burst|flow|session");
    occlude_cmd->add_option("--gap", occlude_gap, "burst gap threshold in seconds");
    occlude_cmd->add_flag("--global-bursts", occlude_global_bursts, "whole-capture bursts");
    occlude_ecli.add_to(occlude_cmd);

    // label
    auto* label_cmd = app.add_subcommand("label", "SNI-based session labels as CSV");
    std::vector<std::string> label_inputs;
    std::string label_csv;
    bool label_collapse = false;
    label_cmd->add_option("--input", label_inputs, "pcap files or directories")->required();
    label_cmd->add_option("--csv", label_csv, "output CSV path")->required();
    label_cmd->add_flag("--collapse-subdomains", label_collapse,
                        "label by the registrable suffix");

    // dataset
    auto* dataset_cmd = app.add_subcommand("dataset", "labeled, occluded sample bundle");
    std::vector<std::string> dataset_inputs;
    std::string dataset_gran = "session", dataset_strategy = "A1", dataset_split = "0.8,0.1,0.1";
    std::string dataset_out;
    bool dataset_collapse = false, dataset_allow_small = false;
    double dataset_gap = 1.0;
    ExtractionCli dataset_ecli;
    dataset_cmd->add_option("--input", dataset_inputs, "pcap files or directories")->required();
    dataset_cmd->add_option("--granularity", dataset_gran, "packet|burst|flow|session");
    dataset_cmd->add_option("--strategy", dataset_strategy, "occlusion strategy id");
    dataset_cmd->add_option("--split", dataset_split,
                            "comma-separated ratios, e.g. 0.8,0.1,0.1");
    dataset_cmd->add_option("--out", dataset_out, "output directory")->required();
    dataset_cmd->add_flag("--collapse-subdomains", dataset_collapse, "collapse SNI subdomains");
    dataset_cmd->add_flag("--allow-small", dataset_allow_small,
                          "keep classes smaller than the split count");
    dataset_cmd->add_option("--gap", dataset_gap, "burst gap threshold in seconds");
    dataset_ecli.add_to(dataset_cmd);

    try {
        app.parse(argc, argv);
        if (audit_cmd->parsed())
            return run_audit(g, audit_inputs, audit_csv, audit_json, audit_text);
        if (split_cmd->parsed())
            return run_split(g, split_input, split_gran, split_out, split_gap,
                             split_global_bursts);
        if (extract_cmd->parsed())
            return run_extract(g, extract_input, extract_gran, extract_ecli, extract_cmd,
                               extract_out, extract_gap, extract_global_bursts);
        if (occlude_cmd->parsed())
            return run_occlude(g, occlude_input, occlude_strategy, occlude_out, occlude_samples,
                               occlude_gran, occlude_ecli, occlude_cmd, occlude_gap,
                               occlude_global_bursts);
        if (label_cmd->parsed())
            return run_label(g, label_inputs, label_csv, label_collapse);
        if (dataset_cmd->parsed())
            return run_dataset(g, dataset_inputs, dataset_gran, dataset_strategy, dataset_ecli,
                               dataset_cmd, dataset_split, dataset_out, dataset_collapse,
                               dataset_allow_small, dataset_gap);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);  // prints usage or help text
        return code == 0 ? 0 : 1;
    } catch (const IncompatibleSpec& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
