#include "threatnet/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <ostream>
#include <sstream>
#include <thread>

#include "threatnet/common.hpp"
#include "threatnet/community.hpp"
#include "threatnet/pdns.hpp"
#include "threatnet/ranking.hpp"
#include "threatnet/serialize.hpp"
#include "threatnet/tagging.hpp"
#include "threatnet/whitelist.hpp"

namespace threatnet {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct StageTimer {
    StageRecord record;
    Clock::time_point start = Clock::now();

    explicit StageTimer(std::string name) { record.name = std::move(name); }
    StageRecord finish(uint64_t in_count, uint64_t out_count) {
        record.seconds = seconds_since(start);
        record.in_count = in_count;
        record.out_count = out_count;
        return record;
    }
};

std::filesystem::path artifact(const Config& config, const std::string& name) {
    return run_dir(config) / name;
}

void emit(RunManifest& manifest, const Config& config, const std::string& name,
          const std::string& content) {
    write_file_atomic(artifact(config, name), content);
    manifest.outputs.push_back(name);
}

// Runs fn(i) for i in [0, n) across a bounded pool. Results must be written
// to caller-owned slots so ordering stays canonical.
template <typename Fn>
void parallel_for(size_t n, size_t workers, Fn&& fn) {
    workers = std::max<size_t>(1, std::min(workers, n == 0 ? 1 : n));
    if (workers == 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

DomainWhitelist load_domain_whitelist(const Config& config) {
    auto path = config.get_path("whitelist.domains_path");
    if (!path) return DomainWhitelist{};
    ListFormat format =
        config.get<std::string>("whitelist.domains_format", "plain") == "ranked"
            ? ListFormat::kRanked
            : ListFormat::kPlain;
    uint64_t top_n = config.get<uint64_t>("whitelist.top_n", 0);
    return load_domain_list(*path, format, top_n);
}

IpWhitelist load_ip_whitelist(const Config& config) {
    auto path = config.get_path("whitelist.ip_path");
    if (!path) return IpWhitelist{};
    return load_ip_list(*path);
}

std::string flavor_file(const char* prefix, Flavor flavor, const char* ext) {
    std::string name = prefix;
    name += "_";
    name += to_string(flavor);
    name += ext;
    return name;
}

} // namespace

std::string RunManifest::to_json() const {
    nlohmann::json j;
    j["version"] = version;
    j["epoch"] = epoch;
    j["config"] = config_snapshot;
    nlohmann::json stages_json = nlohmann::json::array();
    for (const auto& s : stages)
        stages_json.push_back(nlohmann::json{{"name", s.name},
                                             {"seconds", s.seconds},
                                             {"in", s.in_count},
                                             {"out", s.out_count}});
    j["stages"] = std::move(stages_json);
    j["outputs"] = outputs;
    return j.dump(2) + "\n";
}

size_t worker_count(const Config& config) {
    if (const char* env = std::getenv("THREATNET_WORKERS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<size_t>(v);
    }
    long from_config = config.get<long>("workers", 0);
    if (from_config > 0) return static_cast<size_t>(from_config);
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

std::filesystem::path run_dir(const Config& config) {
    std::filesystem::path out = config.get<std::string>("out", "out");
    if (out.is_relative()) out = config.base_dir() / out;
    return out / config.get<std::string>("epoch", "default");
}

std::vector<Flavor> selected_flavors(const Config& config) {
    std::string flavor = config.get<std::string>("flavor", "combined");
    if (flavor == "all")
        return {Flavor::kIpOnly, Flavor::kDomainOnly, Flavor::kCombined};
    auto f = flavor_from_string(flavor);
    if (!f) throw ConfigError("invalid flavor: " + flavor);
    return {*f};
}

void validate_config(const Config& config) {
    selected_flavors(config);
    for (const char* key :
         {"input.reports", "whitelist.domains_path", "whitelist.ip_path", "pdns.path",
          "tag.pc_path", "tag.spam_path", "tag.phishing_path", "tag.probing_path"}) {
        auto path = config.get_path(key);
        if (path && !std::filesystem::exists(*path))
            throw ConfigError(std::string("configured path missing (") + key +
                              "): " + path->string());
    }
    if (config.get<bool>("pdns.enabled", false) && !config.get_path("pdns.path"))
        throw ConfigError("pdns.enabled requires pdns.path");
    std::string combine = config.get<std::string>("extract.combine", "union");
    if (combine != "union" && combine != "intersection")
        throw ConfigError("extract.combine must be union or intersection");
}

StageRecord stage_extract(const Config& config, RunManifest& manifest) {
    StageTimer timer("extract");
    auto reports_path = config.get_path("input.reports");
    if (!reports_path) throw ConfigError("input.reports is required");

    ReportParseStats stats;
    std::vector<AnalysisReport> reports = load_reports_jsonl(*reports_path, stats);

    std::vector<std::string> dynamic_fields = config.get<std::vector<std::string>>(
        "extract.dynamic_fields", default_dynamic_fields());

    std::vector<ExtractionResult> per_report(reports.size());
    parallel_for(reports.size(), worker_count(config), [&](size_t i) {
        const AnalysisReport& r = reports[i];
        per_report[i] = r.structured() ? extract_from_structured(r, dynamic_fields)
                                       : extract_from_text(r.text, r.sample, r.source);
    });

    CombineMode mode =
        config.get<std::string>("extract.combine", "union") == "intersection"
            ? CombineMode::kIntersection
            : CombineMode::kUnion;
    std::vector<ExtractionResult> combined = combine_per_sample(per_report, mode);

    std::map<std::string, std::string> families;
    for (const auto& r : reports)
        if (!r.family.empty()) families[r.sample.hash] = r.family;

    emit(manifest, config, "extraction.json", extraction_to_json(combined, families));
    return timer.finish(reports.size(), combined.size());
}

StageRecord stage_filter(const Config& config, RunManifest& manifest) {
    StageTimer timer("filter");
    std::vector<ExtractionResult> results;
    std::map<std::string, std::string> families;
    extraction_from_json(read_file(artifact(config, "extraction.json")), results,
                         families);

    DomainWhitelist dw = load_domain_whitelist(config);
    IpWhitelist iw = load_ip_whitelist(config);

    std::vector<ExtractionResult> filtered;
    filtered.reserve(results.size());
    uint64_t in_count = 0;
    for (const auto& r : results) {
        in_count += r.indicators.size();
        filtered.push_back(filter(r, dw, iw));
    }
    uint64_t out_count = 0;
    for (const auto& r : filtered) out_count += r.indicators.size();

    emit(manifest, config, "filtered.json", extraction_to_json(filtered, families));
    return timer.finish(in_count, out_count);
}

StageRecord stage_enrich(const Config& config, RunManifest& manifest) {
    StageTimer timer("enrich");
    std::vector<ExtractionResult> results;
    std::map<std::string, std::string> families;
    extraction_from_json(read_file(artifact(config, "filtered.json")), results, families);

    auto pdns_path = config.get_path("pdns.path");
    if (!pdns_path) throw ConfigError("pdns.path is required for enrichment");
    PdnsStore store;
    store.load_jsonl(*pdns_path);

    std::optional<TimeWindow> window;
    int64_t staleness_days = config.get<int64_t>("pdns.staleness_days", 0);
    if (staleness_days > 0) {
        int64_t now = config.get<int64_t>(
            "pdns.now", static_cast<int64_t>(std::time(nullptr)));
        window = TimeWindow{now - staleness_days * 86400, now};
    }

    std::set<NetworkIndicator> input;
    for (const auto& r : results)
        for (const auto& [ind, src] : r.indicators) input.insert(ind);

    DomainWhitelist dw = load_domain_whitelist(config);
    IpWhitelist iw = load_ip_whitelist(config);
    int rounds = static_cast<int>(config.get<int64_t>("pdns.rounds", 1));

    EnrichResult enriched = enrich(input, store, window, dw, iw, rounds);
    emit(manifest, config, "enrichment.json", enrichment_to_json(enriched));
    return timer.finish(input.size(), enriched.enriched.size());
}

StageRecord stage_build(const Config& config, RunManifest& manifest) {
    StageTimer timer("build");
    std::vector<ExtractionResult> results;
    std::map<std::string, std::string> families;
    extraction_from_json(read_file(artifact(config, "filtered.json")), results, families);

    std::vector<std::pair<std::string, std::string>> resolution_edges;
    auto enrichment_path = artifact(config, "enrichment.json");
    if (config.get<bool>("pdns.enabled", false) &&
        std::filesystem::exists(enrichment_path)) {
        EnrichResult enrichment = enrichment_from_json(read_file(enrichment_path));
        resolution_edges.assign(enrichment.resolution_edges.begin(),
                                enrichment.resolution_edges.end());
    }

    HeteroGraph hetero = build_hetero(results, resolution_edges, families);
    if (hetero.node_count() == 0)
        throw EmptyGraphError("build: no nodes (empty or fully filtered input)");

    emit(manifest, config, "hetero.json", hetero_to_json(hetero));
    emit(manifest, config, "hetero.dot", hetero_to_dot(hetero));
    emit(manifest, config, "hetero.graphml", hetero_to_graphml(hetero));
    return timer.finish(results.size(), hetero.node_count());
}

std::vector<StageRecord> stage_analyze(const Config& config, Flavor flavor,
                                       RunManifest& manifest) {
    std::vector<StageRecord> records;
    StageTimer timer(std::string("analyze:") + to_string(flavor));

    HeteroGraph hetero = hetero_from_json(read_file(artifact(config, "hetero.json")));
    ThreatNetwork projected = project(hetero, flavor);
    ThreatNetwork pruned =
        prune_weak(projected, config.get<double>("prune.min_degree", 1.0),
                   config.get<uint64_t>("prune.min_component", 3));

    emit(manifest, config, flavor_file("threatnet", flavor, ".json"),
         network_to_json(pruned));
    emit(manifest, config, flavor_file("threatnet", flavor, ".dot"),
         network_to_dot(pruned));
    emit(manifest, config, flavor_file("threatnet", flavor, ".graphml"),
         network_to_graphml(pruned));

    LouvainParams params;
    params.resolution = config.get<double>("community.resolution", 1.0);
    params.min_gain = config.get<double>("community.min_gain", 1e-7);
    params.max_passes = static_cast<int>(config.get<int64_t>("community.max_passes", 32));
    if (config.has("community.seed"))
        params.shuffle_seed = config.get<uint64_t>("community.seed", 0);

    Partition partition;
    SplitResult splits;
    if (pruned.total_weight > 0.0) {
        partition = detect(pruned, params);
        splits = split(pruned, partition);
    } else {
        // Degenerate network: every node its own community, no modularity.
        partition.resolution = params.resolution;
        partition.assignment.resize(pruned.node_count());
        for (uint32_t v = 0; v < pruned.node_count(); ++v) partition.assignment[v] = v;
        partition.community_count = static_cast<uint32_t>(pruned.node_count());
        if (pruned.node_count() > 0) splits = split(pruned, partition);
    }
    emit(manifest, config, flavor_file("partition", flavor, ".json"),
         partition_to_json(pruned, partition, splits));

    records.push_back(timer.finish(hetero.node_count(), pruned.node_count()));
    return records;
}

StageRecord stage_rank(const Config& config, Flavor flavor, RunManifest& manifest) {
    StageTimer timer(std::string("rank:") + to_string(flavor));

    ThreatNetwork tn = network_from_json(
        read_file(artifact(config, flavor_file("threatnet", flavor, ".json"))));
    Partition partition;
    bool have_partition = false;
    auto partition_path = artifact(config, flavor_file("partition", flavor, ".json"));
    if (std::filesystem::exists(partition_path)) {
        partition = partition_from_json(read_file(partition_path), tn);
        have_partition = true;
    }

    PageRankParams params;
    params.damping = config.get<double>("rank.damping", 0.85);
    params.epsilon = config.get<double>("rank.epsilon", 0.001);
    params.max_iters = static_cast<int>(config.get<int64_t>("rank.max_iters", 100));

    std::ostringstream combined_csv;
    if (tn.node_count() == 0) {
        combined_csv << "rank,kind,key,pagerank,degree,community\n";
        emit(manifest, config, flavor_file("priority", flavor, ".csv"),
             combined_csv.str());
        return timer.finish(0, 0);
    }

    RankVector rv = pagerank(tn, params);
    PriorityList list = priority_list(tn, rv, have_partition ? &partition : nullptr);
    write_priority_csv(combined_csv, tn, list);
    emit(manifest, config, flavor_file("priority", flavor, ".csv"), combined_csv.str());

    if (flavor == Flavor::kCombined) {
        // Per-kind lists so the analyst can pick the actionable node type.
        std::ostringstream ip_csv, domain_csv;
        write_priority_csv(ip_csv, tn, filter_by_kind(tn, list, NodeKind::kIp));
        write_priority_csv(domain_csv, tn, filter_by_kind(tn, list, NodeKind::kDomain));
        emit(manifest, config, "priority_combined_ips.csv", ip_csv.str());
        emit(manifest, config, "priority_combined_domains.csv", domain_csv.str());
    }

    // Ranks recomputed inside each sub-threat network, alongside the
    // whole-network list above.
    if (have_partition) {
        std::ostringstream per_comm;
        per_comm << "rank,kind,key,pagerank,degree,community\n";
        SplitResult splits = split(tn, partition);
        char buf[64];
        for (size_t c = 0; c < splits.communities.size(); ++c) {
            const ThreatNetwork& sub = splits.communities[c];
            if (sub.node_count() == 0) continue;
            RankVector sub_rv = pagerank(sub, params);
            PriorityList sub_list = priority_list(sub, sub_rv);
            size_t rank = 1;
            for (const auto& entry : sub_list.entries) {
                const NodeId& id = sub.nodes[entry.node];
                std::snprintf(buf, sizeof(buf), "%.12g", entry.pagerank);
                per_comm << rank++ << ',' << to_string(id.kind) << ',' << id.key << ','
                         << buf;
                std::snprintf(buf, sizeof(buf), "%.12g", entry.weighted_degree);
                per_comm << ',' << buf << ',' << c << '\n';
            }
        }
        emit(manifest, config, flavor_file("priority", flavor, "_communities.csv"),
             per_comm.str());
    }
    return timer.finish(tn.node_count(), list.entries.size());
}

StageRecord stage_tag(const Config& config, Flavor flavor, RunManifest& manifest) {
    StageTimer timer(std::string("tag:") + to_string(flavor));

    ThreatNetwork tn = network_from_json(
        read_file(artifact(config, flavor_file("threatnet", flavor, ".json"))));
    Partition partition;
    bool have_partition = false;
    auto partition_path = artifact(config, flavor_file("partition", flavor, ".json"));
    if (tn.node_count() > 0 && std::filesystem::exists(partition_path)) {
        partition = partition_from_json(read_file(partition_path), tn);
        have_partition = true;
    }

    FeedPaths paths;
    paths.pc_malware = config.get_path("tag.pc_path");
    paths.spam = config.get_path("tag.spam_path");
    paths.phishing = config.get_path("tag.phishing_path");
    paths.probing = config.get_path("tag.probing_path");
    FeedStore feeds = FeedStore::load(
        paths, config.get<uint64_t>("tag.memory_budget_mb", 512));

    TagParams params;
    params.suffix_match = config.get<bool>("tag.suffix_match", false);
    params.top_k = config.get<uint64_t>("tag.top_k", 10);
    params.workers = worker_count(config);

    TagReport report = tag(tn, have_partition ? &partition : nullptr, feeds, params);
    emit(manifest, config, flavor_file("tags", flavor, ".json"),
         tag_report_to_json(tn, report));
    std::ostringstream families_csv;
    write_family_csv(families_csv, report, params.top_k);
    emit(manifest, config, flavor_file("families", flavor, ".csv"), families_csv.str());
    return timer.finish(tn.node_count(), report.overall.events.total());
}

namespace {

// Reattaches the failing stage's name to whatever it threw, preserving the
// exception type for the CLI's exit-code mapping.
template <typename Fn>
auto named_stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const EmptyGraphError& e) {
        throw EmptyGraphError(std::string(name) + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(std::string(name) + ": " + e.what());
    } catch (const IoError& e) {
        throw IoError(std::string(name) + ": " + e.what());
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("stage ") + name + " failed: " + e.what());
    }
}

} // namespace

RunManifest run(const Config& config) {
    validate_config(config);
    RunManifest manifest;
    manifest.version = kVersion;
    manifest.epoch = config.get<std::string>("epoch", "default");
    manifest.config_snapshot = config.root();

    std::filesystem::create_directories(run_dir(config));

    manifest.stages.push_back(
        named_stage("extract", [&] { return stage_extract(config, manifest); }));
    manifest.stages.push_back(
        named_stage("filter", [&] { return stage_filter(config, manifest); }));
    if (config.get<bool>("pdns.enabled", false))
        manifest.stages.push_back(
            named_stage("enrich", [&] { return stage_enrich(config, manifest); }));
    manifest.stages.push_back(
        named_stage("build", [&] { return stage_build(config, manifest); }));

    bool tagging_enabled =
        config.get<bool>("tag.enabled",
                         config.has("tag.pc_path") || config.has("tag.spam_path") ||
                             config.has("tag.phishing_path") ||
                             config.has("tag.probing_path"));

    std::vector<Flavor> flavors = selected_flavors(config);
    struct FlavorOutput {
        RunManifest manifest;  // per-flavor outputs and stages, merged after join
        std::exception_ptr error;
    };
    std::vector<FlavorOutput> outputs(flavors.size());

    std::vector<std::thread> threads;
    for (size_t i = 0; i < flavors.size(); ++i) {
        threads.emplace_back([&, i] {
            try {
                auto& m = outputs[i].manifest;
                const char* fl = to_string(flavors[i]);
                named_stage(fl, [&] {
                    for (auto& rec : stage_analyze(config, flavors[i], m))
                        m.stages.push_back(rec);
                    m.stages.push_back(stage_rank(config, flavors[i], m));
                    if (tagging_enabled)
                        m.stages.push_back(stage_tag(config, flavors[i], m));
                    return 0;
                });
            } catch (...) {
                outputs[i].error = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& o : outputs)
        if (o.error) std::rethrow_exception(o.error);
    for (auto& o : outputs) {
        for (auto& s : o.manifest.stages) manifest.stages.push_back(std::move(s));
        for (auto& f : o.manifest.outputs) manifest.outputs.push_back(std::move(f));
    }

    write_file_atomic(artifact(config, "manifest.json"), manifest.to_json());
    manifest.outputs.push_back("manifest.json");
    return manifest;
}

std::vector<BenchRow> bench(const std::vector<RandomGraphSpec>& specs,
                            const std::vector<std::string>& algorithms) {
    std::vector<BenchRow> rows;
    for (const auto& spec : specs) {
        ThreatNetwork tn = gen_random(spec);
        for (const auto& algorithm : algorithms) {
            auto start = Clock::now();
            if (algorithm == "louvain") {
                if (tn.total_weight > 0.0) detect(tn, LouvainParams{});
            } else if (algorithm == "pagerank") {
                pagerank(tn, PageRankParams{});
            } else {
                throw ConfigError("unknown bench algorithm: " + algorithm);
            }
            rows.push_back(BenchRow{spec.n, spec.p, spec.seed, algorithm,
                                    seconds_since(start)});
        }
    }
    return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
    out << "n,p,seed,algorithm,seconds\n";
    char buf[64];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%.6g", row.p);
        out << row.n << ',' << buf << ',' << row.seed << ',' << row.algorithm << ',';
        std::snprintf(buf, sizeof(buf), "%.6f", row.seconds);
        out << buf << '\n';
    }
}

} // namespace threatnet
