#include <doctest.h>

#include <fstream>

#include "fixtures.hpp"
#include "threatnet/common.hpp"
#include "threatnet/pipeline.hpp"
#include "threatnet/serialize.hpp"

using namespace threatnet;

namespace {

Config fixture_config(const std::filesystem::path& out_dir,
                      const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
    Config config = Config::from_file(fixtures::fixture_dir() / "config.json");
    config.set_override("out", out_dir.string());
    for (const auto& [key, value] : overrides) config.set_override(key, value);
    return config;
}

} // namespace

TEST_CASE("config dot paths, overrides and path resolution") {
    Config config = Config::from_json(nlohmann::json{{"rank", {{"damping", 0.9}}}}, "/base");
    CHECK(config.get<double>("rank.damping", 0.85) == 0.9);
    CHECK(config.get<double>("rank.epsilon", 0.001) == 0.001);
    config.set_override("rank.damping", "0.7");
    CHECK(config.get<double>("rank.damping", 0.85) == 0.7);
    config.set_override("whitelist.top_n", "42");
    CHECK(config.get<uint64_t>("whitelist.top_n", 0) == 42);
    config.set_override("pdns.path", "store.jsonl");
    CHECK(config.get_path("pdns.path")->string() == "/base/store.jsonl");
    CHECK_FALSE(config.get_path("tag.pc_path").has_value());
    CHECK_THROWS_AS(config.get<double>("pdns.path", 0.0), ConfigError);
}

TEST_CASE("validate_config rejects missing paths and bad flavors") {
    fixtures::TempDir tmp;
    Config config = fixture_config(tmp.path());
    validate_config(config);  // fixture paths all exist

    Config bad_flavor = fixture_config(tmp.path(), {{"flavor", "everything"}});
    CHECK_THROWS_AS(validate_config(bad_flavor), ConfigError);

    Config missing = fixture_config(tmp.path(), {{"pdns.path", "no-such-file.jsonl"}});
    CHECK_THROWS_AS(validate_config(missing), ConfigError);
}

TEST_CASE("full run on the bundled fixture produces the expected artifacts") {
    fixtures::TempDir tmp;
    Config config = fixture_config(tmp.path());
    RunManifest manifest = run(config);

    auto out = run_dir(config);
    for (const char* name :
         {"extraction.json", "filtered.json", "enrichment.json", "hetero.json",
          "threatnet_combined.json", "partition_combined.json", "priority_combined.csv",
          "priority_combined_ips.csv", "priority_combined_domains.csv",
          "tags_combined.json", "families_combined.csv", "manifest.json"})
        CHECK(std::filesystem::exists(out / name));

    // Hand-checked structure of the fixture's combined network.
    ThreatNetwork combined =
        network_from_json(read_file(out / "threatnet_combined.json"));
    CHECK(combined.node_count() == 7);
    CHECK(combined.edge_count() == 11);
    auto panel = combined.find(NodeId{NodeKind::kDomain, "panel.darkhost.net"});
    auto ip81 = combined.find(NodeId{NodeKind::kIp, "81.10.20.30"});
    REQUIRE(panel.has_value());
    REQUIRE(ip81.has_value());
    bool found = false;
    for (const auto& e : combined.edges) {
        if ((e.a == *panel && e.b == *ip81) || (e.a == *ip81 && e.b == *panel)) {
            found = true;
            CHECK(e.weight == 2.0);  // one shared sample + direct resolution
            CHECK(e.direct_resolution);
        }
    }
    CHECK(found);

    // Enrichment-only nodes arrived via resolution edges.
    CHECK(combined.find(NodeId{NodeKind::kIp, "45.77.8.9"}).has_value());
    CHECK(combined.find(NodeId{NodeKind::kDomain, "spamhost.net"}).has_value());
    // The round-2-only record must not leak in.
    CHECK_FALSE(combined.find(NodeId{NodeKind::kDomain, "static.evilcdn.org"}).has_value());

    // Single-kind flavors, hand-checked.
    ThreatNetwork ips = network_from_json(read_file(out / "threatnet_ip.json"));
    CHECK(ips.node_count() == 3);
    CHECK(ips.edge_count() == 2);
    ThreatNetwork domains = network_from_json(read_file(out / "threatnet_domain.json"));
    CHECK(domains.node_count() == 3);
    CHECK(domains.edge_count() == 2);
    // spamhost.net is isolated in the domain flavor and pruned.
    CHECK_FALSE(domains.find(NodeId{NodeKind::kDomain, "spamhost.net"}).has_value());

    // Tag events on the combined flavor: 4 events, one per feed.
    std::string tags = read_file(out / "tags_combined.json");
    auto tag_json = nlohmann::json::parse(tags);
    CHECK(tag_json["overall"]["events"]["spam"] == 1);
    CHECK(tag_json["overall"]["events"]["pc_malware"] == 1);
    CHECK(tag_json["overall"]["events"]["phishing"] == 1);
    CHECK(tag_json["overall"]["events"]["probing"] == 1);
    CHECK(tag_json["overall"]["shares"]["spam"] == 25.0);

    CHECK(manifest.stages.size() >= 10);
}

TEST_CASE("stage reruns from persisted intermediates are byte-identical") {
    fixtures::TempDir tmp;
    Config config = fixture_config(tmp.path());
    run(config);
    auto out = run_dir(config);

    auto before = fixtures::snapshot_dir(out, {"manifest.json"});
    // Rerun downstream stages in place; inputs are the persisted artifacts.
    RunManifest scratch;
    stage_build(config, scratch);
    for (Flavor f : selected_flavors(config)) {
        stage_analyze(config, f, scratch);
        stage_rank(config, f, scratch);
        stage_tag(config, f, scratch);
    }
    auto after = fixtures::snapshot_dir(out, {"manifest.json"});
    CHECK(before == after);
}

TEST_CASE("pdns disabled: enrichment skipped, resolution edges absent") {
    fixtures::TempDir tmp;
    Config config = fixture_config(tmp.path(), {{"pdns.enabled", "false"}});
    run(config);
    auto out = run_dir(config);
    CHECK_FALSE(std::filesystem::exists(out / "enrichment.json"));

    HeteroGraph hetero = hetero_from_json(read_file(out / "hetero.json"));
    CHECK(hetero.node_count() == 8);  // 3 samples + 5 filtered indicators
    for (const auto& e : hetero.edges) CHECK(e.kind == HeteroEdgeKind::kObserved);
}

TEST_CASE("empty input file aborts in the build stage") {
    fixtures::TempDir tmp;
    std::ofstream(tmp.file("empty.jsonl")).close();
    Config config = fixture_config(tmp.path(), {{"input.reports", tmp.file("empty.jsonl").string()}});
    RunManifest manifest;
    manifest.config_snapshot = config.root();
    std::filesystem::create_directories(run_dir(config));
    stage_extract(config, manifest);
    stage_filter(config, manifest);
    CHECK_THROWS_AS(stage_build(config, manifest), EmptyGraphError);
}

TEST_CASE("worker pool size does not change any artifact") {
    fixtures::TempDir tmp1, tmp2;
    Config one = fixture_config(tmp1.path(), {{"workers", "1"}});
    Config eight = fixture_config(tmp2.path(), {{"workers", "8"}});
    run(one);
    run(eight);
    auto a = fixtures::snapshot_dir(run_dir(one), {"manifest.json"});
    auto b = fixtures::snapshot_dir(run_dir(eight), {"manifest.json"});
    CHECK(a == b);
}

TEST_CASE("repeated runs are byte-identical") {
    fixtures::TempDir tmp1, tmp2;
    Config c1 = fixture_config(tmp1.path());
    Config c2 = fixture_config(tmp2.path());
    run(c1);
    run(c2);
    auto a = fixtures::snapshot_dir(run_dir(c1), {"manifest.json"});
    auto b = fixtures::snapshot_dir(run_dir(c2), {"manifest.json"});
    REQUIRE(!a.empty());
    CHECK(a == b);
}

TEST_CASE("intersection combine mode drops single-source indicators") {
    fixtures::TempDir tmp;
    Config config = fixture_config(tmp.path(), {{"extract.combine", "intersection"}});
    RunManifest manifest;
    manifest.config_snapshot = config.root();
    std::filesystem::create_directories(run_dir(config));
    stage_extract(config, manifest);

    std::vector<ExtractionResult> results;
    std::map<std::string, std::string> families;
    extraction_from_json(read_file(run_dir(config) / "extraction.json"), results,
                         families);
    // Every fixture sample has a single source, so intersection keeps all.
    uint64_t total = 0;
    for (const auto& r : results) total += r.indicators.size();
    CHECK(total == 11);
    CHECK(families.size() == 3);
}

TEST_CASE("per-community priority list covers every ranked node once") {
    fixtures::TempDir tmp;
    Config config = fixture_config(tmp.path(), {{"flavor", "combined"}});
    run(config);
    auto out = run_dir(config);
    REQUIRE(std::filesystem::exists(out / "priority_combined_communities.csv"));

    std::string csv = read_file(out / "priority_combined_communities.csv");
    size_t rows = std::count(csv.begin(), csv.end(), '\n') - 1;  // minus header
    ThreatNetwork combined =
        network_from_json(read_file(out / "threatnet_combined.json"));
    CHECK(rows == combined.node_count());
    // Ranks restart at 1 inside each community.
    CHECK(csv.find("\n1,") != std::string::npos);
}

TEST_CASE("pdns staleness window filters stale records") {
    // Window [now - 1d, now] with now far past the fixture's last_seen
    // excludes every record: no enrichment, no resolution edges.
    fixtures::TempDir tmp;
    Config config = fixture_config(
        tmp.path(), {{"pdns.staleness_days", "1"}, {"pdns.now", "1700000000"}});
    run(config);
    auto out = run_dir(config);
    EnrichResult enrichment = enrichment_from_json(read_file(out / "enrichment.json"));
    CHECK(enrichment.enriched.size() == 5);  // inputs only
    CHECK(enrichment.resolution_edges.empty());

    // A window that straddles the record timestamps keeps them.
    fixtures::TempDir tmp2;
    Config fresh = fixture_config(
        tmp2.path(), {{"pdns.staleness_days", "365"}, {"pdns.now", "1510000000"}});
    run(fresh);
    EnrichResult kept =
        enrichment_from_json(read_file(run_dir(fresh) / "enrichment.json"));
    CHECK(kept.enriched.size() == 7);
}

TEST_CASE("corrupt intermediate artifact maps to stage-failure exit code") {
    fixtures::TempDir tmp;
    auto config_path = (fixtures::fixture_dir() / "config.json").string();
    int code = fixtures::run_cli({"run", "--config", config_path, "--out",
                                  tmp.path().string()});
    REQUIRE(code == 0);
    {
        std::ofstream corrupt(tmp.path() / "fixture" / "threatnet_combined.json");
        corrupt << "{ not json";
    }
    int rank_code = fixtures::run_cli({"rank", "--config", config_path, "--out",
                                       tmp.path().string(), "--flavor", "combined"});
    CHECK(rank_code == 3);
}

TEST_CASE("bench emits one row per spec and algorithm") {
    auto rows = bench({{200, 0.02, 1}, {400, 0.01, 1}}, {"louvain", "pagerank"});
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].algorithm == "louvain");
    CHECK(rows[1].algorithm == "pagerank");
    CHECK(rows[0].n == 200);
    CHECK(rows[2].n == 400);
    for (const auto& row : rows) CHECK(row.seconds >= 0.0);

    std::ostringstream csv;
    write_bench_csv(csv, rows);
    CHECK(csv.str().starts_with("n,p,seed,algorithm,seconds\n"));

    CHECK(bench({}, {"louvain"}).empty());
    CHECK_THROWS_AS(bench({{10, 0.1, 1}}, {"quicksort"}), ConfigError);

    // Same spec + seed: identical rows apart from the measured seconds.
    auto again = bench({{200, 0.02, 1}, {400, 0.01, 1}}, {"louvain", "pagerank"});
    REQUIRE(again.size() == rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        CHECK(again[i].n == rows[i].n);
        CHECK(again[i].p == rows[i].p);
        CHECK(again[i].seed == rows[i].seed);
        CHECK(again[i].algorithm == rows[i].algorithm);
    }
}

TEST_CASE("cli: bench writes the timing table") {
    fixtures::TempDir tmp;
    int code = fixtures::run_cli({"bench", "--sizes", "100", "--degree", "4", "--seed",
                                  "3", "--algorithms", "pagerank", "--output",
                                  tmp.file("bench.csv").string()});
    CHECK(code == 0);
    std::string csv = read_file(tmp.file("bench.csv"));
    CHECK(csv.starts_with("n,p,seed,algorithm,seconds\n"));
    CHECK(csv.find("100,") != std::string::npos);
    CHECK(csv.find("pagerank") != std::string::npos);
}

TEST_CASE("cli: run, stage replay and overrides") {
    fixtures::TempDir tmp;
    auto config_path = (fixtures::fixture_dir() / "config.json").string();
    int code = fixtures::run_cli({"run", "--config", config_path, "--out",
                                  tmp.path().string()});
    CHECK(code == 0);
    CHECK(std::filesystem::exists(tmp.path() / "fixture" / "manifest.json"));

    // Dot-path override changes behavior: high min_degree empties the graph.
    fixtures::TempDir tmp2;
    int code2 = fixtures::run_cli({"run", "--config", config_path, "--out",
                                   tmp2.path().string(), "--prune.min_degree", "100",
                                   "--flavor", "combined"});
    CHECK(code2 == 0);
    ThreatNetwork combined = network_from_json(
        read_file(tmp2.path() / "fixture" / "threatnet_combined.json"));
    CHECK(combined.node_count() == 0);

    // Empty input -> degenerate-input exit code.
    fixtures::TempDir tmp3;
    std::ofstream(tmp3.file("empty.jsonl")).close();
    int code3 = fixtures::run_cli({"run", "--config", config_path, "--out",
                                   tmp3.path().string(), "--input.reports",
                                   tmp3.file("empty.jsonl").string()});
    CHECK(code3 == 2);

    // Unknown flavor -> usage error.
    int code4 = fixtures::run_cli({"run", "--config", config_path, "--out",
                                   tmp3.path().string(), "--flavor", "bogus"});
    CHECK(code4 == 1);

    // gen subcommand round-trips through the network format.
    fixtures::TempDir tmp4;
    int code5 = fixtures::run_cli({"gen", "--n", "50", "--p", "0.1", "--seed", "7",
                                   "--output", tmp4.file("g.json").string()});
    CHECK(code5 == 0);
    ThreatNetwork generated = network_from_json(read_file(tmp4.file("g.json")));
    CHECK(generated.node_count() == 50);
}
