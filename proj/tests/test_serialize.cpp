#include <doctest.h>

#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "threatnet/community.hpp"
#include "threatnet/serialize.hpp"

using namespace threatnet;

TEST_CASE("network json round-trip preserves structure, weights and witnesses") {
    std::mt19937_64 rng(606);
    for (int trial = 0; trial < 10; ++trial) {
        HeteroGraph g = fixtures::random_tripartite(rng, 24);
        for (Flavor flavor : {Flavor::kIpOnly, Flavor::kCombined}) {
            ThreatNetwork tn = project(g, flavor);
            ThreatNetwork back = network_from_json(network_to_json(tn));
            REQUIRE(back.node_count() == tn.node_count());
            REQUIRE(back.edge_count() == tn.edge_count());
            CHECK(back.flavor == tn.flavor);
            for (size_t i = 0; i < tn.edges.size(); ++i) {
                CHECK(back.edges[i].a == tn.edges[i].a);
                CHECK(back.edges[i].b == tn.edges[i].b);
                CHECK(back.edges[i].weight == tn.edges[i].weight);
                CHECK(back.edges[i].sample_witnesses == tn.edges[i].sample_witnesses);
                CHECK(back.edges[i].resolution_witnesses ==
                      tn.edges[i].resolution_witnesses);
                CHECK(back.edges[i].direct_resolution == tn.edges[i].direct_resolution);
            }
            // Serialization is stable across a round-trip.
            CHECK(network_to_json(back) == network_to_json(tn));
        }
    }
}

TEST_CASE("hetero json round-trip keeps attributes") {
    ExtractionResult r;
    r.sample = *SampleId::parse(std::string(32, 'd'));
    r.indicators.emplace(NetworkIndicator{IndicatorKind::kDomain, "a.test"},
                         Source::kStatic);
    r.indicators.emplace(NetworkIndicator{IndicatorKind::kDomain, "a.test"},
                         Source::kDynamic);
    HeteroGraph g = build_hetero({r}, {{"a.test", "5.6.7.8"}},
                                 {{r.sample.hash, "famZ"}});
    HeteroGraph back = hetero_from_json(hetero_to_json(g));
    REQUIRE(back.node_count() == g.node_count());
    CHECK(back.edge_count() == g.edge_count());
    auto s = back.find(NodeId{NodeKind::kSample, r.sample.hash});
    REQUIRE(s.has_value());
    CHECK(back.attrs[*s].family == "famZ");
    auto a = back.find(NodeId{NodeKind::kDomain, "a.test"});
    REQUIRE(a.has_value());
    CHECK(back.attrs[*a].sources == 3);  // static | dynamic
    CHECK(hetero_to_json(back) == hetero_to_json(g));
}

TEST_CASE("extraction json round-trip") {
    ExtractionResult r;
    r.sample = *SampleId::parse(std::string(32, 'e'));
    r.indicators.emplace(NetworkIndicator{IndicatorKind::kIpv4, "5.6.7.8"},
                         Source::kDynamic);
    r.dropped[DropReason::kMalformedIp] = 3;
    std::map<std::string, std::string> families{{r.sample.hash, "famY"}};

    std::vector<ExtractionResult> parsed;
    std::map<std::string, std::string> families_back;
    extraction_from_json(extraction_to_json({r}, families), parsed, families_back);
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].sample == r.sample);
    CHECK(parsed[0].indicators == r.indicators);
    CHECK(parsed[0].dropped == r.dropped);
    CHECK(families_back == families);
}

TEST_CASE("partition json round-trip via node keys") {
    ThreatNetwork tn = fixtures::two_cliques_bridge(4);
    Partition part = detect(tn, LouvainParams{});
    SplitResult splits = split(tn, part);
    std::string json = partition_to_json(tn, part, splits);
    Partition back = partition_from_json(json, tn);
    CHECK(back.assignment == part.assignment);
    CHECK(back.community_count == part.community_count);
    CHECK(back.modularity == doctest::Approx(part.modularity));
}

TEST_CASE("dot and graphml exports carry the expected structure") {
    ExtractionResult r;
    r.sample = *SampleId::parse(std::string(32, 'f'));
    r.indicators.emplace(NetworkIndicator{IndicatorKind::kDomain, "a.test"},
                         Source::kStatic);
    HeteroGraph g = build_hetero({r}, {{"a.test", "5.6.7.8"}},
                                 {{r.sample.hash, "famQ"}});

    std::string dot = hetero_to_dot(g);
    CHECK(dot.find("graph threatnet {") != std::string::npos);
    CHECK(dot.find("a.test") != std::string::npos);
    CHECK(dot.find("style=dashed") != std::string::npos);  // resolution edge
    CHECK(dot.find("shape=box") != std::string::npos);     // sample node

    std::string graphml = hetero_to_graphml(g);
    CHECK(graphml.find("<graphml") != std::string::npos);
    CHECK(graphml.find("famQ") != std::string::npos);
    CHECK(graphml.find("edgedefault=\"undirected\"") != std::string::npos);

    ThreatNetwork tn = project(g, Flavor::kCombined);
    std::string ndot = network_to_dot(tn);
    CHECK(ndot.find("5.6.7.8") != std::string::npos);
    std::string ngml = network_to_graphml(tn);
    CHECK(ngml.find("attr.name=\"weight\"") != std::string::npos);
}

TEST_CASE("report container parses text, fields and family") {
    ReportParseStats stats;
    auto reports = load_reports_jsonl(fixtures::fixture_dir() / "reports.jsonl", stats);
    REQUIRE(reports.size() == 3);
    CHECK(stats.malformed == 0);
    CHECK(reports[0].source == Source::kStatic);
    CHECK(reports[0].family == "famA");
    CHECK_FALSE(reports[0].structured());
    CHECK(reports[2].structured());
    CHECK(reports[2].fields.at("dns_query").size() == 2);
}

TEST_CASE("malformed report lines are counted, not fatal") {
    fixtures::TempDir tmp;
    {
        std::ofstream out(tmp.file("bad.jsonl"));
        out << "not json\n";
        out << R"({"sample":"tooshort","source":"static","text":"x"})" << "\n";
        out << R"({"sample":")" << std::string(32, 'a')
            << R"(","source":"static","text":"ok 5.6.7.8"})" << "\n";
        out << R"({"sample":")" << std::string(32, 'b')
            << R"(","source":"static"})" << "\n";  // no payload
    }
    ReportParseStats stats;
    auto reports = load_reports_jsonl(tmp.file("bad.jsonl"), stats);
    CHECK(reports.size() == 1);
    CHECK(stats.malformed == 3);
}

TEST_CASE("atomic writes leave no partial file on success") {
    fixtures::TempDir tmp;
    write_file_atomic(tmp.file("x.json"), "{}\n");
    CHECK(std::filesystem::exists(tmp.file("x.json")));
    CHECK_FALSE(std::filesystem::exists(tmp.file("x.json.partial")));
    CHECK(read_file(tmp.file("x.json")) == "{}\n");
}
