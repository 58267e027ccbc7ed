#pragma once

// Seeded generators for test graphs, planted corpora and pdns stores, plus
// temp-dir and CLI helpers shared by the unit and acceptance suites.

#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "threatnet/graph.hpp"
#include "threatnet/indicators.hpp"
#include "threatnet/pdns.hpp"
#include "threatnet/whitelist.hpp"

namespace fixtures {

/// Self-cleaning unique directory under the system temp dir.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

std::filesystem::path fixture_dir();
std::filesystem::path cli_path();

/// Builds an arbitrary weighted network from explicit (a, b, w) triples over
/// n Ip-kind nodes.
threatnet::ThreatNetwork make_network(
    size_t n, const std::vector<std::tuple<uint32_t, uint32_t, double>>& edges);

/// Random connected-ish test network with integer weights in [1, max_w].
threatnet::ThreatNetwork random_network(std::mt19937_64& rng, size_t max_nodes,
                                        double edge_prob, uint32_t max_w = 4);

/// Two k-cliques joined by a single bridge edge; nodes [0,k) and [k,2k).
threatnet::ThreatNetwork two_cliques_bridge(size_t k);

/// Planted-partition graph: `blocks` groups of `block_size` nodes, edge
/// probability p_in within a block and p_out across. Returns the network and
/// the planted block labels.
struct PlantedPartition {
    threatnet::ThreatNetwork network;
    std::vector<uint32_t> labels;
};
PlantedPartition planted_partition(uint32_t blocks, uint32_t block_size, double p_in,
                                   double p_out, uint64_t seed);

/// Random tripartite heterogeneous graph (samples, ips, domains) with
/// observed and resolution edges, <= max_nodes nodes total.
threatnet::HeteroGraph random_tripartite(std::mt19937_64& rng, size_t max_nodes);

/// 1,000-line planted extraction corpus: dex-dump-style noise with 40
/// routable IPs and 60 domains planted at known lines, 37 of which (17 IPs,
/// 20 domains) are covered by the returned whitelists.
struct PlantedCorpus {
    std::string text;  // 1,000 lines
    std::vector<threatnet::NetworkIndicator> planted;         // all 100
    std::vector<threatnet::NetworkIndicator> planted_benign;  // the 37
    threatnet::DomainWhitelist domain_whitelist;
    threatnet::IpWhitelist ip_whitelist;
};
PlantedCorpus planted_corpus(uint64_t seed);

/// Random pdns store with `records` A-records over a seeded name/IP pool.
threatnet::PdnsStore random_pdns_store(std::mt19937_64& rng, size_t records);

/// Runs the CLI with the given arguments and environment overrides;
/// returns the exit code.
int run_cli(const std::vector<std::string>& args,
            const std::vector<std::pair<std::string, std::string>>& env = {});

/// Reads every regular file under dir (recursively) except excluded names;
/// returns map of relative path -> content.
std::map<std::string, std::string> snapshot_dir(const std::filesystem::path& dir,
                                                const std::vector<std::string>& exclude);

} // namespace fixtures
