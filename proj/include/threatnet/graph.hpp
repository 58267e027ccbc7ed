#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "threatnet/indicators.hpp"

namespace threatnet {

enum class NodeKind : uint8_t { kSample, kIp, kDomain };

const char* to_string(NodeKind k);
std::optional<NodeKind> node_kind_from_string(std::string_view s);

struct NodeId {
    NodeKind kind;
    std::string key;

    auto operator<=>(const NodeId&) const = default;
};

enum class HeteroEdgeKind : uint8_t { kObserved, kResolution };

/// Heterogeneous threat network: Sample, Ip and Domain nodes; Observed edges
/// connect samples to indicators, Resolution edges connect domains to IPs.
/// Undirected, no self-loops, edges deduplicated per (pair, kind).
struct HeteroGraph {
    struct NodeAttr {
        std::string family;   // samples only, may be empty
        uint8_t sources = 0;  // indicator provenance bitmask of Source values
    };
    struct Edge {
        uint32_t a, b;  // a < b
        HeteroEdgeKind kind;
    };

    std::vector<NodeId> nodes;
    std::vector<NodeAttr> attrs;
    std::vector<Edge> edges;

    uint32_t intern(const NodeId& id);
    std::optional<uint32_t> find(const NodeId& id) const;
    void add_edge(uint32_t a, uint32_t b, HeteroEdgeKind kind);

    size_t node_count() const { return nodes.size(); }
    size_t edge_count() const { return edges.size(); }

private:
    std::map<NodeId, uint32_t> index_;
    std::map<std::tuple<uint32_t, uint32_t, HeteroEdgeKind>, bool> edge_seen_;
};

/// Builds the heterogeneous graph: one Sample node per sample, one node per
/// unique indicator, an Observed edge per (sample, indicator) pair, and the
/// given resolution edges merged in (their endpoints are created if new).
HeteroGraph build_hetero(
    const std::vector<ExtractionResult>& results,
    const std::vector<std::pair<std::string, std::string>>& resolution_edges = {},
    const std::map<std::string, std::string>& families = {});

enum class Flavor : uint8_t { kIpOnly, kDomainOnly, kCombined };

const char* to_string(Flavor f);
std::optional<Flavor> flavor_from_string(std::string_view s);

/// Homogeneous projection of the threat network. Edge weight counts the
/// distinct witnesses behind the link: shared samples, shared resolution
/// intermediaries (single-kind flavors), and the direct domain-ip resolution
/// itself (Combined flavor).
struct ThreatNetwork {
    struct Edge {
        uint32_t a, b;  // a < b
        double weight = 0.0;
        std::vector<std::string> sample_witnesses;      // sorted sample hashes
        std::vector<std::string> resolution_witnesses;  // sorted intermediary keys
        bool direct_resolution = false;
    };

    Flavor flavor = Flavor::kCombined;
    std::vector<NodeId> nodes;
    std::vector<Edge> edges;  // sorted by (a, b), unique pairs

    // Adjacency (CSR), valid after finalize().
    std::vector<uint64_t> offsets;
    std::vector<uint32_t> adj;
    std::vector<double> adj_weight;
    std::vector<uint32_t> adj_edge;
    std::vector<double> weighted_degree;
    double total_weight = 0.0;

    uint32_t intern(const NodeId& id);
    std::optional<uint32_t> find(const NodeId& id) const;
    Edge& edge_between(uint32_t a, uint32_t b);

    /// Sorts edges, recomputes witnesses-derived weights and builds the CSR
    /// adjacency. Must be called after construction and before any traversal.
    void finalize();

    size_t node_count() const { return nodes.size(); }
    size_t edge_count() const { return edges.size(); }

private:
    std::unordered_map<std::string, uint32_t> index_;
    std::map<uint64_t, uint32_t> edge_index_;
};

ThreatNetwork project(const HeteroGraph& graph, Flavor flavor);

/// Iteratively removes nodes with weighted degree below min_degree, then
/// drops connected components smaller than min_component. Idempotent.
ThreatNetwork prune_weak(const ThreatNetwork& tn, double min_degree,
                         size_t min_component);

struct RandomGraphSpec {
    uint64_t n = 1;
    double p = 0.0;
    uint64_t seed = 0;
};

/// Deterministic G(n,p) sampling (skip-based, O(n+m)). Nodes are synthetic
/// Ip-kind addresses; flavor is Combined.
ThreatNetwork gen_random(const RandomGraphSpec& spec);

} // namespace threatnet
