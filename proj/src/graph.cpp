#include "threatnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>

#include "threatnet/common.hpp"

namespace threatnet {

const char* to_string(NodeKind k) {
    switch (k) {
        case NodeKind::kSample: return "sample";
        case NodeKind::kIp: return "ip";
        case NodeKind::kDomain: return "domain";
    }
    return "unknown";
}

std::optional<NodeKind> node_kind_from_string(std::string_view s) {
    if (s == "sample") return NodeKind::kSample;
    if (s == "ip") return NodeKind::kIp;
    if (s == "domain") return NodeKind::kDomain;
    return std::nullopt;
}

const char* to_string(Flavor f) {
    switch (f) {
        case Flavor::kIpOnly: return "ip";
        case Flavor::kDomainOnly: return "domain";
        case Flavor::kCombined: return "combined";
    }
    return "unknown";
}

std::optional<Flavor> flavor_from_string(std::string_view s) {
    if (s == "ip") return Flavor::kIpOnly;
    if (s == "domain") return Flavor::kDomainOnly;
    if (s == "combined") return Flavor::kCombined;
    return std::nullopt;
}

uint32_t HeteroGraph::intern(const NodeId& id) {
    auto [it, inserted] = index_.emplace(id, static_cast<uint32_t>(nodes.size()));
    if (inserted) {
        nodes.push_back(id);
        attrs.emplace_back();
    }
    return it->second;
}

std::optional<uint32_t> HeteroGraph::find(const NodeId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void HeteroGraph::add_edge(uint32_t a, uint32_t b, HeteroEdgeKind kind) {
    if (a == b) return;  // no self-loops
    if (a > b) std::swap(a, b);
    auto [it, inserted] = edge_seen_.emplace(std::make_tuple(a, b, kind), true);
    if (inserted) edges.push_back(Edge{a, b, kind});
}

HeteroGraph build_hetero(
    const std::vector<ExtractionResult>& results,
    const std::vector<std::pair<std::string, std::string>>& resolution_edges,
    const std::map<std::string, std::string>& families) {
    HeteroGraph g;
    for (const auto& result : results) {
        NodeId sample_id{NodeKind::kSample, result.sample.hash};
        uint32_t s = g.intern(sample_id);
        if (auto fam = families.find(result.sample.hash); fam != families.end())
            g.attrs[s].family = fam->second;
        for (const auto& [ind, source] : result.indicators) {
            NodeId node{ind.kind == IndicatorKind::kIpv4 ? NodeKind::kIp
                                                         : NodeKind::kDomain,
                        ind.value};
            uint32_t v = g.intern(node);
            g.attrs[v].sources |= static_cast<uint8_t>(source);
            g.add_edge(s, v, HeteroEdgeKind::kObserved);
        }
    }
    for (const auto& [dom, ip] : resolution_edges) {
        uint32_t d = g.intern(NodeId{NodeKind::kDomain, dom});
        uint32_t i = g.intern(NodeId{NodeKind::kIp, ip});
        g.add_edge(d, i, HeteroEdgeKind::kResolution);
    }
    return g;
}

namespace {

inline uint64_t pair_key(uint32_t a, uint32_t b) {
    return (static_cast<uint64_t>(a) << 32) | b;
}

inline std::string node_index_key(const NodeId& id) {
    std::string key;
    key.reserve(id.key.size() + 2);
    key.push_back(id.kind == NodeKind::kSample ? 's'
                  : id.kind == NodeKind::kIp   ? 'i'
                                               : 'd');
    key.push_back(':');
    key.append(id.key);
    return key;
}

} // namespace

uint32_t ThreatNetwork::intern(const NodeId& id) {
    auto [it, inserted] =
        index_.emplace(node_index_key(id), static_cast<uint32_t>(nodes.size()));
    if (inserted) nodes.push_back(id);
    return it->second;
}

std::optional<uint32_t> ThreatNetwork::find(const NodeId& id) const {
    auto it = index_.find(node_index_key(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

ThreatNetwork::Edge& ThreatNetwork::edge_between(uint32_t a, uint32_t b) {
    if (a > b) std::swap(a, b);
    auto [it, inserted] =
        edge_index_.emplace(pair_key(a, b), static_cast<uint32_t>(edges.size()));
    if (inserted) {
        Edge e;
        e.a = a;
        e.b = b;
        edges.push_back(std::move(e));
    }
    return edges[it->second];
}

void ThreatNetwork::finalize() {
    std::sort(edges.begin(), edges.end(),
              [](const Edge& x, const Edge& y) { return pair_key(x.a, x.b) < pair_key(y.a, y.b); });
    edge_index_.clear();
    for (uint32_t i = 0; i < edges.size(); ++i) {
        Edge& e = edges[i];
        std::sort(e.sample_witnesses.begin(), e.sample_witnesses.end());
        e.sample_witnesses.erase(
            std::unique(e.sample_witnesses.begin(), e.sample_witnesses.end()),
            e.sample_witnesses.end());
        std::sort(e.resolution_witnesses.begin(), e.resolution_witnesses.end());
        e.resolution_witnesses.erase(
            std::unique(e.resolution_witnesses.begin(), e.resolution_witnesses.end()),
            e.resolution_witnesses.end());
        double witness_weight =
            static_cast<double>(e.sample_witnesses.size() + e.resolution_witnesses.size()) +
            (e.direct_resolution ? 1.0 : 0.0);
        if (witness_weight > 0.0) e.weight = witness_weight;
        if (e.weight <= 0.0) e.weight = 1.0;  // synthetic graphs: unit weights
        edge_index_.emplace(pair_key(e.a, e.b), i);
    }

    const size_t n = nodes.size();
    std::vector<uint32_t> degree(n, 0);
    for (const Edge& e : edges) {
        ++degree[e.a];
        ++degree[e.b];
    }
    offsets.assign(n + 1, 0);
    for (size_t v = 0; v < n; ++v) offsets[v + 1] = offsets[v] + degree[v];
    adj.assign(offsets[n], 0);
    adj_weight.assign(offsets[n], 0.0);
    adj_edge.assign(offsets[n], 0);
    std::vector<uint64_t> cursor(offsets.begin(), offsets.end() - 1);
    for (uint32_t i = 0; i < edges.size(); ++i) {
        const Edge& e = edges[i];
        adj[cursor[e.a]] = e.b;
        adj_weight[cursor[e.a]] = e.weight;
        adj_edge[cursor[e.a]] = i;
        ++cursor[e.a];
        adj[cursor[e.b]] = e.a;
        adj_weight[cursor[e.b]] = e.weight;
        adj_edge[cursor[e.b]] = i;
        ++cursor[e.b];
    }
    weighted_degree.assign(n, 0.0);
    total_weight = 0.0;
    for (const Edge& e : edges) {
        weighted_degree[e.a] += e.weight;
        weighted_degree[e.b] += e.weight;
        total_weight += e.weight;
    }
}

ThreatNetwork project(const HeteroGraph& graph, Flavor flavor) {
    ThreatNetwork tn;
    tn.flavor = flavor;

    auto retained = [flavor](NodeKind kind) {
        switch (flavor) {
            case Flavor::kIpOnly: return kind == NodeKind::kIp;
            case Flavor::kDomainOnly: return kind == NodeKind::kDomain;
            case Flavor::kCombined:
                return kind == NodeKind::kIp || kind == NodeKind::kDomain;
        }
        return false;
    };

    // Dense ids in hetero node order keeps projections deterministic.
    std::vector<int64_t> to_tn(graph.node_count(), -1);
    for (uint32_t v = 0; v < graph.node_count(); ++v)
        if (retained(graph.nodes[v].kind)) to_tn[v] = tn.intern(graph.nodes[v]);

    // Group neighbors by hub node: samples witness co-occurrence pairs in
    // every flavor; domains/IPs witness derived pairs in single-kind flavors.
    std::vector<std::vector<uint32_t>> observed(graph.node_count());
    std::vector<std::vector<uint32_t>> resolved(graph.node_count());
    for (const auto& e : graph.edges) {
        if (e.kind == HeteroEdgeKind::kObserved) {
            uint32_t sample = graph.nodes[e.a].kind == NodeKind::kSample ? e.a : e.b;
            uint32_t ind = sample == e.a ? e.b : e.a;
            observed[sample].push_back(ind);
        } else {
            uint32_t dom = graph.nodes[e.a].kind == NodeKind::kDomain ? e.a : e.b;
            uint32_t ip = dom == e.a ? e.b : e.a;
            resolved[dom].push_back(ip);
            resolved[ip].push_back(dom);
            if (flavor == Flavor::kCombined && to_tn[dom] >= 0 && to_tn[ip] >= 0) {
                auto& edge = tn.edge_between(static_cast<uint32_t>(to_tn[dom]),
                                             static_cast<uint32_t>(to_tn[ip]));
                edge.direct_resolution = true;
            }
        }
    }

    for (uint32_t v = 0; v < graph.node_count(); ++v) {
        if (graph.nodes[v].kind == NodeKind::kSample) {
            auto& nbrs = observed[v];
            std::vector<uint32_t> kept;
            for (uint32_t u : nbrs)
                if (to_tn[u] >= 0) kept.push_back(static_cast<uint32_t>(to_tn[u]));
            std::sort(kept.begin(), kept.end());
            kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
            for (size_t i = 0; i < kept.size(); ++i)
                for (size_t j = i + 1; j < kept.size(); ++j)
                    tn.edge_between(kept[i], kept[j])
                        .sample_witnesses.push_back(graph.nodes[v].key);
        } else if (flavor != Flavor::kCombined) {
            // Intermediary for derived pairs: a domain joining its resolved
            // IPs (IpOnly) or an IP joining the domains resolving to it
            // (DomainOnly). The intermediary itself is not retained.
            if (to_tn[v] >= 0) continue;
            std::vector<uint32_t> kept;
            for (uint32_t u : resolved[v])
                if (to_tn[u] >= 0) kept.push_back(static_cast<uint32_t>(to_tn[u]));
            std::sort(kept.begin(), kept.end());
            kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
            for (size_t i = 0; i < kept.size(); ++i)
                for (size_t j = i + 1; j < kept.size(); ++j)
                    tn.edge_between(kept[i], kept[j])
                        .resolution_witnesses.push_back(graph.nodes[v].key);
        }
    }

    tn.finalize();
    return tn;
}

ThreatNetwork prune_weak(const ThreatNetwork& tn, double min_degree,
                         size_t min_component) {
    const size_t n = tn.node_count();
    std::vector<double> wdeg = tn.weighted_degree;
    std::vector<bool> removed(n, false);

    // Peel nodes below the degree threshold until a fixpoint.
    std::queue<uint32_t> pending;
    for (uint32_t v = 0; v < n; ++v)
        if (wdeg[v] < min_degree) {
            removed[v] = true;
            pending.push(v);
        }
    while (!pending.empty()) {
        uint32_t v = pending.front();
        pending.pop();
        for (uint64_t i = tn.offsets[v]; i < tn.offsets[v + 1]; ++i) {
            uint32_t u = tn.adj[i];
            if (removed[u]) continue;
            wdeg[u] -= tn.adj_weight[i];
            if (wdeg[u] < min_degree) {
                removed[u] = true;
                pending.push(u);
            }
        }
    }

    // Drop surviving components smaller than min_component.
    std::vector<int64_t> component(n, -1);
    int64_t comp_count = 0;
    std::vector<uint64_t> comp_size;
    for (uint32_t start = 0; start < n; ++start) {
        if (removed[start] || component[start] >= 0) continue;
        int64_t c = comp_count++;
        comp_size.push_back(0);
        std::queue<uint32_t> bfs;
        bfs.push(start);
        component[start] = c;
        while (!bfs.empty()) {
            uint32_t v = bfs.front();
            bfs.pop();
            ++comp_size[static_cast<size_t>(c)];
            for (uint64_t i = tn.offsets[v]; i < tn.offsets[v + 1]; ++i) {
                uint32_t u = tn.adj[i];
                if (removed[u] || component[u] >= 0) continue;
                component[u] = c;
                bfs.push(u);
            }
        }
    }
    for (uint32_t v = 0; v < n; ++v)
        if (!removed[v] && comp_size[static_cast<size_t>(component[v])] < min_component)
            removed[v] = true;

    ThreatNetwork out;
    out.flavor = tn.flavor;
    std::vector<int64_t> remap(n, -1);
    for (uint32_t v = 0; v < n; ++v)
        if (!removed[v]) remap[v] = out.intern(tn.nodes[v]);
    for (const auto& e : tn.edges) {
        if (remap[e.a] < 0 || remap[e.b] < 0) continue;
        auto& ne = out.edge_between(static_cast<uint32_t>(remap[e.a]),
                                    static_cast<uint32_t>(remap[e.b]));
        ne.weight = e.weight;
        ne.sample_witnesses = e.sample_witnesses;
        ne.resolution_witnesses = e.resolution_witnesses;
        ne.direct_resolution = e.direct_resolution;
    }
    out.finalize();
    return out;
}

ThreatNetwork gen_random(const RandomGraphSpec& spec) {
    if (spec.n < 1) throw CapacityError("gen_random: n must be >= 1");
    if (spec.p < 0.0 || spec.p > 1.0)
        throw CapacityError("gen_random: p must be in [0,1]");

    if (spec.n > 10'000'000) throw CapacityError("gen_random: n exceeds capacity");
    const double max_pairs = 0.5 * static_cast<double>(spec.n) *
                             static_cast<double>(spec.n - 1);
    const double expected_edges = max_pairs * spec.p;
    constexpr double kEdgeCap = 5e7;
    if (expected_edges > kEdgeCap)
        throw CapacityError("gen_random: expected edge count " +
                            std::to_string(static_cast<uint64_t>(expected_edges)) +
                            " exceeds in-memory capacity");

    ThreatNetwork tn;
    tn.flavor = Flavor::kCombined;
    tn.nodes.reserve(spec.n);
    // Synthetic keys: sequential addresses from 1.0.0.0 stay inside public
    // unicast space for any desk-scale n.
    for (uint64_t i = 0; i < spec.n; ++i)
        tn.intern(NodeId{NodeKind::kIp,
                         format_ipv4(static_cast<uint32_t>(0x01000000u + i))});

    // Skip-sampling over the upper-triangular pair sequence; uniform doubles
    // are derived from raw engine output so results are identical across
    // standard library implementations.
    std::mt19937_64 rng(spec.seed);
    auto next_uniform = [&rng]() {
        return static_cast<double>(rng() >> 11) * 0x1.0p-53;
    };

    auto emit = [&tn](uint64_t a, uint64_t b) {
        ThreatNetwork::Edge e;
        e.a = static_cast<uint32_t>(a);
        e.b = static_cast<uint32_t>(b);
        e.weight = 1.0;
        tn.edges.push_back(std::move(e));
    };

    if (spec.p >= 1.0) {
        for (uint64_t a = 0; a + 1 < spec.n; ++a)
            for (uint64_t b = a + 1; b < spec.n; ++b) emit(a, b);
    } else if (spec.p > 0.0) {
        const double log_q = std::log1p(-spec.p);
        uint64_t v = 1;
        int64_t w = -1;
        while (v < spec.n) {
            double r = next_uniform();
            if (r >= 1.0) r = std::nextafter(1.0, 0.0);
            double skip = std::floor(std::log1p(-r) / log_q);
            w += 1 + static_cast<int64_t>(skip);
            while (w >= static_cast<int64_t>(v) && v < spec.n) {
                w -= static_cast<int64_t>(v);
                ++v;
            }
            if (v < spec.n) emit(static_cast<uint64_t>(w), v);
        }
    }

    tn.finalize();
    return tn;
}

} // namespace threatnet
