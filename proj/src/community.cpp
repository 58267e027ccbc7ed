#include "threatnet/community.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "threatnet/common.hpp"

namespace threatnet {

namespace {

// Working graph for one aggregation level. Self-loops (absent from threat
// networks, created by aggregation) follow the doubling convention:
// A_ii = 2 * selfw(i), and selfw contributes twice to the node degree.
struct LevelGraph {
    size_t n = 0;
    std::vector<uint64_t> offsets;
    std::vector<uint32_t> adj;
    std::vector<double> adj_w;
    std::vector<double> selfw;
    std::vector<double> degree;  // k_i, including 2*selfw
    double two_m = 0.0;          // sum of degrees

    static LevelGraph from_network(const ThreatNetwork& tn) {
        LevelGraph g;
        g.n = tn.node_count();
        g.offsets = tn.offsets;
        g.adj = tn.adj;
        g.adj_w = tn.adj_weight;
        g.selfw.assign(g.n, 0.0);
        g.degree = tn.weighted_degree;
        g.two_m = std::accumulate(g.degree.begin(), g.degree.end(), 0.0);
        return g;
    }
};

struct CommunityState {
    std::vector<uint32_t> comm;
    std::vector<double> sum_tot;  // sum of member degrees
    std::vector<double> sum_in;   // sum_{i,j in c} A_ij

    explicit CommunityState(const LevelGraph& g) {
        comm.resize(g.n);
        sum_tot.resize(g.n);
        sum_in.resize(g.n);
        for (uint32_t i = 0; i < g.n; ++i) {
            comm[i] = i;
            sum_tot[i] = g.degree[i];
            sum_in[i] = 2.0 * g.selfw[i];
        }
    }

    double modularity(const LevelGraph& g, double gamma) const {
        double q = 0.0;
        for (size_t c = 0; c < sum_tot.size(); ++c) {
            if (sum_tot[c] == 0.0 && sum_in[c] == 0.0) continue;
            q += sum_in[c] / g.two_m -
                 gamma * (sum_tot[c] / g.two_m) * (sum_tot[c] / g.two_m);
        }
        return q;
    }
};

// Q for an arbitrary assignment, recomputed from the edge list. Community
// ids need not be contiguous or bounded by the node count.
double modularity_scan(const LevelGraph& g, const std::vector<uint32_t>& comm,
                       double gamma) {
    uint32_t k = 0;
    for (uint32_t i = 0; i < g.n; ++i) k = std::max(k, comm[i] + 1);
    std::vector<double> tot(k, 0.0), in2(k, 0.0);
    for (uint32_t i = 0; i < g.n; ++i) {
        tot[comm[i]] += g.degree[i];
        in2[comm[i]] += 2.0 * g.selfw[i];
        for (uint64_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e)
            if (comm[g.adj[e]] == comm[i]) in2[comm[i]] += g.adj_w[e];
    }
    double q = 0.0;
    for (size_t c = 0; c < k; ++c)
        q += in2[c] / g.two_m - gamma * (tot[c] / g.two_m) * (tot[c] / g.two_m);
    return q;
}

struct SweepResult {
    bool moved_any = false;
    double max_gain_error = 0.0;
};

// Phase 1: greedy local moving until no move gains more than min_gain.
SweepResult local_moving(const LevelGraph& g, CommunityState& state,
                         const LouvainParams& params) {
    SweepResult result;
    const double gamma = params.resolution;

    std::vector<uint32_t> order(g.n);
    std::iota(order.begin(), order.end(), 0);
    if (params.shuffle_seed) {
        std::mt19937_64 rng(*params.shuffle_seed);
        std::shuffle(order.begin(), order.end(), rng);
    }

    std::vector<double> nbr_weight(g.n, 0.0);
    std::vector<uint32_t> touched;
    touched.reserve(64);

    bool improving = true;
    while (improving) {
        improving = false;
        for (uint32_t v : order) {
            const uint32_t old_c = state.comm[v];
            const double k_v = g.degree[v];

            touched.clear();
            for (uint64_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
                uint32_t c = state.comm[g.adj[e]];
                if (nbr_weight[c] == 0.0 && c != old_c) touched.push_back(c);
                nbr_weight[c] += g.adj_w[e];
            }
            // k_v_old counts links to the old community excluding v itself.
            const double k_v_old = nbr_weight[old_c];

            // Detach v from its community.
            state.sum_tot[old_c] -= k_v;
            state.sum_in[old_c] -= 2.0 * k_v_old + 2.0 * g.selfw[v];

            auto gain_of = [&](uint32_t c, double k_v_c) {
                return 2.0 * k_v_c / g.two_m -
                       gamma * 2.0 * state.sum_tot[c] * k_v / (g.two_m * g.two_m);
            };

            const double stay_gain = gain_of(old_c, k_v_old);
            double best_gain = stay_gain;
            uint32_t best_c = old_c;
            for (uint32_t c : touched) {
                double gain = gain_of(c, nbr_weight[c]);
                if (gain > best_gain || (gain == best_gain && c < best_c)) {
                    best_gain = gain;
                    best_c = c;
                }
            }

            const double net_gain = best_gain - stay_gain;
            uint32_t target = (best_c != old_c && net_gain > params.min_gain)
                                  ? best_c
                                  : old_c;

            double q_before = 0.0;
            if (params.check_moves && target != old_c) {
                state.sum_tot[old_c] += k_v;
                state.sum_in[old_c] += 2.0 * k_v_old + 2.0 * g.selfw[v];
                q_before = modularity_scan(g, state.comm, gamma);
                state.sum_tot[old_c] -= k_v;
                state.sum_in[old_c] -= 2.0 * k_v_old + 2.0 * g.selfw[v];
            }

            state.sum_tot[target] += k_v;
            state.sum_in[target] += 2.0 * nbr_weight[target] + 2.0 * g.selfw[v];
            state.comm[v] = target;

            if (target != old_c) {
                improving = true;
                result.moved_any = true;
                if (params.check_moves) {
                    double q_after = modularity_scan(g, state.comm, gamma);
                    result.max_gain_error = std::max(
                        result.max_gain_error,
                        std::fabs((q_after - q_before) - net_gain));
                }
            }

            nbr_weight[old_c] = 0.0;
            for (uint32_t c : touched) nbr_weight[c] = 0.0;
        }
    }
    return result;
}

// Renumbers communities contiguously in order of first occurrence by
// ascending node id. Returns the community count.
uint32_t renumber(std::vector<uint32_t>& comm) {
    std::vector<int64_t> remap(comm.size(), -1);
    uint32_t next = 0;
    for (auto& c : comm) {
        if (remap[c] < 0) remap[c] = next++;
        c = static_cast<uint32_t>(remap[c]);
    }
    return next;
}

LevelGraph aggregate(const LevelGraph& g, const std::vector<uint32_t>& comm,
                     uint32_t k) {
    LevelGraph out;
    out.n = k;
    out.selfw.assign(k, 0.0);

    std::map<std::pair<uint32_t, uint32_t>, double> inter;
    for (uint32_t v = 0; v < g.n; ++v) {
        out.selfw[comm[v]] += g.selfw[v];
        for (uint64_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
            uint32_t u = g.adj[e];
            if (u < v) continue;  // each undirected edge once
            uint32_t cv = comm[v], cu = comm[u];
            if (cv == cu) {
                out.selfw[cv] += g.adj_w[e];
            } else {
                if (cv > cu) std::swap(cv, cu);
                inter[{cv, cu}] += g.adj_w[e];
            }
        }
    }

    std::vector<uint32_t> deg(k, 0);
    for (const auto& [pair, w] : inter) {
        ++deg[pair.first];
        ++deg[pair.second];
    }
    out.offsets.assign(k + 1, 0);
    for (uint32_t c = 0; c < k; ++c) out.offsets[c + 1] = out.offsets[c] + deg[c];
    out.adj.assign(out.offsets[k], 0);
    out.adj_w.assign(out.offsets[k], 0.0);
    std::vector<uint64_t> cursor(out.offsets.begin(), out.offsets.end() - 1);
    for (const auto& [pair, w] : inter) {
        out.adj[cursor[pair.first]] = pair.second;
        out.adj_w[cursor[pair.first]] = w;
        ++cursor[pair.first];
        out.adj[cursor[pair.second]] = pair.first;
        out.adj_w[cursor[pair.second]] = w;
        ++cursor[pair.second];
    }
    out.degree.assign(k, 0.0);
    out.two_m = 0.0;
    for (uint32_t c = 0; c < k; ++c) {
        double d = 2.0 * out.selfw[c];
        for (uint64_t e = out.offsets[c]; e < out.offsets[c + 1]; ++e)
            d += out.adj_w[e];
        out.degree[c] = d;
        out.two_m += d;
    }
    return out;
}

} // namespace

double modularity(const ThreatNetwork& tn, const std::vector<uint32_t>& assignment,
                  double gamma) {
    if (assignment.size() != tn.node_count())
        throw std::invalid_argument("modularity: assignment size mismatch");
    LevelGraph g = LevelGraph::from_network(tn);
    if (g.two_m <= 0.0) throw EmptyGraphError("modularity: graph has no edge weight");
    return modularity_scan(g, assignment, gamma);
}

Partition detect(const ThreatNetwork& tn, const LouvainParams& params) {
    LevelGraph level = LevelGraph::from_network(tn);
    if (level.two_m <= 0.0) throw EmptyGraphError("detect: graph has no edge weight");

    Partition part;
    part.resolution = params.resolution;
    part.assignment.resize(tn.node_count());
    std::iota(part.assignment.begin(), part.assignment.end(), 0);

    for (int pass = 0; pass < params.max_passes; ++pass) {
        CommunityState state(level);
        SweepResult sweep = local_moving(level, state, params);
        part.max_gain_error = std::max(part.max_gain_error, sweep.max_gain_error);

        std::vector<uint32_t> comm = state.comm;
        uint32_t k = renumber(comm);

        for (auto& a : part.assignment) a = comm[a];
        part.pass_modularity.push_back(state.modularity(level, params.resolution));

        if (!sweep.moved_any || k == level.n) break;
        level = aggregate(level, comm, k);
    }

    part.community_count = renumber(part.assignment);
    part.modularity = modularity(tn, part.assignment, params.resolution);
    return part;
}

std::vector<std::vector<uint32_t>> Partition::groups() const {
    std::vector<std::vector<uint32_t>> out(community_count);
    for (uint32_t v = 0; v < assignment.size(); ++v)
        out[assignment[v]].push_back(v);
    return out;
}

SplitResult split(const ThreatNetwork& tn, const Partition& partition) {
    if (partition.assignment.size() != tn.node_count())
        throw std::invalid_argument("split: partition size mismatch");

    SplitResult result;
    result.communities.resize(partition.community_count);
    for (auto& sub : result.communities) sub.flavor = tn.flavor;

    std::vector<uint32_t> local(tn.node_count(), 0);
    for (uint32_t v = 0; v < tn.node_count(); ++v)
        local[v] = result.communities[partition.assignment[v]].intern(tn.nodes[v]);

    for (const auto& e : tn.edges) {
        uint32_t ca = partition.assignment[e.a], cb = partition.assignment[e.b];
        if (ca == cb) {
            auto& ne = result.communities[ca].edge_between(local[e.a], local[e.b]);
            ne.weight = e.weight;
            ne.sample_witnesses = e.sample_witnesses;
            ne.resolution_witnesses = e.resolution_witnesses;
            ne.direct_resolution = e.direct_resolution;
        } else {
            result.bridges.push_back(
                SplitResult::Bridge{tn.nodes[e.a], tn.nodes[e.b], e.weight});
        }
    }
    for (auto& sub : result.communities) sub.finalize();
    return result;
}

} // namespace threatnet
