#include "threatnet/ranking.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "threatnet/common.hpp"
#include "threatnet/kernels.hpp"

namespace threatnet {

RankVector pagerank(const ThreatNetwork& tn, const PageRankParams& params) {
    const size_t n = tn.node_count();
    if (n == 0) throw EmptyGraphError("pagerank: no nodes");
    if (params.damping <= 0.0 || params.damping >= 1.0)
        throw std::invalid_argument("pagerank: damping must be in (0,1)");
    if (params.epsilon <= 0.0)
        throw std::invalid_argument("pagerank: epsilon must be positive");

    const auto& ops = kernels::active();
    const double d = params.damping;
    const double inv_n = 1.0 / static_cast<double>(n);

    RankVector rv;
    rv.pr.assign(n, inv_n);
    if (n == 1) {
        rv.converged = true;
        return rv;
    }

    std::vector<double> next(n, 0.0);
    std::vector<double> out_share(n, 0.0);  // pr[v] / weighted_degree[v], staged

    std::vector<uint32_t> dangling;
    for (uint32_t v = 0; v < n; ++v)
        if (tn.weighted_degree[v] <= 0.0) dangling.push_back(v);

    for (int iter = 1; iter <= params.max_iters; ++iter) {
        double dangling_mass = 0.0;
        for (uint32_t v : dangling) dangling_mass += rv.pr[v];

        for (uint32_t v = 0; v < n; ++v)
            out_share[v] =
                tn.weighted_degree[v] > 0.0 ? rv.pr[v] / tn.weighted_degree[v] : 0.0;

        // next[v] = sum over neighbors u of w(u,v) * pr[u] / wdeg(u)
        for (uint32_t v = 0; v < n; ++v) {
            double acc = 0.0;
            for (uint64_t e = tn.offsets[v]; e < tn.offsets[v + 1]; ++e)
                acc += tn.adj_weight[e] * out_share[tn.adj[e]];
            next[v] = acc + dangling_mass * inv_n;
        }
        // next = d * next + (1 - d)/n
        ops.scale_add(next.data(), next.data(), d, (1.0 - d) * inv_n, n);

        double delta = ops.l1_diff(next.data(), rv.pr.data(), n);
        rv.pr.swap(next);
        rv.iterations_used = iter;
        if (delta < params.epsilon) {
            rv.converged = true;
            break;
        }
    }
    return rv;
}

PriorityList priority_list(const ThreatNetwork& tn, const RankVector& rv,
                           const Partition* partition) {
    if (rv.pr.size() != tn.node_count())
        throw std::invalid_argument("priority_list: rank vector size mismatch");
    PriorityList list;
    list.entries.reserve(tn.node_count());
    for (uint32_t v = 0; v < tn.node_count(); ++v) {
        int64_t comm = partition ? static_cast<int64_t>(partition->assignment[v]) : -1;
        list.entries.push_back(
            PriorityEntry{v, rv.pr[v], tn.weighted_degree[v], comm});
    }
    std::sort(list.entries.begin(), list.entries.end(),
              [&tn](const PriorityEntry& x, const PriorityEntry& y) {
                  if (x.pagerank != y.pagerank) return x.pagerank > y.pagerank;
                  if (x.weighted_degree != y.weighted_degree)
                      return x.weighted_degree > y.weighted_degree;
                  return tn.nodes[x.node].key < tn.nodes[y.node].key;
              });
    return list;
}

PriorityList filter_by_kind(const ThreatNetwork& tn, const PriorityList& list,
                            NodeKind kind) {
    PriorityList out;
    for (const auto& e : list.entries)
        if (tn.nodes[e.node].kind == kind) out.entries.push_back(e);
    return out;
}

void write_priority_csv(std::ostream& out, const ThreatNetwork& tn,
                        const PriorityList& list) {
    out << "rank,kind,key,pagerank,degree,community\n";
    char buf[64];
    size_t rank = 1;
    for (const auto& e : list.entries) {
        const NodeId& id = tn.nodes[e.node];
        std::snprintf(buf, sizeof(buf), "%.12g", e.pagerank);
        out << rank++ << ',' << to_string(id.kind) << ',' << id.key << ',' << buf;
        std::snprintf(buf, sizeof(buf), "%.12g", e.weighted_degree);
        out << ',' << buf << ',';
        if (e.community >= 0) out << e.community;
        out << '\n';
    }
}

} // namespace threatnet
