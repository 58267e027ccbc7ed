#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "threatnet/community.hpp"
#include "threatnet/graph.hpp"

namespace threatnet {

struct PageRankParams {
    double damping = 0.85;
    double epsilon = 0.001;  // L1 stopping criterion
    int max_iters = 100;
};

struct RankVector {
    std::vector<double> pr;  // sums to 1
    int iterations_used = 0;
    bool converged = false;
};

/// Power iteration over the undirected network (each edge expanded to two
/// arcs, transition probability proportional to edge weight). Starts from
/// the uniform vector; dangling (isolated) mass is redistributed uniformly
/// each step; stops when the L1 difference between iterates drops below
/// epsilon.
RankVector pagerank(const ThreatNetwork& tn, const PageRankParams& params = {});

struct PriorityEntry {
    uint32_t node;
    double pagerank;
    double weighted_degree;
    int64_t community;  // -1 when no partition was supplied
};

/// Nodes sorted by pagerank desc, then weighted degree desc, then key asc.
struct PriorityList {
    std::vector<PriorityEntry> entries;
};

PriorityList priority_list(const ThreatNetwork& tn, const RankVector& rv,
                           const Partition* partition = nullptr);

/// Entries of the given kind only, in the same order.
PriorityList filter_by_kind(const ThreatNetwork& tn, const PriorityList& list,
                            NodeKind kind);

/// CSV export: rank,kind,key,pagerank,degree,community.
void write_priority_csv(std::ostream& out, const ThreatNetwork& tn,
                        const PriorityList& list);

} // namespace threatnet
