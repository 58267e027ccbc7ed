#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "threatnet/graph.hpp"

namespace threatnet {

struct LouvainParams {
    double resolution = 1.0;   // gamma: larger favors more, smaller communities
    double min_gain = 1e-7;    // minimum modularity improvement to keep moving
    int max_passes = 32;
    std::optional<uint64_t> shuffle_seed;  // node visit order; default ascending
    bool check_moves = false;  // verify each incremental gain against a recompute
};

/// Community assignment over a threat network's dense node ids.
struct Partition {
    std::vector<uint32_t> assignment;  // node -> community, ids contiguous from 0
    uint32_t community_count = 0;
    double modularity = 0.0;  // recomputed from scratch on the input graph
    double resolution = 1.0;

    // Diagnostics from detect(): modularity after each pass, and the largest
    // |incremental - recomputed| gain deviation seen when check_moves is on.
    std::vector<double> pass_modularity;
    double max_gain_error = 0.0;

    std::vector<std::vector<uint32_t>> groups() const;
};

/// Weighted Newman modularity with multiplicative resolution:
///   Q = (1/2m) * sum_ij [A_ij - gamma * k_i k_j / (2m)] * delta(c_i, c_j).
/// Throws EmptyGraphError when the total edge weight is zero.
double modularity(const ThreatNetwork& tn, const std::vector<uint32_t>& assignment,
                  double gamma);

/// Two-phase Louvain: greedy single-node moves to the neighboring community
/// with maximal positive gain (ties broken toward the lowest community id),
/// then aggregation into super-nodes, repeated until no pass improves.
Partition detect(const ThreatNetwork& tn, const LouvainParams& params = {});

struct SplitResult {
    struct Bridge {
        NodeId a, b;
        double weight;
    };
    std::vector<ThreatNetwork> communities;  // induced subgraph per community
    std::vector<Bridge> bridges;             // inter-community edges
};

SplitResult split(const ThreatNetwork& tn, const Partition& partition);

} // namespace threatnet
