#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "threatnet/community.hpp"
#include "threatnet/graph.hpp"

namespace threatnet {

enum class Activity : uint8_t { kSpam, kPcMalware, kPhishing, kProbing };

const char* to_string(Activity a);

struct PcEntry {
    std::string sample;  // PC malware hash
    std::string family;
};

struct FeedPaths {
    std::optional<std::filesystem::path> pc_malware;
    std::optional<std::filesystem::path> spam;
    std::optional<std::filesystem::path> phishing;
    std::optional<std::filesystem::path> probing;
};

struct FeedLoadStats {
    uint64_t pc_records = 0;
    uint64_t spam_records = 0;
    uint64_t phishing_records = 0;
    uint64_t probing_records = 0;
    uint64_t malformed_lines = 0;
};

/// Threat-intelligence feed correlation store. Small feeds are held in
/// memory; a feed file larger than the memory budget is left on disk and
/// stream-scanned once per tag() call against the query node set.
class FeedStore {
public:
    static FeedStore load(const FeedPaths& paths, size_t memory_budget_mb = 512);

    const FeedLoadStats& stats() const { return stats_; }

    /// Exact-match lookups against the in-memory stores.
    bool in_spam(const std::string& key) const { return spam_.contains(key); }
    bool in_phishing(const std::string& key) const { return phishing_.contains(key); }
    bool in_probing(const std::string& key) const { return probing_.contains(key); }
    const std::vector<PcEntry>* pc_entries(const std::string& key) const;

    // Deferred (stream-scanned) feeds, if any.
    bool has_streamed_feeds() const;

    // Populated during load; exposed for tag()'s streaming pass.
    struct Streamed {
        std::optional<std::filesystem::path> pc, spam, phishing, probing;
    };
    const Streamed& streamed() const { return streamed_; }

    void add_spam(std::string v) { spam_.insert(std::move(v)); }
    void add_phishing(std::string v) { phishing_.insert(std::move(v)); }
    void add_probing(std::string v) { probing_.insert(std::move(v)); }
    void add_pc(const std::string& indicator, PcEntry entry);

private:
    std::unordered_set<std::string> spam_, phishing_, probing_;
    std::unordered_map<std::string, std::vector<PcEntry>> pc_;
    Streamed streamed_;
    FeedLoadStats stats_;

    friend struct FeedScan;
};

struct NodeTag {
    Activity activity;
    std::string pc_sample;  // PcMalware only
    std::string pc_family;  // PcMalware only
};

struct ActivityCounts {
    uint64_t spam = 0;
    uint64_t pc_malware = 0;
    uint64_t phishing = 0;
    uint64_t probing = 0;

    uint64_t total() const { return spam + pc_malware + phishing + probing; }
};

struct CommunitySummary {
    int64_t community = -1;  // -1 = whole-network summary
    ActivityCounts events;   // match events: (node, feed) pairs
    // Shares over this summary's total match events, percentages.
    double spam_share = 0.0, pc_share = 0.0, phishing_share = 0.0, probing_share = 0.0;
    std::vector<std::pair<std::string, uint64_t>> top_families;  // (family, hits)
    std::vector<std::pair<std::string, uint64_t>> top_samples;   // (pc sample, hits)
};

struct TagReport {
    std::map<uint32_t, std::vector<NodeTag>> node_tags;  // tagged nodes only
    std::vector<CommunitySummary> communities;
    CommunitySummary overall;
    // Whole-network hit tallies at (node, pc-entry) granularity.
    std::map<std::string, uint64_t> family_hits;
    std::map<std::string, uint64_t> pc_sample_hits;
};

struct TagParams {
    bool suffix_match = false;  // also match domains by parent-suffix
    size_t top_k = 10;
    size_t workers = 1;  // in-memory correlation fans out across nodes
};

/// Correlates every network node against the four feeds. Phishing matches
/// Domain nodes only, Probing matches Ip nodes only, Spam and PcMalware
/// match either. Share denominators count match events, so nodes matching
/// several feeds contribute once per feed.
TagReport tag(const ThreatNetwork& tn, const Partition* partition,
              const FeedStore& feeds, const TagParams& params = {});

/// Top-k families by descending hits, ties by family name ascending.
std::vector<std::pair<std::string, uint64_t>> family_hit_table(const TagReport& report,
                                                               size_t k);
std::vector<std::pair<std::string, uint64_t>> pc_sample_hit_table(const TagReport& report,
                                                                  size_t k);

} // namespace threatnet
