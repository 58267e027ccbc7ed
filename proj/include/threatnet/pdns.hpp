#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "threatnet/indicators.hpp"
#include "threatnet/whitelist.hpp"

namespace threatnet {

/// One observed A-record resolution with its activity interval.
struct PdnsRecord {
    std::string rrname;   // canonical domain
    std::string rdata;    // canonical dotted-quad
    int64_t first_seen = 0;
    int64_t last_seen = 0;
    uint64_t count = 1;
};

/// Inclusive time window; a record matches when [first_seen,last_seen]
/// intersects it.
struct TimeWindow {
    int64_t begin;
    int64_t end;

    bool intersects(int64_t first, int64_t last) const {
        return first <= end && last >= begin;
    }
};

struct PdnsLoadStats {
    uint64_t loaded = 0;
    uint64_t skipped_rrtype = 0;
    uint64_t malformed = 0;
};

/// Local passive-DNS replication store. Immutable after load; reads are
/// concurrency-safe. Two indices (by domain, by IP) reference the same
/// record pool.
class PdnsStore {
public:
    /// Appends records from a JSON-lines file; rrtype != "A" is skipped.
    /// Two passes: the first sizes the indices, the second fills them.
    PdnsLoadStats load_jsonl(const std::filesystem::path& path);

    void add(PdnsRecord rec);

    std::set<std::string> get_ip(const std::string& domain,
                                 std::optional<TimeWindow> window = {}) const;
    std::set<std::string> get_domain(const std::string& ip,
                                     std::optional<TimeWindow> window = {}) const;

    size_t size() const { return records_.size(); }
    const std::vector<PdnsRecord>& records() const { return records_; }

    /// Full-scan verification that both indices cover the identical record
    /// set. Run after bulk loads.
    bool check_dual_index() const;

private:
    std::vector<PdnsRecord> records_;
    std::unordered_map<std::string, std::vector<uint32_t>> by_domain_;
    std::unordered_map<std::string, std::vector<uint32_t>> by_ip_;
};

struct EnrichResult {
    std::set<NetworkIndicator> enriched;
    std::set<std::pair<std::string, std::string>> resolution_edges;  // (domain, ip)
    uint64_t rejected_by_whitelist = 0;
};

/// One-round (by default) passive-DNS expansion of an already-filtered
/// indicator set. Newly found indicators are re-filtered through the
/// whitelists and the routability check; a resolution edge is emitted for
/// every (domain, ip) pair whose endpoints both survive.
EnrichResult enrich(const std::set<NetworkIndicator>& indicators, const PdnsStore& store,
                    std::optional<TimeWindow> window, const DomainWhitelist& dw,
                    const IpWhitelist& iw, int rounds = 1);

} // namespace threatnet
