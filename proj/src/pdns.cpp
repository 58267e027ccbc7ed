#include "threatnet/pdns.hpp"

#include <fstream>

#include <json.hpp>

#include "threatnet/common.hpp"

namespace threatnet {

namespace {

int64_t int_field(const nlohmann::json& j, const char* key, int64_t fallback) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number()) return fallback;
    return it->get<int64_t>();
}

std::optional<PdnsRecord> parse_record_line(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    auto rrtype = j.find("rrtype");
    if (rrtype != j.end() && (!rrtype->is_string() || rrtype->get<std::string>() != "A"))
        return PdnsRecord{};  // sentinel: skip non-A records
    auto rrname = j.find("rrname");
    auto rdata = j.find("rdata");
    if (rrname == j.end() || rdata == j.end() || !rrname->is_string() ||
        !rdata->is_string())
        return std::nullopt;
    auto dom = NetworkIndicator::domain(rrname->get<std::string>());
    auto ip = NetworkIndicator::ipv4(rdata->get<std::string>());
    if (!dom || !ip) return std::nullopt;

    PdnsRecord rec;
    rec.rrname = std::move(dom->value);
    rec.rdata = std::move(ip->value);
    rec.first_seen = int_field(j, "time_first", 0);
    rec.last_seen = int_field(j, "time_last", rec.first_seen);
    if (rec.last_seen < rec.first_seen) rec.last_seen = rec.first_seen;
    int64_t count = int_field(j, "count", 1);
    rec.count = count > 0 ? static_cast<uint64_t>(count) : 1;
    return rec;
}

} // namespace

PdnsLoadStats PdnsStore::load_jsonl(const std::filesystem::path& path) {
    std::ifstream probe(path);
    if (!probe) throw IoError("cannot open pdns store: " + path.string());

    PdnsLoadStats stats;

    // Pass 1: count records per key so the index buckets can be sized
    // before any insertion.
    uint64_t domains = 0, ips = 0, records = 0;
    {
        std::unordered_map<std::string, uint32_t> dom_seen, ip_seen;
        std::string line;
        while (std::getline(probe, line)) {
            if (line.empty()) continue;
            auto rec = parse_record_line(line);
            if (!rec) continue;
            if (rec->rrname.empty()) continue;  // skipped rrtype
            ++records;
            if (++dom_seen[rec->rrname] == 1) ++domains;
            if (++ip_seen[rec->rdata] == 1) ++ips;
        }
    }
    records_.reserve(records_.size() + records);
    by_domain_.reserve(by_domain_.size() + domains);
    by_ip_.reserve(by_ip_.size() + ips);

    // Pass 2: fill.
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto rec = parse_record_line(line);
        if (!rec) {
            ++stats.malformed;
            continue;
        }
        if (rec->rrname.empty()) {
            ++stats.skipped_rrtype;
            continue;
        }
        add(std::move(*rec));
        ++stats.loaded;
    }
    if (!check_dual_index())
        throw IoError("pdns store indices inconsistent after load: " + path.string());
    return stats;
}

void PdnsStore::add(PdnsRecord rec) {
    uint32_t idx = static_cast<uint32_t>(records_.size());
    by_domain_[rec.rrname].push_back(idx);
    by_ip_[rec.rdata].push_back(idx);
    records_.push_back(std::move(rec));
}

std::set<std::string> PdnsStore::get_ip(const std::string& domain,
                                        std::optional<TimeWindow> window) const {
    std::set<std::string> out;
    auto it = by_domain_.find(domain);
    if (it == by_domain_.end()) return out;
    for (uint32_t idx : it->second) {
        const PdnsRecord& r = records_[idx];
        if (!window || window->intersects(r.first_seen, r.last_seen))
            out.insert(r.rdata);
    }
    return out;
}

std::set<std::string> PdnsStore::get_domain(const std::string& ip,
                                            std::optional<TimeWindow> window) const {
    std::set<std::string> out;
    auto it = by_ip_.find(ip);
    if (it == by_ip_.end()) return out;
    for (uint32_t idx : it->second) {
        const PdnsRecord& r = records_[idx];
        if (!window || window->intersects(r.first_seen, r.last_seen))
            out.insert(r.rrname);
    }
    return out;
}

bool PdnsStore::check_dual_index() const {
    std::vector<bool> seen_dom(records_.size(), false), seen_ip(records_.size(), false);
    size_t dom_total = 0, ip_total = 0;
    for (const auto& [key, idxs] : by_domain_) {
        for (uint32_t idx : idxs) {
            if (idx >= records_.size() || records_[idx].rrname != key) return false;
            if (seen_dom[idx]) return false;
            seen_dom[idx] = true;
            ++dom_total;
        }
    }
    for (const auto& [key, idxs] : by_ip_) {
        for (uint32_t idx : idxs) {
            if (idx >= records_.size() || records_[idx].rdata != key) return false;
            if (seen_ip[idx]) return false;
            seen_ip[idx] = true;
            ++ip_total;
        }
    }
    return dom_total == records_.size() && ip_total == records_.size();
}

EnrichResult enrich(const std::set<NetworkIndicator>& indicators, const PdnsStore& store,
                    std::optional<TimeWindow> window, const DomainWhitelist& dw,
                    const IpWhitelist& iw, int rounds) {
    EnrichResult out;
    out.enriched = indicators;

    std::set<std::pair<std::string, std::string>> touched;
    std::set<NetworkIndicator> frontier = indicators;

    for (int round = 0; round < rounds && !frontier.empty(); ++round) {
        std::set<NetworkIndicator> next;
        for (const auto& ind : frontier) {
            if (ind.kind == IndicatorKind::kDomain) {
                for (const auto& ip : store.get_ip(ind.value, window)) {
                    touched.emplace(ind.value, ip);
                    NetworkIndicator cand{IndicatorKind::kIpv4, ip};
                    if (out.enriched.contains(cand)) continue;
                    if (!is_routable(cand) || is_whitelisted(cand, dw, iw)) {
                        ++out.rejected_by_whitelist;
                        continue;
                    }
                    out.enriched.insert(cand);
                    next.insert(std::move(cand));
                }
            } else {
                for (const auto& dom : store.get_domain(ind.value, window)) {
                    touched.emplace(dom, ind.value);
                    NetworkIndicator cand{IndicatorKind::kDomain, dom};
                    if (out.enriched.contains(cand)) continue;
                    if (is_whitelisted(cand, dw, iw)) {
                        ++out.rejected_by_whitelist;
                        continue;
                    }
                    out.enriched.insert(cand);
                    next.insert(std::move(cand));
                }
            }
        }
        frontier = std::move(next);
    }

    for (const auto& [dom, ip] : touched) {
        if (out.enriched.contains(NetworkIndicator{IndicatorKind::kDomain, dom}) &&
            out.enriched.contains(NetworkIndicator{IndicatorKind::kIpv4, ip}))
            out.resolution_edges.emplace(dom, ip);
    }
    return out;
}

} // namespace threatnet
