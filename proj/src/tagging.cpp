#include "threatnet/tagging.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <set>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "threatnet/common.hpp"

namespace threatnet {

const char* to_string(Activity a) {
    switch (a) {
        case Activity::kSpam: return "spam";
        case Activity::kPcMalware: return "pc_malware";
        case Activity::kPhishing: return "phishing";
        case Activity::kProbing: return "probing";
    }
    return "unknown";
}

void FeedStore::add_pc(const std::string& indicator, PcEntry entry) {
    auto& entries = pc_[indicator];
    for (const auto& e : entries)
        if (e.sample == entry.sample && e.family == entry.family) return;
    entries.push_back(std::move(entry));
}

const std::vector<PcEntry>* FeedStore::pc_entries(const std::string& key) const {
    auto it = pc_.find(key);
    return it == pc_.end() ? nullptr : &it->second;
}

bool FeedStore::has_streamed_feeds() const {
    return streamed_.pc || streamed_.spam || streamed_.phishing || streamed_.probing;
}

namespace {

std::optional<std::string> canonical_indicator(const std::string& raw) {
    if (auto ip = NetworkIndicator::ipv4(raw)) return ip->value;
    if (auto dom = NetworkIndicator::domain(raw)) return dom->value;
    return std::nullopt;
}

// Parses one feed line; calls sink(canonical_key, optional pc entry).
template <typename Sink>
bool parse_feed_line(const std::string& line, Activity activity, Sink&& sink) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return false;

    const char* key_field = activity == Activity::kPhishing  ? "domain"
                            : activity == Activity::kProbing ? "ip"
                                                             : "indicator";
    auto field = j.find(key_field);
    if (field == j.end() || !field->is_string()) return false;

    std::optional<std::string> canon;
    switch (activity) {
        case Activity::kPhishing:
            if (auto d = NetworkIndicator::domain(field->get<std::string>()))
                canon = d->value;
            break;
        case Activity::kProbing:
            if (auto i = NetworkIndicator::ipv4(field->get<std::string>()))
                canon = i->value;
            break;
        default:
            canon = canonical_indicator(field->get<std::string>());
            break;
    }
    if (!canon) return false;

    if (activity == Activity::kPcMalware) {
        auto sample = j.find("sample");
        auto family = j.find("family");
        if (sample == j.end() || family == j.end() || !sample->is_string() ||
            !family->is_string())
            return false;
        std::string fam = family->get<std::string>();
        if (fam.empty()) return false;
        sink(*canon, PcEntry{sample->get<std::string>(), std::move(fam)});
    } else {
        sink(*canon, PcEntry{});
    }
    return true;
}

uint64_t file_size_bytes(const std::filesystem::path& p) {
    std::error_code ec;
    auto size = std::filesystem::file_size(p, ec);
    return ec ? 0 : size;
}

} // namespace

FeedStore FeedStore::load(const FeedPaths& paths, size_t memory_budget_mb) {
    FeedStore store;

    auto load_feed = [&](const std::optional<std::filesystem::path>& path,
                         Activity activity, uint64_t& count,
                         std::optional<std::filesystem::path>& stream_slot) {
        if (!path) return;
        std::ifstream in(*path);
        if (!in) throw IoError("cannot open feed: " + path->string());

        bool streamed = file_size_bytes(*path) > memory_budget_mb * 1024ull * 1024ull;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            bool ok = parse_feed_line(line, activity, [&](const std::string& key,
                                                          PcEntry entry) {
                ++count;
                if (streamed) return;  // counting pass only
                switch (activity) {
                    case Activity::kSpam: store.add_spam(key); break;
                    case Activity::kPhishing: store.add_phishing(key); break;
                    case Activity::kProbing: store.add_probing(key); break;
                    case Activity::kPcMalware: store.add_pc(key, std::move(entry)); break;
                }
            });
            if (!ok) ++store.stats_.malformed_lines;
        }
        if (streamed) stream_slot = *path;
    };

    load_feed(paths.spam, Activity::kSpam, store.stats_.spam_records,
              store.streamed_.spam);
    load_feed(paths.phishing, Activity::kPhishing, store.stats_.phishing_records,
              store.streamed_.phishing);
    load_feed(paths.probing, Activity::kProbing, store.stats_.probing_records,
              store.streamed_.probing);
    load_feed(paths.pc_malware, Activity::kPcMalware, store.stats_.pc_records,
              store.streamed_.pc);
    return store;
}

namespace {

struct NodeLookup {
    // canonical key -> node ids (several nodes can share a suffix target)
    std::unordered_map<std::string, std::vector<uint32_t>> exact;

    static NodeLookup build(const ThreatNetwork& tn, Activity activity,
                            bool suffix_match) {
        NodeLookup lookup;
        for (uint32_t v = 0; v < tn.node_count(); ++v) {
            const NodeId& id = tn.nodes[v];
            bool kind_ok = false;
            switch (activity) {
                case Activity::kSpam:
                case Activity::kPcMalware:
                    kind_ok = id.kind == NodeKind::kIp || id.kind == NodeKind::kDomain;
                    break;
                case Activity::kPhishing:
                    kind_ok = id.kind == NodeKind::kDomain;
                    break;
                case Activity::kProbing:
                    kind_ok = id.kind == NodeKind::kIp;
                    break;
            }
            if (!kind_ok) continue;
            lookup.exact[id.key].push_back(v);
            if (suffix_match && id.kind == NodeKind::kDomain) {
                // Register parent suffixes so a feed entry for a registrable
                // domain also tags its subdomain nodes.
                const std::string& key = id.key;
                size_t pos = 0;
                while ((pos = key.find('.', pos)) != std::string::npos) {
                    ++pos;
                    std::string_view suffix(key.data() + pos, key.size() - pos);
                    if (suffix.find('.') == std::string_view::npos) break;
                    lookup.exact[std::string(suffix)].push_back(v);
                }
            }
        }
        return lookup;
    }
};

} // namespace

TagReport tag(const ThreatNetwork& tn, const Partition* partition,
              const FeedStore& feeds, const TagParams& params) {
    TagReport report;

    // (node, feed) match events, deduplicated per pair; pc matches are also
    // deduplicated per (node, entry) so repeated feed lines count once.
    std::set<std::pair<uint32_t, Activity>> seen_event;
    std::set<std::tuple<uint32_t, std::string, std::string>> pc_matches;
    auto record = [&](uint32_t v, Activity activity, const PcEntry* pc) {
        seen_event.emplace(v, activity);
        if (pc != nullptr) pc_matches.emplace(v, pc->sample, pc->family);
    };

    const bool suffix = params.suffix_match;

    // In-memory correlation: probe the stores per node. Fans out across a
    // bounded pool; per-node matches land in dedicated slots, so the merged
    // result is identical for any pool size.
    {
        const size_t n = tn.node_count();
        std::vector<std::vector<NodeTag>> matches(n);

        auto correlate = [&](uint32_t v) {
            const NodeId& id = tn.nodes[v];
            if (id.kind == NodeKind::kSample) return;

            auto probe_keys = [&](auto&& fn) {
                fn(id.key);
                if (suffix && id.kind == NodeKind::kDomain) {
                    size_t pos = 0;
                    while ((pos = id.key.find('.', pos)) != std::string::npos) {
                        ++pos;
                        std::string_view sv(id.key.data() + pos, id.key.size() - pos);
                        if (sv.find('.') == std::string_view::npos) break;
                        fn(std::string(sv));
                    }
                }
            };

            probe_keys([&](const std::string& key) {
                if (feeds.in_spam(key))
                    matches[v].push_back(NodeTag{Activity::kSpam, {}, {}});
                if (id.kind == NodeKind::kDomain && feeds.in_phishing(key))
                    matches[v].push_back(NodeTag{Activity::kPhishing, {}, {}});
                if (id.kind == NodeKind::kIp && feeds.in_probing(key))
                    matches[v].push_back(NodeTag{Activity::kProbing, {}, {}});
                if (const auto* entries = feeds.pc_entries(key))
                    for (const auto& e : *entries)
                        matches[v].push_back(
                            NodeTag{Activity::kPcMalware, e.sample, e.family});
            });
        };

        size_t workers = std::max<size_t>(1, std::min(params.workers, n ? n : 1));
        if (workers == 1) {
            for (uint32_t v = 0; v < n; ++v) correlate(v);
        } else {
            std::atomic<uint32_t> next{0};
            std::vector<std::thread> pool;
            for (size_t w = 0; w < workers; ++w)
                pool.emplace_back([&] {
                    for (uint32_t v = next.fetch_add(1); v < n; v = next.fetch_add(1))
                        correlate(v);
                });
            for (auto& t : pool) t.join();
        }

        for (uint32_t v = 0; v < n; ++v)
            for (const auto& m : matches[v]) {
                if (m.activity == Activity::kPcMalware) {
                    PcEntry entry{m.pc_sample, m.pc_family};
                    record(v, m.activity, &entry);
                } else {
                    record(v, m.activity, nullptr);
                }
            }
    }

    // Streamed correlation: one pass over each oversized feed file, probing
    // the node set instead of the feed.
    if (feeds.has_streamed_feeds()) {
        auto scan = [&](const std::optional<std::filesystem::path>& path,
                        Activity activity) {
            if (!path) return;
            NodeLookup lookup = NodeLookup::build(tn, activity, suffix);
            std::ifstream in(*path);
            if (!in) throw IoError("cannot open feed: " + path->string());
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                parse_feed_line(line, activity, [&](const std::string& key,
                                                    PcEntry entry) {
                    auto it = lookup.exact.find(key);
                    if (it == lookup.exact.end()) return;
                    for (uint32_t v : it->second)
                        record(v, activity,
                               activity == Activity::kPcMalware ? &entry : nullptr);
                });
            }
        };
        scan(feeds.streamed().spam, Activity::kSpam);
        scan(feeds.streamed().phishing, Activity::kPhishing);
        scan(feeds.streamed().probing, Activity::kProbing);
        scan(feeds.streamed().pc, Activity::kPcMalware);
    }

    // Materialize per-node tags: one entry per non-pc match event, one per
    // distinct (node, pc sample, pc family) match.
    for (const auto& [v, activity] : seen_event)
        if (activity != Activity::kPcMalware)
            report.node_tags[v].push_back(NodeTag{activity, {}, {}});
    for (const auto& [v, sample, family] : pc_matches) {
        report.node_tags[v].push_back(NodeTag{Activity::kPcMalware, sample, family});
        ++report.family_hits[family];
        ++report.pc_sample_hits[sample];
    }

    // Aggregate match events per community and overall.
    auto bump = [](ActivityCounts& counts, Activity a) {
        switch (a) {
            case Activity::kSpam: ++counts.spam; break;
            case Activity::kPcMalware: ++counts.pc_malware; break;
            case Activity::kPhishing: ++counts.phishing; break;
            case Activity::kProbing: ++counts.probing; break;
        }
    };

    std::map<int64_t, ActivityCounts> per_community;
    std::map<int64_t, std::map<std::string, uint64_t>> fam_by_comm, sample_by_comm;
    for (const auto& [v, activity] : seen_event) {
        bump(report.overall.events, activity);
        if (partition) {
            int64_t c = partition->assignment[v];
            bump(per_community[c], activity);
        }
    }
    for (const auto& [v, tags] : report.node_tags) {
        if (!partition) continue;
        int64_t c = partition->assignment[v];
        for (const auto& t : tags) {
            if (t.activity != Activity::kPcMalware) continue;
            ++fam_by_comm[c][t.pc_family];
            ++sample_by_comm[c][t.pc_sample];
        }
    }

    auto top_k_of = [&](const std::map<std::string, uint64_t>& hits, size_t k) {
        std::vector<std::pair<std::string, uint64_t>> sorted(hits.begin(), hits.end());
        std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) {
            if (x.second != y.second) return x.second > y.second;
            return x.first < y.first;
        });
        if (sorted.size() > k) sorted.resize(k);
        return sorted;
    };

    auto fill_shares = [](CommunitySummary& s) {
        uint64_t total = s.events.total();
        if (total == 0) return;
        double t = static_cast<double>(total);
        s.spam_share = 100.0 * static_cast<double>(s.events.spam) / t;
        s.pc_share = 100.0 * static_cast<double>(s.events.pc_malware) / t;
        s.phishing_share = 100.0 * static_cast<double>(s.events.phishing) / t;
        s.probing_share = 100.0 * static_cast<double>(s.events.probing) / t;
    };

    report.overall.community = -1;
    fill_shares(report.overall);
    report.overall.top_families = top_k_of(report.family_hits, params.top_k);
    report.overall.top_samples = top_k_of(report.pc_sample_hits, params.top_k);

    if (partition) {
        for (uint32_t c = 0; c < partition->community_count; ++c) {
            CommunitySummary s;
            s.community = c;
            if (auto it = per_community.find(c); it != per_community.end())
                s.events = it->second;
            fill_shares(s);
            if (auto it = fam_by_comm.find(c); it != fam_by_comm.end())
                s.top_families = top_k_of(it->second, params.top_k);
            if (auto it = sample_by_comm.find(c); it != sample_by_comm.end())
                s.top_samples = top_k_of(it->second, params.top_k);
            report.communities.push_back(std::move(s));
        }
    }
    return report;
}

std::vector<std::pair<std::string, uint64_t>> family_hit_table(const TagReport& report,
                                                               size_t k) {
    std::vector<std::pair<std::string, uint64_t>> sorted(report.family_hits.begin(),
                                                         report.family_hits.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) {
        if (x.second != y.second) return x.second > y.second;
        return x.first < y.first;
    });
    if (sorted.size() > k) sorted.resize(k);
    return sorted;
}

std::vector<std::pair<std::string, uint64_t>> pc_sample_hit_table(const TagReport& report,
                                                                  size_t k) {
    std::vector<std::pair<std::string, uint64_t>> sorted(report.pc_sample_hits.begin(),
                                                         report.pc_sample_hits.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) {
        if (x.second != y.second) return x.second > y.second;
        return x.first < y.first;
    });
    if (sorted.size() > k) sorted.resize(k);
    return sorted;
}

} // namespace threatnet
