#include "threatnet/whitelist.hpp"

#include <algorithm>
#include <fstream>

#include "threatnet/common.hpp"

namespace threatnet {

bool DomainWhitelist::contains(const std::string& domain) const {
    if (entries.contains(domain)) return true;
    // Walk parent suffixes at label boundaries: a.b.c -> b.c -> c is skipped
    // (single labels are not valid entries).
    size_t pos = 0;
    while ((pos = domain.find('.', pos)) != std::string::npos) {
        ++pos;
        std::string_view suffix(domain.data() + pos, domain.size() - pos);
        if (suffix.find('.') == std::string_view::npos) break;
        if (entries.contains(std::string(suffix))) return true;
    }
    return false;
}

bool IpWhitelist::contains(uint32_t ip) const {
    auto it = std::upper_bound(ranges.begin(), ranges.end(), ip,
                               [](uint32_t v, const auto& r) { return v < r.first; });
    if (it == ranges.begin()) return false;
    --it;
    return ip >= it->first && ip <= it->second;
}

namespace {

void normalize_ranges(std::vector<std::pair<uint32_t, uint32_t>>& ranges) {
    std::sort(ranges.begin(), ranges.end());
    std::vector<std::pair<uint32_t, uint32_t>> merged;
    for (const auto& r : ranges) {
        if (!merged.empty() && r.first <= merged.back().second) {
            merged.back().second = std::max(merged.back().second, r.second);
        } else if (!merged.empty() && merged.back().second != UINT32_MAX &&
                   r.first == merged.back().second + 1) {
            merged.back().second = r.second;
        } else {
            merged.push_back(r);
        }
    }
    ranges = std::move(merged);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

} // namespace

IpWhitelist IpWhitelist::from_lines(const std::vector<std::string>& lines) {
    IpWhitelist wl;
    for (const auto& raw : lines) {
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        size_t slash = line.find('/');
        if (slash == std::string_view::npos) {
            auto ip = parse_ipv4_u32(line);
            if (!ip) {
                ++wl.malformed_lines;
                continue;
            }
            wl.ranges.emplace_back(*ip, *ip);
        } else {
            auto base = parse_ipv4_u32(line.substr(0, slash));
            std::string_view len_s = line.substr(slash + 1);
            int len = -1;
            if (!len_s.empty() && len_s.size() <= 2 &&
                std::all_of(len_s.begin(), len_s.end(),
                            [](char c) { return c >= '0' && c <= '9'; }))
                len = std::stoi(std::string(len_s));
            if (!base || len < 0 || len > 32) {
                ++wl.malformed_lines;
                continue;
            }
            uint32_t mask = len == 0 ? 0u : ~0u << (32 - len);
            uint32_t first = *base & mask;
            wl.ranges.emplace_back(first, first | ~mask);
        }
    }
    normalize_ranges(wl.ranges);
    return wl;
}

DomainWhitelist load_domain_list(const std::filesystem::path& path, ListFormat format,
                                 uint64_t top_n) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open domain list: " + path.string());

    DomainWhitelist wl;
    wl.top_n = top_n;
    wl.entries.reserve(top_n ? std::min<uint64_t>(top_n, 1u << 21) : 1u << 16);

    std::string line;
    uint64_t loaded = 0;
    while ((top_n == 0 || loaded < top_n) && std::getline(in, line)) {
        std::string_view entry = trim(line);
        if (entry.empty() || entry.front() == '#') continue;
        if (format == ListFormat::kRanked) {
            size_t comma = entry.find(',');
            if (comma == std::string_view::npos) {
                ++wl.malformed_lines;
                continue;
            }
            entry = trim(entry.substr(comma + 1));
        }
        auto dom = NetworkIndicator::domain(entry);
        if (!dom) {
            ++wl.malformed_lines;
            continue;
        }
        wl.entries.insert(std::move(dom->value));
        ++loaded;
    }
    return wl;
}

IpWhitelist load_ip_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open IP list: " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return IpWhitelist::from_lines(lines);
}

bool is_whitelisted(const NetworkIndicator& ind, const DomainWhitelist& dw,
                    const IpWhitelist& iw) {
    if (ind.kind == IndicatorKind::kDomain) return dw.contains(ind.value);
    auto ip = parse_ipv4_u32(ind.value);
    return ip && iw.contains(*ip);
}

ExtractionResult filter(const ExtractionResult& result, const DomainWhitelist& dw,
                        const IpWhitelist& iw) {
    ExtractionResult out;
    out.sample = result.sample;
    out.dropped = result.dropped;
    for (const auto& entry : result.indicators) {
        const NetworkIndicator& ind = entry.first;
        if (ind.kind == IndicatorKind::kIpv4 && !is_routable(ind)) {
            ++out.dropped[DropReason::kNonRoutable];
            continue;
        }
        if (is_whitelisted(ind, dw, iw)) {
            ++out.dropped[ind.kind == IndicatorKind::kDomain
                              ? DropReason::kWhitelistedDomain
                              : DropReason::kWhitelistedIp];
            continue;
        }
        out.indicators.insert(entry);
    }
    return out;
}

} // namespace threatnet
