#include "threatnet/indicators.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>

namespace threatnet {

namespace {

bool is_alpha(unsigned char c) { return std::isalpha(c) != 0; }
bool is_digit(unsigned char c) { return std::isdigit(c) != 0; }
bool is_alnum(unsigned char c) { return std::isalnum(c) != 0; }

// Characters that may appear inside a host candidate. High bytes are
// included so that a non-ASCII "domain" forms one candidate and can be
// rejected (and counted) as a unit.
bool is_token_char(unsigned char c) {
    return is_alnum(c) || c == '.' || c == '-' || c >= 0x80;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

} // namespace

const char* to_string(Source s) {
    return s == Source::kStatic ? "static" : "dynamic";
}

std::optional<Source> source_from_string(std::string_view s) {
    if (s == "static") return Source::kStatic;
    if (s == "dynamic") return Source::kDynamic;
    return std::nullopt;
}

const char* to_string(IndicatorKind k) {
    return k == IndicatorKind::kIpv4 ? "ip" : "domain";
}

const char* to_string(DropReason r) {
    switch (r) {
        case DropReason::kMalformedIp: return "malformed_ip";
        case DropReason::kMalformedDomain: return "malformed_domain";
        case DropReason::kNonAscii: return "non_ascii";
        case DropReason::kNonRoutable: return "non_routable";
        case DropReason::kWhitelistedDomain: return "whitelisted_domain";
        case DropReason::kWhitelistedIp: return "whitelisted_ip";
    }
    return "unknown";
}

std::optional<SampleId> SampleId::parse(std::string_view raw) {
    size_t n = raw.size();
    if (n != 32 && n != 40 && n != 64) return std::nullopt;
    std::string canon;
    canon.reserve(n);
    for (unsigned char c : raw) {
        if (is_digit(c)) {
            canon.push_back(static_cast<char>(c));
        } else if (c >= 'a' && c <= 'f') {
            canon.push_back(static_cast<char>(c));
        } else if (c >= 'A' && c <= 'F') {
            canon.push_back(static_cast<char>(c - 'A' + 'a'));
        } else {
            return std::nullopt;
        }
    }
    return SampleId{std::move(canon)};
}

std::optional<uint32_t> parse_ipv4_u32(std::string_view s) {
    uint32_t ip = 0;
    int octets = 0;
    size_t i = 0;
    while (i <= s.size()) {
        size_t start = i;
        uint32_t val = 0;
        while (i < s.size() && is_digit(static_cast<unsigned char>(s[i]))) {
            val = val * 10 + static_cast<uint32_t>(s[i] - '0');
            if (val > 999) return std::nullopt;
            ++i;
        }
        size_t len = i - start;
        if (len == 0 || len > 3 || val > 255) return std::nullopt;
        ip = (ip << 8) | val;
        ++octets;
        if (i == s.size()) break;
        if (s[i] != '.') return std::nullopt;
        ++i;
        if (i == s.size()) return std::nullopt;  // trailing dot
    }
    if (octets != 4) return std::nullopt;
    return ip;
}

std::string format_ipv4(uint32_t ip) {
    std::array<char, 16> buf;
    int n = std::snprintf(buf.data(), buf.size(), "%u.%u.%u.%u", (ip >> 24) & 0xff,
                          (ip >> 16) & 0xff, (ip >> 8) & 0xff, ip & 0xff);
    return std::string(buf.data(), static_cast<size_t>(n));
}

std::optional<NetworkIndicator> NetworkIndicator::ipv4(std::string_view raw) {
    auto ip = parse_ipv4_u32(raw);
    if (!ip) return std::nullopt;
    return NetworkIndicator{IndicatorKind::kIpv4, format_ipv4(*ip)};
}

std::optional<NetworkIndicator> NetworkIndicator::domain(std::string_view raw) {
    if (!raw.empty() && raw.back() == '.') raw.remove_suffix(1);
    if (raw.empty() || raw.size() > 253) return std::nullopt;

    int labels = 0;
    size_t label_start = 0;
    bool last_label_alpha = false;
    for (size_t i = 0; i <= raw.size(); ++i) {
        if (i == raw.size() || raw[i] == '.') {
            size_t len = i - label_start;
            if (len == 0 || len > 63) return std::nullopt;
            if (raw[label_start] == '-' || raw[i - 1] == '-') return std::nullopt;
            last_label_alpha = true;
            for (size_t j = label_start; j < i; ++j) {
                unsigned char c = static_cast<unsigned char>(raw[j]);
                if (!(is_alnum(c) || c == '-')) return std::nullopt;
                if (!is_alpha(c)) last_label_alpha = false;
            }
            ++labels;
            label_start = i + 1;
        }
    }
    if (labels < 2 || !last_label_alpha) return std::nullopt;
    return NetworkIndicator{IndicatorKind::kDomain, to_lower(raw)};
}

std::optional<NetworkIndicator> NetworkIndicator::parse(IndicatorKind kind,
                                                        std::string_view raw) {
    return kind == IndicatorKind::kIpv4 ? ipv4(raw) : domain(raw);
}

namespace {

struct CidrBlock {
    uint32_t base;
    uint32_t mask;
    constexpr bool contains(uint32_t ip) const { return (ip & mask) == base; }
};

constexpr uint32_t make_ip(uint32_t a, uint32_t b, uint32_t c, uint32_t d) {
    return (a << 24) | (b << 16) | (c << 8) | d;
}
constexpr uint32_t prefix_mask(int len) {
    return len == 0 ? 0u : ~0u << (32 - len);
}
constexpr CidrBlock block(uint32_t a, uint32_t b, uint32_t c, uint32_t d, int len) {
    return CidrBlock{make_ip(a, b, c, d) & prefix_mask(len), prefix_mask(len)};
}

// Special-use ranges treated as non-routable.
constexpr std::array<CidrBlock, 15> kReservedBlocks = {
    block(0, 0, 0, 0, 8),        // "this network"
    block(10, 0, 0, 0, 8),       // RFC1918
    block(100, 64, 0, 0, 10),    // CGNAT
    block(127, 0, 0, 0, 8),      // loopback
    block(169, 254, 0, 0, 16),   // link-local
    block(172, 16, 0, 0, 12),    // RFC1918
    block(192, 0, 0, 0, 24),     // IETF protocol assignments
    block(192, 0, 2, 0, 24),     // TEST-NET-1
    block(192, 168, 0, 0, 16),   // RFC1918
    block(198, 18, 0, 0, 15),    // benchmarking
    block(198, 51, 100, 0, 24),  // TEST-NET-2
    block(203, 0, 113, 0, 24),   // TEST-NET-3
    block(224, 0, 0, 0, 4),      // multicast
    block(240, 0, 0, 0, 4),      // reserved
    block(255, 255, 255, 255, 32),
};

} // namespace

bool is_routable(uint32_t ip) {
    for (const auto& b : kReservedBlocks)
        if (b.contains(ip)) return false;
    return true;
}

bool is_routable(const NetworkIndicator& ind) {
    auto ip = parse_ipv4_u32(ind.value);
    return ip && is_routable(*ip);
}

std::set<NetworkIndicator> ExtractionResult::values() const {
    std::set<NetworkIndicator> out;
    for (const auto& [ind, src] : indicators) out.insert(ind);
    return out;
}

void ExtractionResult::merge(const ExtractionResult& other) {
    indicators.insert(other.indicators.begin(), other.indicators.end());
    for (const auto& [reason, count] : other.dropped) dropped[reason] += count;
}

namespace {

// Shape test: four dot-separated groups of 1-3 digits.
bool looks_like_ipv4(std::string_view s) {
    int groups = 0;
    size_t i = 0;
    while (i <= s.size()) {
        size_t start = i;
        while (i < s.size() && is_digit(static_cast<unsigned char>(s[i]))) ++i;
        size_t len = i - start;
        if (len == 0 || len > 3) return false;
        ++groups;
        if (i == s.size()) break;
        if (s[i] != '.') return false;
        ++i;
    }
    return groups == 4;
}

void classify_candidate(std::string_view cand, ExtractionResult& out, Source source) {
    // Trim separators that the token scan may have glued on.
    while (!cand.empty() && (cand.front() == '.' || cand.front() == '-'))
        cand.remove_prefix(1);
    while (!cand.empty() && (cand.back() == '.' || cand.back() == '-'))
        cand.remove_suffix(1);
    if (cand.empty()) return;

    bool has_dot = cand.find('.') != std::string_view::npos;
    if (!has_dot) return;  // bare words and numbers are not candidates

    for (unsigned char c : cand) {
        if (c >= 0x80) {
            ++out.dropped[DropReason::kNonAscii];
            return;
        }
    }

    if (looks_like_ipv4(cand)) {
        if (auto ind = NetworkIndicator::ipv4(cand)) {
            out.indicators.emplace(std::move(*ind), source);
        } else {
            ++out.dropped[DropReason::kMalformedIp];
        }
        return;
    }

    if (auto ind = NetworkIndicator::domain(cand)) {
        out.indicators.emplace(std::move(*ind), source);
    } else {
        ++out.dropped[DropReason::kMalformedDomain];
    }
}

bool is_scheme_char(unsigned char c) {
    return is_alnum(c) || c == '+' || c == '-' || c == '.';
}

// If text[pos..] starts a URL (scheme "://" authority ...), extracts the host
// part and returns the index one past the consumed span. Otherwise returns
// pos unchanged.
size_t try_consume_url(std::string_view text, size_t pos, std::string_view& host_out) {
    size_t i = pos;
    if (i >= text.size() || !is_alpha(static_cast<unsigned char>(text[i]))) return pos;
    while (i < text.size() && is_scheme_char(static_cast<unsigned char>(text[i]))) ++i;
    if (i + 2 >= text.size() || text.substr(i, 3) != "://") return pos;
    i += 3;

    size_t auth_start = i;
    while (i < text.size()) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (c == '/' || c == '?' || c == '#' || std::isspace(c) || c == '"' ||
            c == '\'' || c == '<' || c == '>')
            break;
        ++i;
    }
    std::string_view authority = text.substr(auth_start, i - auth_start);

    // Keep only the host: drop userinfo and port.
    if (size_t at = authority.rfind('@'); at != std::string_view::npos)
        authority.remove_prefix(at + 1);
    if (size_t colon = authority.find(':'); colon != std::string_view::npos)
        authority = authority.substr(0, colon);
    host_out = authority;

    // Consume the rest of the URL so path components are not re-scanned.
    while (i < text.size()) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (std::isspace(c) || c == '"' || c == '\'' || c == '<' || c == '>') break;
        ++i;
    }
    return i;
}

void scan_text(std::string_view text, ExtractionResult& out, Source source) {
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (!is_token_char(c)) {
            ++i;
            continue;
        }
        std::string_view host;
        size_t url_end = try_consume_url(text, i, host);
        if (url_end != i) {
            classify_candidate(host, out, source);
            i = url_end;
            continue;
        }
        size_t start = i;
        while (i < n && is_token_char(static_cast<unsigned char>(text[i]))) ++i;
        classify_candidate(text.substr(start, i - start), out, source);
    }
}

} // namespace

ExtractionResult extract_from_text(std::string_view text, const SampleId& sample,
                                   Source source) {
    ExtractionResult out;
    out.sample = sample;
    scan_text(text, out, source);
    return out;
}

const std::vector<std::string>& default_dynamic_fields() {
    static const std::vector<std::string> fields = {
        "dns_query", "dns_response", "tcp_connect", "udp_connect", "http_host"};
    return fields;
}

ExtractionResult extract_from_structured(const AnalysisReport& report,
                                         const std::vector<std::string>& field_allowlist) {
    if (!report.structured())
        throw std::invalid_argument("extract_from_structured: structured payload required");
    ExtractionResult out;
    out.sample = report.sample;
    for (const auto& name : field_allowlist) {
        auto it = report.fields.find(name);
        if (it == report.fields.end()) continue;
        for (const auto& value : it->second) scan_text(value, out, report.source);
    }
    return out;
}

std::vector<ExtractionResult> combine_per_sample(
    const std::vector<ExtractionResult>& results, CombineMode mode) {
    std::vector<ExtractionResult> combined;
    std::map<SampleId, size_t> index;
    for (const auto& r : results) {
        auto [it, inserted] = index.emplace(r.sample, combined.size());
        if (inserted) {
            combined.push_back(r);
        } else {
            combined[it->second].merge(r);
        }
    }
    if (mode == CombineMode::kIntersection) {
        for (auto& r : combined) {
            std::set<NetworkIndicator> from_static, from_dynamic;
            for (const auto& [ind, src] : r.indicators)
                (src == Source::kStatic ? from_static : from_dynamic).insert(ind);
            if (from_static.empty() || from_dynamic.empty()) continue;
            std::erase_if(r.indicators, [&](const auto& pair) {
                return !(from_static.contains(pair.first) &&
                         from_dynamic.contains(pair.first));
            });
        }
    }
    return combined;
}

} // namespace threatnet
