#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

#include "threatnet/indicators.hpp"

namespace threatnet {

enum class ListFormat : uint8_t { kRanked, kPlain };

/// Top-domain whitelist (Alexa/Quantcast style). Entries are canonical
/// registrable domains; matching is exact FQDN or parent-domain suffix at a
/// label boundary, so `mail.google.com` matches entry `google.com` but
/// `evil-google.com` does not.
struct DomainWhitelist {
    std::unordered_set<std::string> entries;
    uint64_t top_n = 0;           // cap actually applied (0 = unlimited)
    uint64_t malformed_lines = 0;

    bool contains(const std::string& domain) const;
};

struct IpWhitelist {
    // Merged, sorted, disjoint [first,last] ranges from CIDR blocks and
    // exact addresses.
    std::vector<std::pair<uint32_t, uint32_t>> ranges;
    uint64_t malformed_lines = 0;

    bool contains(uint32_t ip) const;
    static IpWhitelist from_lines(const std::vector<std::string>& lines);
};

/// Loads a domain list. Ranked format is CSV `rank,domain`; Plain is one
/// domain per line. `#` comments and blank lines are skipped; at most top_n
/// valid entries are loaded (0 = whole list).
DomainWhitelist load_domain_list(const std::filesystem::path& path, ListFormat format,
                                 uint64_t top_n);

/// Loads an IP whitelist: one CIDR prefix or dotted-quad per line.
IpWhitelist load_ip_list(const std::filesystem::path& path);

bool is_whitelisted(const NetworkIndicator& ind, const DomainWhitelist& dw,
                    const IpWhitelist& iw);

/// Removes whitelisted and non-routable indicators, recording removals per
/// reason in the result's drop counts. Sample tagging is preserved.
ExtractionResult filter(const ExtractionResult& result, const DomainWhitelist& dw,
                        const IpWhitelist& iw);

} // namespace threatnet
