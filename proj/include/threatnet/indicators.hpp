#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace threatnet {

enum class Source : uint8_t { kStatic = 1, kDynamic = 2 };

const char* to_string(Source s);
std::optional<Source> source_from_string(std::string_view s);

/// Malware sample identity: lowercase hex digest (MD5, SHA-1 or SHA-256).
struct SampleId {
    std::string hash;

    static std::optional<SampleId> parse(std::string_view raw);

    auto operator<=>(const SampleId&) const = default;
};

enum class IndicatorKind : uint8_t { kIpv4, kDomain };

const char* to_string(IndicatorKind k);

/// A validated, canonical IPv4 address or ASCII domain name.
struct NetworkIndicator {
    IndicatorKind kind;
    std::string value;

    /// Validates and canonicalizes a dotted-quad IPv4 string (decimal octets,
    /// leading zeros stripped). Syntactic check only; routability is a
    /// separate predicate applied at the filtering stage.
    static std::optional<NetworkIndicator> ipv4(std::string_view raw);

    /// Validates and canonicalizes a domain name: ASCII LDH labels, 1-63
    /// chars each, >= 2 labels, <= 253 chars total, all-alphabetic final
    /// label. Lowercased, trailing dot stripped.
    static std::optional<NetworkIndicator> domain(std::string_view raw);

    /// Validates an already-canonical value of either kind.
    static std::optional<NetworkIndicator> parse(IndicatorKind kind,
                                                 std::string_view raw);

    auto operator<=>(const NetworkIndicator&) const = default;
};

/// Parses a dotted-quad into host byte order. Syntactic validation only.
std::optional<uint32_t> parse_ipv4_u32(std::string_view s);
std::string format_ipv4(uint32_t ip);

/// True unless the address falls in a reserved / special-use range
/// (private, loopback, link-local, documentation, multicast, ...).
bool is_routable(uint32_t ip);
bool is_routable(const NetworkIndicator& ip);

enum class DropReason : uint8_t {
    kMalformedIp,      // candidate shaped like an IPv4 but octet out of range
    kMalformedDomain,  // dotted candidate failing domain validation
    kNonAscii,         // dotted candidate containing bytes > 0x7F
    kNonRoutable,      // valid IPv4 in a reserved range (filter stage)
    kWhitelistedDomain,
    kWhitelistedIp,
};

const char* to_string(DropReason r);

using DropCounts = std::map<DropReason, uint64_t>;

/// One analysis report for one sample. Payload is either raw text or a
/// structured field map (sandbox-style), never both empty.
struct AnalysisReport {
    SampleId sample;
    Source source = Source::kStatic;
    std::string text;
    std::map<std::string, std::vector<std::string>> fields;
    std::string family;  // optional label, carried into the graph

    bool structured() const { return !fields.empty(); }
};

/// Indicators extracted from one sample, tagged by originating analysis
/// source, plus counts of rejected candidates by reason.
struct ExtractionResult {
    SampleId sample;
    std::set<std::pair<NetworkIndicator, Source>> indicators;
    DropCounts dropped;

    std::set<NetworkIndicator> values() const;
    void merge(const ExtractionResult& other);
};

/// Pattern-scans arbitrary text for IPv4 addresses and domain names. URL
/// matches contribute only their host part; ports are stripped; candidates
/// failing validation are counted in `dropped`.
ExtractionResult extract_from_text(std::string_view text, const SampleId& sample,
                                   Source source);

/// Scans only the designated network fields of a structured report. Field
/// names not in the allowlist are ignored.
ExtractionResult extract_from_structured(const AnalysisReport& report,
                                         const std::vector<std::string>& field_allowlist);

/// Default structured-report field allowlist.
const std::vector<std::string>& default_dynamic_fields();

enum class CombineMode : uint8_t { kUnion, kIntersection };

/// Merges per-report results into one result per sample. kUnion keeps every
/// indicator; kIntersection keeps, for samples that have both static and
/// dynamic results, only values seen by both analyses.
std::vector<ExtractionResult> combine_per_sample(
    const std::vector<ExtractionResult>& results, CombineMode mode);

} // namespace threatnet
