#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "threatnet/community.hpp"
#include "threatnet/graph.hpp"
#include "threatnet/indicators.hpp"
#include "threatnet/pdns.hpp"
#include "threatnet/tagging.hpp"

namespace threatnet {

// All artifact formats round-trip: a stage rerun from a persisted file
// yields byte-identical downstream outputs.

std::string extraction_to_json(const std::vector<ExtractionResult>& results,
                               const std::map<std::string, std::string>& families);
void extraction_from_json(const std::string& text, std::vector<ExtractionResult>& results,
                          std::map<std::string, std::string>& families);

std::string enrichment_to_json(const EnrichResult& enrichment);
EnrichResult enrichment_from_json(const std::string& text);

std::string hetero_to_json(const HeteroGraph& graph);
HeteroGraph hetero_from_json(const std::string& text);

std::string network_to_json(const ThreatNetwork& tn);
ThreatNetwork network_from_json(const std::string& text);

std::string partition_to_json(const ThreatNetwork& tn, const Partition& partition,
                              const SplitResult& splits);
/// Reconstructs the assignment against the given network by node key.
Partition partition_from_json(const std::string& text, const ThreatNetwork& tn);

std::string tag_report_to_json(const ThreatNetwork& tn, const TagReport& report);
void write_family_csv(std::ostream& out, const TagReport& report, size_t k);

/// DOT with node color by kind, or by family when sample families are
/// present.
std::string hetero_to_dot(const HeteroGraph& graph);
std::string network_to_dot(const ThreatNetwork& tn);

std::string hetero_to_graphml(const HeteroGraph& graph);
std::string network_to_graphml(const ThreatNetwork& tn);

// Report container (JSON-lines) input.
struct ReportParseStats {
    uint64_t parsed = 0;
    uint64_t malformed = 0;
};
std::vector<AnalysisReport> load_reports_jsonl(const std::filesystem::path& path,
                                               ReportParseStats& stats);

std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

} // namespace threatnet
