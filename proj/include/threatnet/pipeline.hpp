#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "threatnet/config.hpp"
#include "threatnet/graph.hpp"

namespace threatnet {

struct StageRecord {
    std::string name;
    double seconds = 0.0;
    uint64_t in_count = 0;
    uint64_t out_count = 0;
};

/// Record of one pipeline run: config snapshot plus per-stage bookkeeping.
/// With the same inputs and config the data artifacts reproduce
/// byte-identically; only the timings here vary.
struct RunManifest {
    std::string version;
    std::string epoch;
    nlohmann::json config_snapshot;
    std::vector<StageRecord> stages;
    std::vector<std::string> outputs;

    std::string to_json() const;
};

/// Effective worker-pool size: THREATNET_WORKERS env var, else config key
/// `workers`, else hardware concurrency.
size_t worker_count(const Config& config);

/// Output directory for a run: <out>/<epoch>/.
std::filesystem::path run_dir(const Config& config);

/// Validates config keys and referenced paths; throws ConfigError.
void validate_config(const Config& config);

// Individual stages; each reads persisted inputs and writes persisted
// outputs under run_dir, so any stage can be rerun in isolation.
StageRecord stage_extract(const Config& config, RunManifest& manifest);
StageRecord stage_filter(const Config& config, RunManifest& manifest);
StageRecord stage_enrich(const Config& config, RunManifest& manifest);
StageRecord stage_build(const Config& config, RunManifest& manifest);
std::vector<StageRecord> stage_analyze(const Config& config, Flavor flavor,
                                       RunManifest& manifest);
StageRecord stage_rank(const Config& config, Flavor flavor, RunManifest& manifest);
StageRecord stage_tag(const Config& config, Flavor flavor, RunManifest& manifest);

/// Full pipeline: extract -> filter -> [enrich] -> build -> per-flavor
/// (project/prune/detect -> rank -> [tag]); flavors run concurrently.
RunManifest run(const Config& config);

std::vector<Flavor> selected_flavors(const Config& config);

struct BenchRow {
    uint64_t n;
    double p;
    uint64_t seed;
    std::string algorithm;
    double seconds;
};

/// Runs the named algorithms ("louvain", "pagerank") over generated G(n,p)
/// graphs and reports wall-clock seconds per run.
std::vector<BenchRow> bench(const std::vector<RandomGraphSpec>& specs,
                            const std::vector<std::string>& algorithms);
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

} // namespace threatnet
