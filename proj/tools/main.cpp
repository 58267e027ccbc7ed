// threatnet: maps malicious cyber-infrastructure from malware analysis
// reports. Subcommands mirror the pipeline stages so a run can be replayed
// or resumed from any persisted artifact.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "threatnet/common.hpp"
#include "threatnet/config.hpp"
#include "threatnet/pipeline.hpp"
#include "threatnet/serialize.hpp"

namespace {

using namespace threatnet;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDegenerateInput = 2;
constexpr int kExitStageFailure = 3;

struct GlobalArgs {
    std::string config_path;
    std::string out_dir;
    std::string epoch;
};

// Leftover args of the form `--section.key value` (or `--key value` for
// top-level keys) override config entries.
void apply_overrides(Config& config, const std::vector<std::string>& extras) {
    for (size_t i = 0; i < extras.size(); ++i) {
        const std::string& arg = extras[i];
        if (arg.rfind("--", 0) != 0)
            throw ConfigError("unrecognized argument: " + arg);
        std::string key = arg.substr(2);
        std::string value;
        if (size_t eq = key.find('='); eq != std::string::npos) {
            value = key.substr(eq + 1);
            key = key.substr(0, eq);
        } else {
            if (i + 1 >= extras.size())
                throw ConfigError("override missing value: " + arg);
            value = extras[++i];
        }
        config.set_override(key, value);
    }
}

Config make_config(const GlobalArgs& args, const std::vector<std::string>& extras) {
    Config config = args.config_path.empty() ? Config{} : Config::from_file(args.config_path);
    if (!args.out_dir.empty()) config.set_override("out", args.out_dir);
    if (!args.epoch.empty()) config.set_override("epoch", args.epoch);
    apply_overrides(config, extras);
    return config;
}

void print_stage(const StageRecord& record) {
    std::fprintf(stderr, "[%s] %.3fs in=%llu out=%llu\n", record.name.c_str(),
                 record.seconds, static_cast<unsigned long long>(record.in_count),
                 static_cast<unsigned long long>(record.out_count));
}

void write_manifest(const Config& config, const RunManifest& manifest) {
    write_file_atomic(run_dir(config) / "manifest.json", manifest.to_json());
}

int dispatch(const std::string& command, Config& config) {
    validate_config(config);
    std::filesystem::create_directories(run_dir(config));

    RunManifest manifest;
    manifest.version = kVersion;
    manifest.epoch = config.get<std::string>("epoch", "default");
    manifest.config_snapshot = config.root();

    auto flavors = selected_flavors(config);

    if (command == "extract") {
        print_stage(stage_extract(config, manifest));
    } else if (command == "filter") {
        print_stage(stage_filter(config, manifest));
    } else if (command == "enrich") {
        print_stage(stage_enrich(config, manifest));
    } else if (command == "build") {
        print_stage(stage_build(config, manifest));
    } else if (command == "analyze") {
        for (Flavor f : flavors)
            for (const auto& record : stage_analyze(config, f, manifest))
                print_stage(record);
    } else if (command == "rank") {
        for (Flavor f : flavors) print_stage(stage_rank(config, f, manifest));
    } else if (command == "tag") {
        for (Flavor f : flavors) print_stage(stage_tag(config, f, manifest));
    } else if (command == "run") {
        RunManifest full = run(config);
        for (const auto& record : full.stages) print_stage(record);
        std::cout << (run_dir(config) / "manifest.json").string() << "\n";
        return kExitOk;
    }
    write_manifest(config, manifest);
    return kExitOk;
}

int run_gen(uint64_t n, double p, uint64_t seed, const std::string& format,
            const std::string& output) {
    ThreatNetwork tn = gen_random(RandomGraphSpec{n, p, seed});
    std::string content;
    if (format == "json")
        content = network_to_json(tn);
    else if (format == "dot")
        content = network_to_dot(tn);
    else if (format == "graphml")
        content = network_to_graphml(tn);
    else
        throw ConfigError("unknown format: " + format);
    if (output.empty() || output == "-") {
        std::cout << content;
    } else {
        write_file_atomic(output, content);
        std::fprintf(stderr, "[gen] n=%llu p=%g seed=%llu -> %s (%zu nodes, %zu edges)\n",
                     static_cast<unsigned long long>(n), p,
                     static_cast<unsigned long long>(seed), output.c_str(),
                     tn.node_count(), tn.edge_count());
    }
    return kExitOk;
}

int run_bench(const std::vector<uint64_t>& sizes, double degree, double p_option,
              uint64_t seed, const std::vector<std::string>& algorithms,
              const std::string& output) {
    std::vector<RandomGraphSpec> specs;
    for (uint64_t n : sizes) {
        double p = p_option;
        if (p <= 0.0)
            p = n > 1 ? degree / static_cast<double>(n - 1) : 0.0;
        specs.push_back(RandomGraphSpec{n, p, seed});
    }
    auto rows = bench(specs, algorithms);
    if (output.empty() || output == "-") {
        write_bench_csv(std::cout, rows);
    } else {
        std::ostringstream ss;
        write_bench_csv(ss, rows);
        write_file_atomic(output, ss.str());
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"threatnet: threat-network mapping from malware analysis reports"};
    app.require_subcommand(1);
    app.allow_extras();

    GlobalArgs global;
    app.add_option("--config", global.config_path, "JSON config file");
    app.add_option("--out", global.out_dir, "output root directory");
    app.add_option("--epoch", global.epoch, "epoch label (e.g. 2013-W07)");

    const std::pair<const char*, const char*> stage_commands[] = {
        {"extract", "pull indicators out of analysis reports"},
        {"filter", "apply whitelists and routability to extraction.json"},
        {"enrich", "expand filtered indicators through the passive-DNS store"},
        {"build", "assemble the heterogeneous sample/IP/domain graph"},
        {"analyze", "project, prune and detect communities per flavor"},
        {"rank", "PageRank priority lists from a threat network"},
        {"tag", "correlate a threat network against intelligence feeds"},
        {"run", "the whole pipeline, extract through tag"}};
    for (const auto& [name, description] : stage_commands) {
        auto* sub = app.add_subcommand(name, description);
        sub->allow_extras();
        sub->fallthrough();  // global --config/--out/--epoch after the verb
    }

    auto* gen_cmd = app.add_subcommand("gen", "generate a G(n,p) random graph");
    uint64_t gen_n = 1000;
    double gen_p = 0.01;
    uint64_t gen_seed = 1;
    std::string gen_format = "json";
    std::string gen_output;
    gen_cmd->add_option("--n", gen_n, "node count");
    gen_cmd->add_option("--p", gen_p, "edge probability");
    gen_cmd->add_option("--seed", gen_seed, "random seed");
    gen_cmd->add_option("--format", gen_format, "json|dot|graphml");
    gen_cmd->add_option("--output", gen_output, "output file (default stdout)");

    auto* bench_cmd = app.add_subcommand("bench", "time detect/pagerank on G(n,p)");
    std::vector<uint64_t> bench_sizes{1000, 10000, 100000};
    double bench_degree = 5.0;
    double bench_p = 0.0;
    uint64_t bench_seed = 1;
    std::vector<std::string> bench_algorithms{"louvain", "pagerank"};
    std::string bench_output;
    bench_cmd->add_option("--sizes", bench_sizes, "node counts");
    bench_cmd->add_option("--degree", bench_degree, "target mean degree (sets p)");
    bench_cmd->add_option("--p", bench_p, "explicit edge probability (overrides degree)");
    bench_cmd->add_option("--seed", bench_seed, "random seed");
    bench_cmd->add_option("--algorithms", bench_algorithms, "louvain, pagerank");
    bench_cmd->add_option("--output", bench_output, "output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen_cmd->parsed())
            return run_gen(gen_n, gen_p, gen_seed, gen_format, gen_output);
        if (bench_cmd->parsed())
            return run_bench(bench_sizes, bench_degree, bench_p, bench_seed,
                             bench_algorithms, bench_output);

        for (auto* sub : app.get_subcommands()) {
            std::vector<std::string> extras = app.remaining();
            for (const auto& extra : sub->remaining()) extras.push_back(extra);
            Config config = make_config(global, extras);
            return dispatch(sub->get_name(), config);
        }
        std::cerr << "no subcommand given\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const EmptyGraphError& e) {
        std::cerr << "degenerate input: " << e.what() << "\n";
        return kExitDegenerateInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStageFailure;
    }
}
