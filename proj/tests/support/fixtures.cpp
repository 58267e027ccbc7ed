#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

namespace fixtures {

using namespace threatnet;

TempDir::TempDir() {
    static std::atomic<uint64_t> counter{0};
    auto base = std::filesystem::temp_directory_path();
    path_ = base / ("threatnet_test_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

std::filesystem::path fixture_dir() { return THREATNET_FIXTURE_DIR; }
std::filesystem::path cli_path() { return THREATNET_CLI_PATH; }

ThreatNetwork make_network(
    size_t n, const std::vector<std::tuple<uint32_t, uint32_t, double>>& edges) {
    ThreatNetwork tn;
    for (size_t i = 0; i < n; ++i)
        tn.intern(NodeId{NodeKind::kIp, format_ipv4(static_cast<uint32_t>(0x01000000u + i))});
    for (const auto& [a, b, w] : edges) {
        auto& e = tn.edge_between(a, b);
        e.weight = w;
    }
    tn.finalize();
    return tn;
}

ThreatNetwork random_network(std::mt19937_64& rng, size_t max_nodes, double edge_prob,
                             uint32_t max_w) {
    std::uniform_int_distribution<size_t> node_count(1, max_nodes);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<uint32_t> weight(1, max_w);

    size_t n = node_count(rng);
    std::vector<std::tuple<uint32_t, uint32_t, double>> edges;
    for (uint32_t a = 0; a + 1 < n; ++a)
        for (uint32_t b = a + 1; b < n; ++b)
            if (coin(rng) < edge_prob)
                edges.emplace_back(a, b, static_cast<double>(weight(rng)));
    return make_network(n, edges);
}

ThreatNetwork two_cliques_bridge(size_t k) {
    std::vector<std::tuple<uint32_t, uint32_t, double>> edges;
    for (uint32_t a = 0; a < k; ++a)
        for (uint32_t b = a + 1; b < k; ++b) {
            edges.emplace_back(a, b, 1.0);
            edges.emplace_back(a + k, b + k, 1.0);
        }
    edges.emplace_back(0, static_cast<uint32_t>(k), 1.0);  // the bridge
    return make_network(2 * k, edges);
}

PlantedPartition planted_partition(uint32_t blocks, uint32_t block_size, double p_in,
                                   double p_out, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    const uint32_t n = blocks * block_size;

    PlantedPartition out;
    out.labels.resize(n);
    for (uint32_t v = 0; v < n; ++v) out.labels[v] = v / block_size;

    std::vector<std::tuple<uint32_t, uint32_t, double>> edges;
    for (uint32_t a = 0; a + 1 < n; ++a)
        for (uint32_t b = a + 1; b < n; ++b) {
            double p = out.labels[a] == out.labels[b] ? p_in : p_out;
            if (coin(rng) < p) edges.emplace_back(a, b, 1.0);
        }
    out.network = make_network(n, edges);
    return out;
}

HeteroGraph random_tripartite(std::mt19937_64& rng, size_t max_nodes) {
    std::uniform_int_distribution<size_t> count(1, std::max<size_t>(1, max_nodes / 3));
    size_t samples = count(rng), ips = count(rng), domains = count(rng);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    std::vector<ExtractionResult> results;
    std::vector<std::string> ip_keys, domain_keys;
    for (size_t i = 0; i < ips; ++i)
        ip_keys.push_back(format_ipv4(static_cast<uint32_t>(0x08000000u + i)));
    for (size_t d = 0; d < domains; ++d)
        domain_keys.push_back("host" + std::to_string(d) + ".test");

    for (size_t s = 0; s < samples; ++s) {
        ExtractionResult r;
        std::string hash(32, '0');
        std::string suffix = std::to_string(s);
        hash.replace(hash.size() - suffix.size(), suffix.size(), suffix);
        r.sample = *SampleId::parse(hash);
        for (const auto& ip : ip_keys)
            if (coin(rng) < 0.35)
                r.indicators.emplace(NetworkIndicator{IndicatorKind::kIpv4, ip},
                                     Source::kStatic);
        for (const auto& dom : domain_keys)
            if (coin(rng) < 0.35)
                r.indicators.emplace(NetworkIndicator{IndicatorKind::kDomain, dom},
                                     Source::kDynamic);
        results.push_back(std::move(r));
    }

    std::vector<std::pair<std::string, std::string>> resolution;
    for (const auto& dom : domain_keys)
        for (const auto& ip : ip_keys)
            if (coin(rng) < 0.25) resolution.emplace_back(dom, ip);

    return build_hetero(results, resolution);
}

namespace {

// Noise vocabulary with no dots: nothing here can form an indicator.
const char* kNoiseWords[] = {
    "invoke-virtual", "const-string",  "move-result-object", "iget-object",
    "sput-object",    "check-cast",    "Landroid/os/Bundle", "Ljava/lang/String",
    "onCreate",       "loadLibrary",   "getSystemService",   "sendTextMessage",
    "v0",             "v1",            "p0",                 "field_0x1c",
    "method_table",   "registers=4",   "catch_block",        "array-length"};

std::string noise_line(std::mt19937_64& rng) {
    std::uniform_int_distribution<size_t> words(3, 8);
    std::uniform_int_distribution<size_t> pick(0, std::size(kNoiseWords) - 1);
    std::ostringstream line;
    size_t count = words(rng);
    for (size_t i = 0; i < count; ++i) {
        if (i) line << ' ';
        line << kNoiseWords[pick(rng)];
    }
    return line.str();
}

uint32_t random_routable_ip(std::mt19937_64& rng) {
    std::uniform_int_distribution<uint32_t> any(0, UINT32_MAX);
    while (true) {
        uint32_t ip = any(rng);
        if (is_routable(ip)) return ip;
    }
}

} // namespace

PlantedCorpus planted_corpus(uint64_t seed) {
    std::mt19937_64 rng(seed);
    PlantedCorpus corpus;

    // 17 benign IPs drawn from two whitelisted CIDR blocks; 23 malicious
    // routable IPs outside them.
    std::vector<std::string> wl_lines = {"20.30.0.0/16", "77.66.55.0/24"};
    corpus.ip_whitelist = IpWhitelist::from_lines(wl_lines);

    std::vector<NetworkIndicator> ips;
    std::uniform_int_distribution<uint32_t> low16(0, 0xffff), low8(0, 0xff);
    for (int i = 0; i < 9; ++i) {
        NetworkIndicator ind{IndicatorKind::kIpv4,
                             format_ipv4(0x141E0000u | low16(rng))};  // 20.30/16
        ips.push_back(ind);
        corpus.planted_benign.push_back(ind);
    }
    for (int i = 0; i < 8; ++i) {
        NetworkIndicator ind{IndicatorKind::kIpv4,
                             format_ipv4(0x4D423700u | low8(rng))};  // 77.66.55/24
        ips.push_back(ind);
        corpus.planted_benign.push_back(ind);
    }
    while (ips.size() < 40) {
        uint32_t ip = random_routable_ip(rng);
        if (corpus.ip_whitelist.contains(ip)) continue;
        ips.push_back(NetworkIndicator{IndicatorKind::kIpv4, format_ipv4(ip)});
    }

    // 20 benign domains under whitelist entries (half exact, half
    // subdomains); 40 malicious ones.
    std::vector<NetworkIndicator> domains;
    for (int i = 0; i < 20; ++i) {
        std::string registrable = "benign" + std::to_string(i) + ".com";
        corpus.domain_whitelist.entries.insert(registrable);
        std::string value = (i % 2 == 0) ? registrable : ("www." + registrable);
        NetworkIndicator ind{IndicatorKind::kDomain, value};
        domains.push_back(ind);
        corpus.planted_benign.push_back(ind);
    }
    const char* tlds[] = {"net", "org", "info", "biz", "cc"};
    std::uniform_int_distribution<size_t> tld_pick(0, std::size(tlds) - 1);
    for (int i = 0; i < 40; ++i) {
        std::string value =
            "mal" + std::to_string(i) + "-c2." + tlds[tld_pick(rng)];
        domains.push_back(NetworkIndicator{IndicatorKind::kDomain, value});
    }

    corpus.planted = ips;
    corpus.planted.insert(corpus.planted.end(), domains.begin(), domains.end());

    // Dedup guard: everything is distinct by construction except the random
    // malicious IPs, which are redrawn on collision.
    {
        std::set<std::string> seen;
        for (auto& ind : corpus.planted) {
            while (!seen.insert(ind.value).second) {
                uint32_t ip = random_routable_ip(rng);
                if (corpus.ip_whitelist.contains(ip)) continue;
                ind.value = format_ipv4(ip);
            }
        }
    }

    // Spread the 100 indicators over distinct lines of a 1,000-line corpus,
    // varying the embedding: bare token, URL, host:port.
    std::vector<size_t> lines(1000);
    for (size_t i = 0; i < lines.size(); ++i) lines[i] = i;
    std::shuffle(lines.begin(), lines.end(), rng);

    std::map<size_t, std::string> planted_at;
    std::uniform_int_distribution<int> form(0, 2);
    for (size_t i = 0; i < corpus.planted.size(); ++i) {
        const auto& ind = corpus.planted[i];
        std::string embedded;
        switch (form(rng)) {
            case 0: embedded = ind.value; break;
            case 1: embedded = "http://" + ind.value + "/gate?q=1"; break;
            default: embedded = ind.value + ":8080"; break;
        }
        planted_at[lines[i]] = embedded;
    }
    // A few near-miss candidates that must not extract.
    planted_at[lines[100]] = "999.1.1.1";
    planted_at[lines[101]] = "10.0.0.300";
    planted_at[lines[102]] = "1.2.3";

    std::ostringstream text;
    for (size_t i = 0; i < 1000; ++i) {
        std::string line = noise_line(rng);
        if (auto it = planted_at.find(i); it != planted_at.end())
            line += " " + it->second + " " + noise_line(rng);
        text << line << '\n';
    }
    corpus.text = text.str();
    return corpus;
}

PdnsStore random_pdns_store(std::mt19937_64& rng, size_t records) {
    PdnsStore store;
    std::uniform_int_distribution<size_t> name_pick(0, records / 4 + 1);
    std::uniform_int_distribution<int64_t> time_pick(1400000000, 1700000000);
    for (size_t i = 0; i < records; ++i) {
        PdnsRecord rec;
        rec.rrname = "host" + std::to_string(name_pick(rng)) + ".zone" +
                     std::to_string(name_pick(rng) % 97) + ".example";
        rec.rdata = format_ipv4(random_routable_ip(rng));
        rec.first_seen = time_pick(rng);
        rec.last_seen = rec.first_seen + (time_pick(rng) % 1000000);
        rec.count = 1 + (i % 13);
        store.add(std::move(rec));
    }
    return store;
}

int run_cli(const std::vector<std::string>& args,
            const std::vector<std::pair<std::string, std::string>>& env) {
    std::ostringstream cmd;
    for (const auto& [key, value] : env) cmd << key << "=" << value << " ";
    cmd << cli_path().string();
    for (const auto& arg : args) cmd << " '" << arg << "'";
    cmd << " >/dev/null 2>&1";
    int status = std::system(cmd.str().c_str());
    if (status < 0) return -1;
    return WEXITSTATUS(status);
}

std::map<std::string, std::string> snapshot_dir(const std::filesystem::path& dir,
                                                const std::vector<std::string>& exclude) {
    std::map<std::string, std::string> out;
    if (!std::filesystem::exists(dir)) return out;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string name = entry.path().filename().string();
        if (std::find(exclude.begin(), exclude.end(), name) != exclude.end()) continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        out[std::filesystem::relative(entry.path(), dir).string()] = ss.str();
    }
    return out;
}

} // namespace fixtures
