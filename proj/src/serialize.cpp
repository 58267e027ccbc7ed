#include "threatnet/serialize.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "threatnet/common.hpp"

namespace threatnet {

using nlohmann::json;

namespace {

json indicator_to_json(const NetworkIndicator& ind) {
    return json{{"kind", to_string(ind.kind)}, {"value", ind.value}};
}

NetworkIndicator indicator_from_json(const json& j) {
    std::string kind = j.at("kind").get<std::string>();
    std::string value = j.at("value").get<std::string>();
    auto ind = NetworkIndicator::parse(
        kind == "ip" ? IndicatorKind::kIpv4 : IndicatorKind::kDomain, value);
    if (!ind) throw ConfigError("invalid indicator in artifact: " + value);
    return *ind;
}

std::optional<DropReason> drop_reason_from_string(std::string_view s) {
    for (DropReason r :
         {DropReason::kMalformedIp, DropReason::kMalformedDomain, DropReason::kNonAscii,
          DropReason::kNonRoutable, DropReason::kWhitelistedDomain,
          DropReason::kWhitelistedIp}) {
        if (s == to_string(r)) return r;
    }
    return std::nullopt;
}

// Threat-network witness encoding: sample hashes appear verbatim,
// resolution intermediaries as "dns:<key>", a direct resolution as "dns".
json witnesses_to_json(const ThreatNetwork::Edge& e) {
    json arr = json::array();
    for (const auto& s : e.sample_witnesses) arr.push_back(s);
    for (const auto& r : e.resolution_witnesses) arr.push_back("dns:" + r);
    if (e.direct_resolution) arr.push_back("dns");
    return arr;
}

const char* network_edge_kind(const ThreatNetwork::Edge& e) {
    bool res = e.direct_resolution || !e.resolution_witnesses.empty();
    bool cooc = !e.sample_witnesses.empty();
    if (res && cooc) return "mixed";
    if (res) return "resolution";
    return "cooccurrence";
}

} // namespace

std::string extraction_to_json(const std::vector<ExtractionResult>& results,
                               const std::map<std::string, std::string>& families) {
    json out;
    out["results"] = json::array();
    for (const auto& r : results) {
        json jr;
        jr["sample"] = r.sample.hash;
        // Group sources per indicator value for compactness.
        std::map<NetworkIndicator, std::vector<std::string>> grouped;
        for (const auto& [ind, src] : r.indicators)
            grouped[ind].push_back(to_string(src));
        json inds = json::array();
        for (const auto& [ind, sources] : grouped) {
            json ji = indicator_to_json(ind);
            ji["sources"] = sources;
            inds.push_back(std::move(ji));
        }
        jr["indicators"] = std::move(inds);
        json dropped = json::object();
        for (const auto& [reason, count] : r.dropped)
            dropped[to_string(reason)] = count;
        jr["dropped"] = std::move(dropped);
        out["results"].push_back(std::move(jr));
    }
    out["families"] = families;
    return out.dump(2) + "\n";
}

void extraction_from_json(const std::string& text, std::vector<ExtractionResult>& results,
                          std::map<std::string, std::string>& families) {
    json j = json::parse(text);
    results.clear();
    families.clear();
    for (const auto& jr : j.at("results")) {
        ExtractionResult r;
        auto sample = SampleId::parse(jr.at("sample").get<std::string>());
        if (!sample) throw ConfigError("invalid sample hash in extraction artifact");
        r.sample = *sample;
        for (const auto& ji : jr.at("indicators")) {
            NetworkIndicator ind = indicator_from_json(ji);
            for (const auto& src : ji.at("sources")) {
                auto s = source_from_string(src.get<std::string>());
                if (s) r.indicators.emplace(ind, *s);
            }
        }
        if (jr.contains("dropped"))
            for (const auto& [key, value] : jr.at("dropped").items())
                if (auto reason = drop_reason_from_string(key))
                    r.dropped[*reason] = value.get<uint64_t>();
        results.push_back(std::move(r));
    }
    if (j.contains("families"))
        families = j.at("families").get<std::map<std::string, std::string>>();
}

std::string enrichment_to_json(const EnrichResult& enrichment) {
    json out;
    json inds = json::array();
    for (const auto& ind : enrichment.enriched) inds.push_back(indicator_to_json(ind));
    out["indicators"] = std::move(inds);
    json edges = json::array();
    for (const auto& [dom, ip] : enrichment.resolution_edges)
        edges.push_back(json::array({dom, ip}));
    out["resolution_edges"] = std::move(edges);
    out["rejected_by_whitelist"] = enrichment.rejected_by_whitelist;
    return out.dump(2) + "\n";
}

EnrichResult enrichment_from_json(const std::string& text) {
    json j = json::parse(text);
    EnrichResult out;
    for (const auto& ji : j.at("indicators"))
        out.enriched.insert(indicator_from_json(ji));
    for (const auto& je : j.at("resolution_edges"))
        out.resolution_edges.emplace(je.at(0).get<std::string>(),
                                     je.at(1).get<std::string>());
    out.rejected_by_whitelist = j.value("rejected_by_whitelist", uint64_t{0});
    return out;
}

std::string hetero_to_json(const HeteroGraph& graph) {
    json out;
    out["type"] = "hetero";
    json nodes = json::array();
    for (uint32_t v = 0; v < graph.node_count(); ++v) {
        json jn{{"id", v},
                {"kind", to_string(graph.nodes[v].kind)},
                {"key", graph.nodes[v].key}};
        if (!graph.attrs[v].family.empty()) jn["family"] = graph.attrs[v].family;
        if (graph.attrs[v].sources) {
            json srcs = json::array();
            if (graph.attrs[v].sources & static_cast<uint8_t>(Source::kStatic))
                srcs.push_back("static");
            if (graph.attrs[v].sources & static_cast<uint8_t>(Source::kDynamic))
                srcs.push_back("dynamic");
            jn["sources"] = std::move(srcs);
        }
        nodes.push_back(std::move(jn));
    }
    out["nodes"] = std::move(nodes);
    json edges = json::array();
    for (const auto& e : graph.edges)
        edges.push_back(json{{"a", e.a},
                             {"b", e.b},
                             {"w", 1},
                             {"kind", e.kind == HeteroEdgeKind::kObserved
                                          ? "observed"
                                          : "resolution"},
                             {"witnesses", json::array()}});
    out["edges"] = std::move(edges);
    return out.dump(2) + "\n";
}

HeteroGraph hetero_from_json(const std::string& text) {
    json j = json::parse(text);
    HeteroGraph g;
    for (const auto& jn : j.at("nodes")) {
        auto kind = node_kind_from_string(jn.at("kind").get<std::string>());
        if (!kind) throw ConfigError("invalid node kind in hetero artifact");
        uint32_t v = g.intern(NodeId{*kind, jn.at("key").get<std::string>()});
        if (jn.contains("family")) g.attrs[v].family = jn.at("family").get<std::string>();
        if (jn.contains("sources"))
            for (const auto& s : jn.at("sources"))
                if (auto src = source_from_string(s.get<std::string>()))
                    g.attrs[v].sources |= static_cast<uint8_t>(*src);
    }
    for (const auto& je : j.at("edges")) {
        std::string kind = je.at("kind").get<std::string>();
        g.add_edge(je.at("a").get<uint32_t>(), je.at("b").get<uint32_t>(),
                   kind == "observed" ? HeteroEdgeKind::kObserved
                                      : HeteroEdgeKind::kResolution);
    }
    return g;
}

std::string network_to_json(const ThreatNetwork& tn) {
    json out;
    out["type"] = "threatnet";
    out["flavor"] = to_string(tn.flavor);
    json nodes = json::array();
    for (uint32_t v = 0; v < tn.node_count(); ++v)
        nodes.push_back(json{{"id", v},
                             {"kind", to_string(tn.nodes[v].kind)},
                             {"key", tn.nodes[v].key}});
    out["nodes"] = std::move(nodes);
    json edges = json::array();
    for (const auto& e : tn.edges)
        edges.push_back(json{{"a", e.a},
                             {"b", e.b},
                             {"w", e.weight},
                             {"kind", network_edge_kind(e)},
                             {"witnesses", witnesses_to_json(e)}});
    out["edges"] = std::move(edges);
    return out.dump(2) + "\n";
}

ThreatNetwork network_from_json(const std::string& text) {
    json j = json::parse(text);
    ThreatNetwork tn;
    auto flavor = flavor_from_string(j.value("flavor", "combined"));
    tn.flavor = flavor.value_or(Flavor::kCombined);
    for (const auto& jn : j.at("nodes")) {
        auto kind = node_kind_from_string(jn.at("kind").get<std::string>());
        if (!kind) throw ConfigError("invalid node kind in network artifact");
        tn.intern(NodeId{*kind, jn.at("key").get<std::string>()});
    }
    for (const auto& je : j.at("edges")) {
        auto& e = tn.edge_between(je.at("a").get<uint32_t>(), je.at("b").get<uint32_t>());
        e.weight = je.at("w").get<double>();
        if (je.contains("witnesses")) {
            for (const auto& w : je.at("witnesses")) {
                std::string s = w.get<std::string>();
                if (s == "dns")
                    e.direct_resolution = true;
                else if (s.starts_with("dns:"))
                    e.resolution_witnesses.push_back(s.substr(4));
                else
                    e.sample_witnesses.push_back(s);
            }
        }
    }
    tn.finalize();
    return tn;
}

std::string partition_to_json(const ThreatNetwork& tn, const Partition& partition,
                              const SplitResult& splits) {
    json out;
    out["resolution"] = partition.resolution;
    out["modularity"] = partition.modularity;
    json comms = json::array();
    auto groups = partition.groups();
    for (uint32_t c = 0; c < groups.size(); ++c) {
        json members = json::array();
        for (uint32_t v : groups[c]) members.push_back(tn.nodes[v].key);
        comms.push_back(json{{"id", c}, {"nodes", std::move(members)}});
    }
    out["communities"] = std::move(comms);
    json bridges = json::array();
    for (const auto& b : splits.bridges)
        bridges.push_back(json{{"a", b.a.key}, {"b", b.b.key}, {"w", b.weight}});
    out["bridges"] = std::move(bridges);
    return out.dump(2) + "\n";
}

Partition partition_from_json(const std::string& text, const ThreatNetwork& tn) {
    json j = json::parse(text);
    Partition part;
    part.resolution = j.value("resolution", 1.0);
    part.modularity = j.value("modularity", 0.0);
    part.assignment.assign(tn.node_count(), 0);
    std::vector<bool> seen(tn.node_count(), false);
    uint32_t max_comm = 0;
    for (const auto& jc : j.at("communities")) {
        uint32_t c = jc.at("id").get<uint32_t>();
        max_comm = std::max(max_comm, c + 1);
        for (const auto& key : jc.at("nodes")) {
            std::string k = key.get<std::string>();
            std::optional<uint32_t> v;
            for (NodeKind kind : {NodeKind::kIp, NodeKind::kDomain, NodeKind::kSample})
                if ((v = tn.find(NodeId{kind, k}))) break;
            if (!v) throw ConfigError("partition references unknown node: " + k);
            part.assignment[*v] = c;
            seen[*v] = true;
        }
    }
    for (bool s : seen)
        if (!s) throw ConfigError("partition does not cover the network");
    part.community_count = max_comm;
    return part;
}

std::string tag_report_to_json(const ThreatNetwork& tn, const TagReport& report) {
    json out;

    auto summary_to_json = [](const CommunitySummary& s) {
        json js;
        js["community"] = s.community;
        js["events"] = json{{"spam", s.events.spam},
                            {"pc_malware", s.events.pc_malware},
                            {"phishing", s.events.phishing},
                            {"probing", s.events.probing}};
        js["shares"] = json{{"spam", s.spam_share},
                            {"pc_malware", s.pc_share},
                            {"phishing", s.phishing_share},
                            {"probing", s.probing_share}};
        json fams = json::array();
        for (const auto& [family, hits] : s.top_families)
            fams.push_back(json{{"family", family}, {"hits", hits}});
        js["top_families"] = std::move(fams);
        json samples = json::array();
        for (const auto& [sample, hits] : s.top_samples)
            samples.push_back(json{{"sample", sample}, {"hits", hits}});
        js["top_samples"] = std::move(samples);
        return js;
    };

    json tagged = json::array();
    for (const auto& [v, tags] : report.node_tags) {
        json jt = json::array();
        for (const auto& t : tags) {
            json tag{{"activity", to_string(t.activity)}};
            if (t.activity == Activity::kPcMalware) {
                tag["sample"] = t.pc_sample;
                tag["family"] = t.pc_family;
            }
            jt.push_back(std::move(tag));
        }
        tagged.push_back(json{{"key", tn.nodes[v].key}, {"tags", std::move(jt)}});
    }

    out["overall"] = summary_to_json(report.overall);
    out["tagged_nodes"] = std::move(tagged);
    json comms = json::array();
    for (const auto& s : report.communities) comms.push_back(summary_to_json(s));
    out["communities"] = std::move(comms);
    return out.dump(2) + "\n";
}

void write_family_csv(std::ostream& out, const TagReport& report, size_t k) {
    out << "family,hits\n";
    for (const auto& [family, hits] : family_hit_table(report, k))
        out << family << ',' << hits << '\n';
}

namespace {

const char* kind_color(NodeKind kind) {
    switch (kind) {
        case NodeKind::kSample: return "gray70";
        case NodeKind::kIp: return "lightcoral";
        case NodeKind::kDomain: return "lightskyblue";
    }
    return "white";
}

// Deterministic palette for family coloring.
const char* family_color(const std::string& family) {
    static const char* palette[] = {"gold",      "palegreen",  "plum",
                                    "orange",    "cyan3",      "salmon",
                                    "steelblue", "darkseagreen"};
    size_t h = std::hash<std::string>{}(family);
    return palette[h % (sizeof(palette) / sizeof(palette[0]))];
}

std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

} // namespace

std::string hetero_to_dot(const HeteroGraph& graph) {
    std::ostringstream out;
    out << "graph threatnet {\n  node [style=filled];\n";
    for (uint32_t v = 0; v < graph.node_count(); ++v) {
        const auto& id = graph.nodes[v];
        const auto& attr = graph.attrs[v];
        const char* color = (id.kind == NodeKind::kSample && !attr.family.empty())
                                ? family_color(attr.family)
                                : kind_color(id.kind);
        out << "  n" << v << " [label=\"" << dot_escape(id.key) << "\", fillcolor=\""
            << color << "\", shape="
            << (id.kind == NodeKind::kSample ? "box" : "ellipse") << "];\n";
    }
    for (const auto& e : graph.edges)
        out << "  n" << e.a << " -- n" << e.b
            << (e.kind == HeteroEdgeKind::kResolution ? " [style=dashed];\n" : ";\n");
    out << "}\n";
    return out.str();
}

std::string network_to_dot(const ThreatNetwork& tn) {
    std::ostringstream out;
    out << "graph threatnet_" << to_string(tn.flavor)
        << " {\n  node [style=filled];\n";
    for (uint32_t v = 0; v < tn.node_count(); ++v) {
        const auto& id = tn.nodes[v];
        out << "  n" << v << " [label=\"" << dot_escape(id.key) << "\", fillcolor=\""
            << kind_color(id.kind) << "\"];\n";
    }
    char buf[32];
    for (const auto& e : tn.edges) {
        std::snprintf(buf, sizeof(buf), "%.12g", e.weight);
        out << "  n" << e.a << " -- n" << e.b << " [weight=" << buf << ", label=\""
            << buf << "\"];\n";
    }
    out << "}\n";
    return out.str();
}

std::string hetero_to_graphml(const HeteroGraph& graph) {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
        << "  <key id=\"kind\" for=\"node\" attr.name=\"kind\" attr.type=\"string\"/>\n"
        << "  <key id=\"key\" for=\"node\" attr.name=\"key\" attr.type=\"string\"/>\n"
        << "  <key id=\"family\" for=\"node\" attr.name=\"family\" attr.type=\"string\"/>\n"
        << "  <key id=\"ekind\" for=\"edge\" attr.name=\"kind\" attr.type=\"string\"/>\n"
        << "  <graph id=\"G\" edgedefault=\"undirected\">\n";
    for (uint32_t v = 0; v < graph.node_count(); ++v) {
        out << "    <node id=\"n" << v << "\"><data key=\"kind\">"
            << to_string(graph.nodes[v].kind) << "</data><data key=\"key\">"
            << xml_escape(graph.nodes[v].key) << "</data>";
        if (!graph.attrs[v].family.empty())
            out << "<data key=\"family\">" << xml_escape(graph.attrs[v].family)
                << "</data>";
        out << "</node>\n";
    }
    for (size_t i = 0; i < graph.edges.size(); ++i) {
        const auto& e = graph.edges[i];
        out << "    <edge id=\"e" << i << "\" source=\"n" << e.a << "\" target=\"n"
            << e.b << "\"><data key=\"ekind\">"
            << (e.kind == HeteroEdgeKind::kObserved ? "observed" : "resolution")
            << "</data></edge>\n";
    }
    out << "  </graph>\n</graphml>\n";
    return out.str();
}

std::string network_to_graphml(const ThreatNetwork& tn) {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
        << "  <key id=\"kind\" for=\"node\" attr.name=\"kind\" attr.type=\"string\"/>\n"
        << "  <key id=\"key\" for=\"node\" attr.name=\"key\" attr.type=\"string\"/>\n"
        << "  <key id=\"w\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n"
        << "  <key id=\"ekind\" for=\"edge\" attr.name=\"kind\" attr.type=\"string\"/>\n"
        << "  <graph id=\"G\" edgedefault=\"undirected\">\n";
    for (uint32_t v = 0; v < tn.node_count(); ++v)
        out << "    <node id=\"n" << v << "\"><data key=\"kind\">"
            << to_string(tn.nodes[v].kind) << "</data><data key=\"key\">"
            << xml_escape(tn.nodes[v].key) << "</data></node>\n";
    char buf[32];
    for (size_t i = 0; i < tn.edges.size(); ++i) {
        const auto& e = tn.edges[i];
        std::snprintf(buf, sizeof(buf), "%.12g", e.weight);
        out << "    <edge id=\"e" << i << "\" source=\"n" << e.a << "\" target=\"n"
            << e.b << "\"><data key=\"w\">" << buf << "</data><data key=\"ekind\">"
            << network_edge_kind(e) << "</data></edge>\n";
    }
    out << "  </graph>\n</graphml>\n";
    return out.str();
}

std::vector<AnalysisReport> load_reports_jsonl(const std::filesystem::path& path,
                                               ReportParseStats& stats) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open reports file: " + path.string());
    std::vector<AnalysisReport> reports;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            ++stats.malformed;
            continue;
        }
        auto sample_it = j.find("sample");
        auto source_it = j.find("source");
        if (sample_it == j.end() || source_it == j.end() || !sample_it->is_string() ||
            !source_it->is_string()) {
            ++stats.malformed;
            continue;
        }
        auto sample = SampleId::parse(sample_it->get<std::string>());
        auto source = source_from_string(source_it->get<std::string>());
        if (!sample || !source) {
            ++stats.malformed;
            continue;
        }
        AnalysisReport report;
        report.sample = std::move(*sample);
        report.source = *source;
        if (auto it = j.find("text"); it != j.end() && it->is_string())
            report.text = it->get<std::string>();
        if (auto it = j.find("fields"); it != j.end() && it->is_object()) {
            for (const auto& [name, values] : it->items()) {
                if (values.is_string()) {
                    report.fields[name].push_back(values.get<std::string>());
                } else if (values.is_array()) {
                    for (const auto& v : values)
                        if (v.is_string())
                            report.fields[name].push_back(v.get<std::string>());
                }
            }
        }
        if (auto it = j.find("family"); it != j.end() && it->is_string())
            report.family = it->get<std::string>();
        if (report.text.empty() && report.fields.empty()) {
            ++stats.malformed;
            continue;
        }
        reports.push_back(std::move(report));
        ++stats.parsed;
    }
    return reports;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write file: " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace threatnet
