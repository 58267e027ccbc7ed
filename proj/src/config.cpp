#include "threatnet/config.hpp"

#include <fstream>

#include "threatnet/common.hpp"

namespace threatnet {

Config Config::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ConfigError("config is not a JSON object: " + path.string());
    auto base = path.parent_path();
    return from_json(std::move(j), base.empty() ? "." : base);
}

Config Config::from_json(nlohmann::json j, const std::filesystem::path& base_dir) {
    Config c;
    c.root_ = std::move(j);
    c.base_dir_ = base_dir;
    return c;
}

const nlohmann::json* Config::find(const std::string& dot_path) const {
    const nlohmann::json* node = &root_;
    size_t start = 0;
    while (start <= dot_path.size()) {
        size_t dot = dot_path.find('.', start);
        std::string key = dot_path.substr(start, dot - start);
        if (!node->is_object()) return nullptr;
        auto it = node->find(key);
        if (it == node->end()) return nullptr;
        node = &*it;
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    return node;
}

void Config::throw_type_error(const std::string& dot_path) {
    throw ConfigError("config key has unexpected type: " + dot_path);
}

std::optional<std::filesystem::path> Config::get_path(const std::string& dot_path) const {
    const nlohmann::json* node = find(dot_path);
    if (!node || node->is_null()) return std::nullopt;
    if (!node->is_string()) throw_type_error(dot_path);
    std::filesystem::path p = node->get<std::string>();
    if (p.is_relative()) p = base_dir_ / p;
    return p;
}

void Config::set_override(const std::string& dot_path, const std::string& value) {
    nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
    if (parsed.is_discarded()) parsed = value;

    nlohmann::json* node = &root_;
    size_t start = 0;
    while (true) {
        size_t dot = dot_path.find('.', start);
        std::string key = dot_path.substr(start, dot - start);
        if (key.empty()) throw ConfigError("invalid override key: " + dot_path);
        if (dot == std::string::npos) {
            (*node)[key] = std::move(parsed);
            return;
        }
        nlohmann::json& child = (*node)[key];
        if (!child.is_object()) child = nlohmann::json::object();
        node = &child;
        start = dot + 1;
    }
}

} // namespace threatnet
