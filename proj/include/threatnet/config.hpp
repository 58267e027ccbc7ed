#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace threatnet {

/// Run configuration: a JSON document addressed by dot paths
/// (e.g. "rank.damping"). Relative paths resolve against the directory the
/// config file was loaded from.
class Config {
public:
    Config() = default;
    static Config from_file(const std::filesystem::path& path);
    static Config from_json(nlohmann::json j,
                            const std::filesystem::path& base_dir = ".");

    template <typename T>
    T get(const std::string& dot_path, T fallback) const {
        const nlohmann::json* node = find(dot_path);
        if (!node || node->is_null()) return fallback;
        try {
            return node->get<T>();
        } catch (const nlohmann::json::exception&) {
            throw_type_error(dot_path);
        }
        return fallback;
    }

    bool has(const std::string& dot_path) const {
        const nlohmann::json* node = find(dot_path);
        return node != nullptr && !node->is_null();
    }

    /// Resolves a path-valued key against the config's base directory.
    std::optional<std::filesystem::path> get_path(const std::string& dot_path) const;

    /// Sets a value from a CLI override string: parsed as JSON when valid
    /// (numbers, booleans, arrays), stored as a string otherwise.
    void set_override(const std::string& dot_path, const std::string& value);

    const nlohmann::json& root() const { return root_; }
    const std::filesystem::path& base_dir() const { return base_dir_; }

private:
    const nlohmann::json* find(const std::string& dot_path) const;
    [[noreturn]] static void throw_type_error(const std::string& dot_path);

    nlohmann::json root_ = nlohmann::json::object();
    std::filesystem::path base_dir_ = ".";
};

} // namespace threatnet
