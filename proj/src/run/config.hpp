#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace pixeltext {

// Flat, dotted-key configuration with a fixed schema: unknown keys are
// rejected, every key has a documented default, and the resolved snapshot is
// echoed into every output directory. Values come from a JSON file (possibly
// nested) plus --set key=value overrides.
class RunConfig {
public:
    RunConfig();

    static RunConfig load_file(const std::string& path);
    void merge_file(const std::string& path);
    void set(const std::string& key, const std::string& value);

    bool get_bool(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    std::vector<std::int64_t> get_int_list(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;
    std::vector<std::string> get_string_list(const std::string& key) const;

    std::size_t get_size(const std::string& key) const;

    // Full key -> value snapshot (defaults included).
    nlohmann::json resolved() const;
    void save(const std::string& path) const;

    static const std::vector<std::string>& known_keys();

private:
    nlohmann::json values_;  // flat object keyed by dotted names

    void assign(const std::string& key, const nlohmann::json& value,
                const std::string& origin);
};

}  // namespace pixeltext
