#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rdslab/errors.hpp"

namespace rdslab {

/// Plain-text key=value configuration with [section] headers and '#' comments.
/// Keys are flattened to "section.key". Run manifests echo their configuration
/// under a "config." prefix, so a manifest is itself loadable here.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text);

    bool has(const std::string& key) const;
    std::string get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    long get_long(const std::string& key) const;
    long get_long_or(const std::string& key, long fallback) const;
    std::uint64_t get_u64(const std::string& key) const;
    bool get_bool_or(const std::string& key, bool fallback) const;
    std::vector<double> get_double_list(const std::string& key) const;

    void set(const std::string& key, const std::string& value);
    const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }

private:
    std::vector<std::pair<std::string, std::string>> items_;  // insertion order
};

}  // namespace rdslab
