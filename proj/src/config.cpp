#include "rdslab/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace rdslab {

namespace {

std::string strip(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line, section;
    bool manifest_mode = text.find("config.") != std::string::npos &&
                         text.find("manifest_version") != std::string::npos;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = strip(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = strip(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw config_error("config: expected key=value: " + line);
        std::string key = strip(line.substr(0, eq));
        std::string val = strip(line.substr(eq + 1));
        if (!section.empty()) key = section + "." + key;
        if (manifest_mode) {
            // manifests echo the original configuration under "config."
            if (key.rfind("config.", 0) == 0)
                cfg.set(key.substr(7), val);
            continue;
        }
        cfg.set(key, val);
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
}

void Config::set(const std::string& key, const std::string& value) {
    for (auto& kv : items_)
        if (kv.first == key) {
            kv.second = value;
            return;
        }
    items_.emplace_back(key, value);
}

bool Config::has(const std::string& key) const {
    return std::any_of(items_.begin(), items_.end(),
                       [&](const auto& kv) { return kv.first == key; });
}

std::string Config::get(const std::string& key) const {
    for (const auto& kv : items_)
        if (kv.first == key) return kv.second;
    throw config_error("config: missing required key: " + key);
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
}

double Config::get_double(const std::string& key) const {
    try {
        return std::stod(get(key));
    } catch (const std::invalid_argument&) {
        throw config_error("config: key " + key + " is not a number");
    }
}

double Config::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long Config::get_long(const std::string& key) const {
    try {
        return std::stol(get(key));
    } catch (const std::invalid_argument&) {
        throw config_error("config: key " + key + " is not an integer");
    }
}

long Config::get_long_or(const std::string& key, long fallback) const {
    return has(key) ? get_long(key) : fallback;
}

std::uint64_t Config::get_u64(const std::string& key) const {
    try {
        return std::stoull(get(key));
    } catch (const std::invalid_argument&) {
        throw config_error("config: key " + key + " is not an unsigned integer");
    }
}

bool Config::get_bool_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    std::string v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw config_error("config: key " + key + " is not a boolean");
}

std::vector<double> Config::get_double_list(const std::string& key) const {
    std::string v = get(key);
    for (char& c : v)
        if (c == ',') c = ' ';
    std::istringstream is(v);
    std::vector<double> out;
    double x;
    while (is >> x) out.push_back(x);
    if (out.empty()) throw config_error("config: key " + key + " holds no numbers");
    return out;
}

}  // namespace rdslab
