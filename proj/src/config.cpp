#include "camrl/config.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "camrl/rng.hpp"

namespace camrl::cfg {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    Config out;
    parse_into(ss.str(), std::filesystem::path(path).parent_path().string(), 0, out);
    return out;
}

Config Config::parse_string(const std::string& text, const std::string& base_dir) {
    Config out;
    parse_into(text, base_dir, 0, out);
    return out;
}

void Config::parse_into(const std::string& text, const std::string& base_dir, int depth,
                        Config& out) {
    if (depth > 16) throw ConfigError("config include depth exceeded (cycle?)");
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::size_t hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
        line = trim(line);
        if (line.empty()) continue;
        if (line.rfind("include ", 0) == 0) {
            std::string rel = trim(line.substr(8));
            std::filesystem::path inc = std::filesystem::path(base_dir) / rel;
            std::ifstream sub(inc);
            if (!sub) throw ConfigError("cannot open included config: " + inc.string());
            std::stringstream ss;
            ss << sub.rdbuf();
            parse_into(ss.str(), inc.parent_path().string(), depth + 1, out);
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + " is not 'key = value': " +
                              line);
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty config key at line " + std::to_string(lineno));
        out.values_[key] = value;
    }
}

std::string Config::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key: " + key);
    return it->second;
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not a number: " + it->second);
    }
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        long long v = std::stoll(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not an integer: " + it->second);
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
    if (it->second == "false" || it->second == "0" || it->second == "no") return false;
    throw ConfigError("config key '" + key + "' is not a boolean: " + it->second);
}

std::vector<std::string> Config::unknown_keys(const std::set<std::string>& allowed) const {
    std::vector<std::string> out;
    for (const auto& [k, _] : values_) {
        if (!allowed.count(k)) out.push_back(k);
    }
    return out;
}

std::string Config::canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) {
        out += k;
        out += "=";
        out += v;
        out += "\n";
    }
    return out;
}

std::uint64_t Config::hash() const { return fnv1a64(canonical()); }

std::string Config::hash_hex() const {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
}

}  // namespace camrl::cfg
