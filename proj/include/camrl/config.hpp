#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace camrl::cfg {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat `key = value` file with `#` comments and an `include <path>` directive
// (paths relative to the including file). Later assignments override earlier
// ones, so includes act as shared defaults.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& base_dir = ".");

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    // Keys present in the file but not in `allowed` (typo detection).
    std::vector<std::string> unknown_keys(const std::set<std::string>& allowed) const;

    // Canonical sorted key=value text; the config hash stamps artifacts.
    std::string canonical() const;
    std::uint64_t hash() const;
    std::string hash_hex() const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    static void parse_into(const std::string& text, const std::string& base_dir, int depth,
                           Config& out);
    std::map<std::string, std::string> values_;
};

}  // namespace camrl::cfg
