#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cnet::config {

// Flat typed key=value text with [section] headers and '#' comments.
// Keys are addressed as "section.key". Error messages carry the key and,
// for parse errors, the line number.
class Config {
public:
    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    bool has(const std::string& key) const;

    std::string require_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    int64_t require_int(const std::string& key) const;
    int64_t get_int(const std::string& key, int64_t fallback) const;
    double require_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    std::vector<int> get_int_list(const std::string& key) const;                   // "4,8,8"
    std::vector<std::string> get_string_list(const std::string& key) const;       // comma split
    std::vector<std::pair<int, double>> get_schedule(const std::string& key) const;  // "0:1e-3,100:1e-4"

    const std::string& text() const { return text_; }

private:
    struct Entry {
        std::string value;
        int line = 0;
    };
    const Entry& entry(const std::string& key) const;

    std::string text_;
    std::map<std::string, Entry> entries_;
};

uint64_t fnv1a(const std::string& s);

}  // namespace cnet::config
