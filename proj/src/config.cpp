#include "cnet/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cnet::config {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, int line, const char* want) {
    throw std::invalid_argument("config: key '" + key + "' (line " + std::to_string(line) + "): cannot parse '" +
                                value + "' as " + want);
}

}  // namespace

Config Config::parse(const std::string& text) {
    Config cfg;
    cfg.text_ = text;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(lineno) + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value, got '" +
                                        line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
        const std::string full = section.empty() ? key : section + "." + key;
        if (cfg.entries_.count(full))
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": duplicate key '" + full + "'");
        cfg.entries_[full] = Entry{value, lineno};
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return parse(os.str());
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

const Config::Entry& Config::entry(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw std::invalid_argument("config: missing required key '" + key + "'");
    return it->second;
}

std::string Config::require_string(const std::string& key) const { return entry(key).value; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? entry(key).value : fallback;
}

int64_t Config::require_int(const std::string& key) const {
    const Entry& e = entry(key);
    try {
        size_t pos = 0;
        const int64_t v = std::stoll(e.value, &pos);
        if (pos != e.value.size()) bad_value(key, e.value, e.line, "an integer");
        return v;
    } catch (const std::invalid_argument&) {
        bad_value(key, e.value, e.line, "an integer");
    } catch (const std::out_of_range&) {
        bad_value(key, e.value, e.line, "an integer");
    }
}

int64_t Config::get_int(const std::string& key, int64_t fallback) const {
    return has(key) ? require_int(key) : fallback;
}

double Config::require_double(const std::string& key) const {
    const Entry& e = entry(key);
    try {
        size_t pos = 0;
        const double v = std::stod(e.value, &pos);
        if (pos != e.value.size()) bad_value(key, e.value, e.line, "a number");
        return v;
    } catch (const std::invalid_argument&) {
        bad_value(key, e.value, e.line, "a number");
    } catch (const std::out_of_range&) {
        bad_value(key, e.value, e.line, "a number");
    }
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? require_double(key) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Entry& e = entry(key);
    if (e.value == "true" || e.value == "1" || e.value == "on") return true;
    if (e.value == "false" || e.value == "0" || e.value == "off") return false;
    bad_value(key, e.value, e.line, "a boolean (true|false)");
}

std::vector<std::string> Config::get_string_list(const std::string& key) const {
    const Entry& e = entry(key);
    std::vector<std::string> out;
    std::istringstream in(e.value);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    if (out.empty()) bad_value(key, e.value, e.line, "a comma-separated list");
    return out;
}

std::vector<int> Config::get_int_list(const std::string& key) const {
    const Entry& e = entry(key);
    std::vector<int> out;
    for (const auto& item : get_string_list(key)) {
        try {
            size_t pos = 0;
            out.push_back(std::stoi(item, &pos));
            if (pos != item.size()) bad_value(key, e.value, e.line, "a list of integers");
        } catch (const std::exception&) {
            bad_value(key, e.value, e.line, "a list of integers");
        }
    }
    return out;
}

std::vector<std::pair<int, double>> Config::get_schedule(const std::string& key) const {
    const Entry& e = entry(key);
    std::vector<std::pair<int, double>> out;
    for (const auto& item : get_string_list(key)) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) bad_value(key, e.value, e.line, "a schedule (epoch:lr,...)");
        try {
            out.emplace_back(std::stoi(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
        } catch (const std::exception&) {
            bad_value(key, e.value, e.line, "a schedule (epoch:lr,...)");
        }
    }
    return out;
}

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace cnet::config
