#pragma once
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"

namespace mstein {

namespace detail {

inline std::string strip(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

// Flat key = value pairs grouped under [section] headers, one pair per line.
// '#' starts a comment anywhere in a line. Parse and lookup failures raise
// ConfigError, which the command-line driver maps to exit code 2.
struct Config {
    std::map<std::string, std::map<std::string, std::string>> sections;

    bool has(const std::string& sec, const std::string& key) const {
        auto it = sections.find(sec);
        return it != sections.end() && it->second.count(key) > 0;
    }

    const std::string& get(const std::string& sec, const std::string& key) const {
        auto it = sections.find(sec);
        if (it == sections.end()) throw ConfigError("config: missing section [" + sec + "]");
        auto jt = it->second.find(key);
        if (jt == it->second.end())
            throw ConfigError("config: missing key '" + key + "' in [" + sec + "]");
        return jt->second;
    }

    std::string get_or(const std::string& sec, const std::string& key,
                       const std::string& def) const {
        return has(sec, key) ? get(sec, key) : def;
    }

    double num(const std::string& sec, const std::string& key) const {
        return to_num(sec, key, get(sec, key));
    }

    double num_or(const std::string& sec, const std::string& key, double def) const {
        return has(sec, key) ? num(sec, key) : def;
    }

    long long integer(const std::string& sec, const std::string& key) const {
        const double v = num(sec, key);
        const long long n = static_cast<long long>(v);
        if (static_cast<double>(n) != v)
            throw ConfigError("config: [" + sec + "] " + key + " must be an integer");
        return n;
    }

    long long integer_or(const std::string& sec, const std::string& key, long long def) const {
        return has(sec, key) ? integer(sec, key) : def;
    }

    std::uint64_t uint(const std::string& sec, const std::string& key) const {
        const std::string& s = get(sec, key);
        errno = 0;
        char* end = nullptr;
        const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
        if (errno != 0 || end == s.c_str() || *end != '\0' || s[0] == '-')
            throw ConfigError("config: [" + sec + "] " + key +
                              " must be an unsigned integer, got '" + s + "'");
        return v;
    }

    // Whitespace-separated list of numbers, e.g. "0 0 1".
    std::vector<double> numbers(const std::string& sec, const std::string& key) const {
        std::istringstream in(get(sec, key));
        std::vector<double> out;
        std::string tok;
        while (in >> tok) out.push_back(to_num(sec, key, tok));
        if (out.empty()) throw ConfigError("config: [" + sec + "] " + key + " is empty");
        return out;
    }

  private:
    static double to_num(const std::string& sec, const std::string& key, const std::string& s) {
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (errno != 0 || end == s.c_str() || *end != '\0')
            throw ConfigError("config: [" + sec + "] " + key + " is not a number, got '" + s +
                              "'");
        return v;
    }
};

inline Config parse_config_text(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::strip(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                throw ConfigError("config: malformed section header at line " +
                                  std::to_string(lineno));
            section = detail::strip(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("config: empty section name at line " + std::to_string(lineno));
            cfg.sections[section];  // a section may legitimately stay empty
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key = value at line " + std::to_string(lineno));
        if (section.empty())
            throw ConfigError("config: key outside any [section] at line " +
                              std::to_string(lineno));
        const std::string key = detail::strip(line.substr(0, eq));
        const std::string val = detail::strip(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config: empty key at line " + std::to_string(lineno));
        if (!cfg.sections[section].emplace(key, val).second)
            throw ConfigError("config: duplicate key '" + key + "' in [" + section + "]");
    }
    return cfg;
}

inline Config parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace mstein
