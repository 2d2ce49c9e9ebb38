#include "cardlv/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cardlv/errors.hpp"

namespace cardlv {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

KeyValues KeyValues::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("config: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
}

KeyValues KeyValues::parse(const std::string& text, const std::string& origin) {
    KeyValues kv;
    kv.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw LoadError("config: missing '=' at " + origin + ":" + std::to_string(lineno));
        const std::string key = trim(t.substr(0, eq));
        if (key.empty())
            throw LoadError("config: empty key at " + origin + ":" + std::to_string(lineno));
        kv.values_[key] = trim(t.substr(eq + 1));
    }
    return kv;
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::string KeyValues::require_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end())
        throw LoadError("config: missing required key '" + key + "' in " + origin_);
    return it->second;
}

double KeyValues::get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str() || *end != '\0')
        throw LoadError("config: key '" + key + "' is not a number: " + it->second);
    return v;
}

long KeyValues::get_int(const std::string& key, long fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    char* end = nullptr;
    const long v = std::strtol(it->second.c_str(), &end, 10);
    if (end == it->second.c_str() || *end != '\0')
        throw LoadError("config: key '" + key + "' is not an integer: " + it->second);
    return v;
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw LoadError("config: key '" + key + "' is not a boolean: " + v);
}

std::uint64_t KeyValues::get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
    if (end == it->second.c_str() || *end != '\0')
        throw LoadError("config: key '" + key + "' is not an unsigned integer: " + it->second);
    return static_cast<std::uint64_t>(v);
}

} // namespace cardlv
