#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace cardlv {

/// Plain key=value configuration file: one pair per line, '#' comments and
/// blank lines ignored, whitespace around keys/values trimmed.
class KeyValues {
public:
    static KeyValues load(const std::string& path);
    static KeyValues parse(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::string require_string(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long get_int(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;

    const std::map<std::string, std::string>& raw() const { return values_; }

private:
    std::map<std::string, std::string> values_;
    std::string origin_;
};

} // namespace cardlv
