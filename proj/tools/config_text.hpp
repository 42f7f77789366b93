#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace codistill::cli {

// Minimal TOML-style config reader: [section] headers, key = value pairs,
// '#' comments, and comma-separated lists. Values keep their raw text; typed
// accessors parse on demand and report the file/section/key on failure.
class ConfigText {
public:
    static ConfigText parse_file(const std::filesystem::path& path);
    static ConfigText parse_string(const std::string& text, const std::string& origin);

    bool has_section(const std::string& section) const;
    bool has(const std::string& section, const std::string& key) const;

    std::string require(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const;

    double get_double(const std::string& section, const std::string& key, double fallback) const;
    long long get_int(const std::string& section, const std::string& key, long long fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& section, const std::string& key) const;

    std::vector<std::string> section_names() const;

private:
    std::string origin_;
    std::map<std::string, std::map<std::string, std::string>> sections_;

    double parse_double(const std::string& section, const std::string& key,
                        const std::string& raw) const;
};

std::vector<std::string> split_list(const std::string& raw);

}  // namespace codistill::cli
