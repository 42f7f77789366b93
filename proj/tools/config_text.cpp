#include "config_text.hpp"

#include <fstream>
#include <sstream>

#include "codistill/error.hpp"

namespace codistill::cli {

namespace {
std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string strip_quotes(std::string s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\''))) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}
}  // namespace

std::vector<std::string> split_list(const std::string& raw) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(raw);
    while (std::getline(is, cell, ',')) {
        std::string t = strip_quotes(trim(cell));
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

ConfigText ConfigText::parse_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_string(buf.str(), path.string());
}

ConfigText ConfigText::parse_string(const std::string& text, const std::string& origin) {
    ConfigText cfg;
    cfg.origin_ = origin;
    std::istringstream is(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ParseError(origin + ":" + std::to_string(line_no) +
                                 ": unterminated section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) {
                throw ParseError(origin + ":" + std::to_string(line_no) + ": empty section name");
            }
            cfg.sections_[section];
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError(origin + ":" + std::to_string(line_no) +
                             ": expected 'key = value', got '" + line + "'");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = strip_quotes(trim(line.substr(eq + 1)));
        if (key.empty()) {
            throw ParseError(origin + ":" + std::to_string(line_no) + ": empty key");
        }
        cfg.sections_[section][key] = value;
    }
    return cfg;
}

bool ConfigText::has_section(const std::string& section) const {
    return sections_.count(section) != 0;
}

bool ConfigText::has(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key) != 0;
}

std::string ConfigText::require(const std::string& section, const std::string& key) const {
    if (!has(section, key)) {
        throw ConfigError(origin_ + ": missing required key '" + key + "' in section [" +
                          section + "]");
    }
    return sections_.at(section).at(key);
}

std::string ConfigText::get(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
    return has(section, key) ? sections_.at(section).at(key) : fallback;
}

double ConfigText::parse_double(const std::string& section, const std::string& key,
                                const std::string& raw) const {
    try {
        std::size_t pos = 0;
        double v = std::stod(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw ParseError(origin_ + ": [" + section + "] " + key + " = '" + raw +
                         "' is not a number");
    }
}

double ConfigText::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
    if (!has(section, key)) return fallback;
    return parse_double(section, key, sections_.at(section).at(key));
}

long long ConfigText::get_int(const std::string& section, const std::string& key,
                              long long fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& raw = sections_.at(section).at(key);
    try {
        std::size_t pos = 0;
        long long v = std::stoll(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw ParseError(origin_ + ": [" + section + "] " + key + " = '" + raw +
                         "' is not an integer");
    }
}

bool ConfigText::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& raw = sections_.at(section).at(key);
    if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
    if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
    throw ParseError(origin_ + ": [" + section + "] " + key + " = '" + raw + "' is not a boolean");
}

std::vector<std::string> ConfigText::get_list(const std::string& section,
                                              const std::string& key) const {
    if (!has(section, key)) return {};
    return split_list(sections_.at(section).at(key));
}

std::vector<std::string> ConfigText::section_names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : sections_) out.push_back(name);
    return out;
}

}  // namespace codistill::cli
