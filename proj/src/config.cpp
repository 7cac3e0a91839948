#include "accel/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "accel/rng.hpp"

namespace accel::cfg {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

Config Config::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_string(buffer.str(), path.string());
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config config;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') {
                std::ostringstream os;
                os << origin << ":" << line_no << ": unterminated section header";
                throw ConfigError(os.str());
            }
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty()) {
                std::ostringstream os;
                os << origin << ":" << line_no << ": empty section name";
                throw ConfigError(os.str());
            }
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            std::ostringstream os;
            os << origin << ":" << line_no << ": expected 'key = value'";
            throw ConfigError(os.str());
        }
        const std::string key = trim(t.substr(0, eq));
        if (key.empty() || section.empty()) {
            std::ostringstream os;
            os << origin << ":" << line_no << ": assignments must live inside a [section]";
            throw ConfigError(os.str(), section + "." + key);
        }
        config.set(section, key, trim(t.substr(eq + 1)));
    }
    return config;
}

void Config::set(const std::string& section, const std::string& key, std::string value) {
    sections_[section][key] = std::move(value);
}

void Config::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    const auto dot = assignment.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
        throw ConfigError("override must look like section.key=value: '" + assignment + "'");
    }
    const std::string section = trim(assignment.substr(0, dot));
    const std::string key = trim(assignment.substr(dot + 1, eq - dot - 1));
    if (section.empty() || key.empty()) {
        throw ConfigError("override must look like section.key=value: '" + assignment + "'");
    }
    set(section, key, trim(assignment.substr(eq + 1)));
}

std::optional<std::string> Config::get(const std::string& section, const std::string& key) const {
    const auto sit = sections_.find(section);
    if (sit == sections_.end()) return std::nullopt;
    const auto kit = sit->second.find(key);
    if (kit == sit->second.end()) return std::nullopt;
    return kit->second;
}

bool Config::has(const std::string& section, const std::string& key) const {
    return get(section, key).has_value();
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    return get(section, key).value_or(fallback);
}

std::string Config::require_string(const std::string& section, const std::string& key) const {
    const auto value = get(section, key);
    if (!value) {
        throw ConfigError("missing required config key '" + section + "." + key + "'",
                          section + "." + key);
    }
    return *value;
}

double Config::require_double(const std::string& section, const std::string& key) const {
    const std::string raw = require_string(section, key);
    try {
        std::size_t used = 0;
        const double value = std::stod(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return value;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + section + "." + key + "' is not a number: '" + raw +
                              "'",
                          section + "." + key);
    }
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
    return has(section, key) ? require_double(section, key) : fallback;
}

std::int64_t Config::get_int(const std::string& section, const std::string& key,
                             std::int64_t fallback) const {
    if (!has(section, key)) return fallback;
    const std::string raw = require_string(section, key);
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), value);
    if (ec != std::errc{} || ptr != raw.data() + raw.size()) {
        throw ConfigError("config key '" + section + "." + key + "' is not an integer: '" + raw +
                              "'",
                          section + "." + key);
    }
    return value;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string raw = require_string(section, key);
    if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
    if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
    throw ConfigError("config key '" + section + "." + key + "' is not a boolean: '" + raw + "'",
                      section + "." + key);
}

std::string Config::canonical() const {
    std::ostringstream os;
    for (const auto& [section, entries] : sections_) {
        for (const auto& [key, value] : entries) {
            os << section << "." << key << "=" << value << "\n";
        }
    }
    return os.str();
}

std::uint64_t Config::hash() const {
    return rng::RngStream::fnv1a(canonical());
}

}  // namespace accel::cfg
