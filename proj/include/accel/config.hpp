#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace accel::cfg {

// Raised for malformed config files, unknown keys, or bad values; key_path is
// "section.key" where applicable.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string message, std::string key_path = {})
        : std::runtime_error(std::move(message)), key_path_(std::move(key_path)) {}
    [[nodiscard]] const std::string& key_path() const { return key_path_; }

private:
    std::string key_path_;
};

// Flat sectioned key=value config:
//
//   [section]
//   key = value        # trailing comments allowed on their own lines
//
// Values are free text up to end of line (so distribution specs fit in one
// value). Later assignments win; --set section.key=value overrides.
class Config {
public:
    static Config parse_file(const std::filesystem::path& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");

    void set(const std::string& section, const std::string& key, std::string value);
    void apply_override(const std::string& assignment);  // "section.key=value"

    [[nodiscard]] std::optional<std::string> get(const std::string& section,
                                                 const std::string& key) const;
    [[nodiscard]] std::string get_string(const std::string& section, const std::string& key,
                                         const std::string& fallback) const;
    [[nodiscard]] std::string require_string(const std::string& section,
                                             const std::string& key) const;
    [[nodiscard]] double get_double(const std::string& section, const std::string& key,
                                    double fallback) const;
    [[nodiscard]] double require_double(const std::string& section, const std::string& key) const;
    [[nodiscard]] std::int64_t get_int(const std::string& section, const std::string& key,
                                       std::int64_t fallback) const;
    [[nodiscard]] bool get_bool(const std::string& section, const std::string& key,
                                bool fallback) const;
    [[nodiscard]] bool has(const std::string& section, const std::string& key) const;

    // Canonical "section.key=value" lines, sorted; the run manifest hashes this.
    [[nodiscard]] std::string canonical() const;
    [[nodiscard]] std::uint64_t hash() const;

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace accel::cfg
