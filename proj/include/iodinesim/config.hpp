#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace iodinesim {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericSpec {
    double def;
    double min;
    double max;
    const char* doc;
};

struct StringSpec {
    const char* def;
    const char* doc;
};

// Flat registry of dotted keys ("section.name" in the file) with defaults and
// hard ranges. Unknown keys and out-of-range values are rejected by name.
class Config {
public:
    Config();

    static const std::map<std::string, NumericSpec>& numeric_registry();
    static const std::map<std::string, StringSpec>& string_registry();

    double number(const std::string& key) const;
    const std::string& text(const std::string& key) const;
    bool flag(const std::string& key) const { return number(key) != 0.0; }

    // Parses and validates one binding; raw is the textual value.
    void set(const std::string& key, const std::string& raw);
    void set(const std::string& key, double value);
    // "key=value" as passed on the command line.
    void apply_override(const std::string& assignment);

    // TOML-style file: [section] headers, key = value, # comments. Throws
    // ConfigError with the line number on any problem.
    void load_file(const std::string& path);

    std::uint64_t hash() const;
    std::string hash_hex() const;
    // Effective config, one sorted "key = value" per line.
    std::string dump() const;

    // Nearest registered key within edit distance 2 (also matched against the
    // bare name after the dot), or empty.
    static std::string suggest(const std::string& key);

private:
    std::map<std::string, double> numbers_;
    std::map<std::string, std::string> strings_;
};

struct ValidationIssue {
    enum class Severity { warning, error } severity;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    std::string effective;
    bool ok() const;
};

// Non-strict pass over a config file: unknown keys become warnings with a
// nearest-key suggestion, bad values become errors, and the report carries the
// fully resolved config (defaults + accepted bindings).
ValidationReport validate_config_file(const std::string& path);

}  // namespace iodinesim
