#pragma once

#include <map>
#include <string>
#include <vector>

namespace qgbsde::toml {

/// Minimal TOML subset: [section] headers, key = value pairs with string,
/// number, boolean and flat-array values, '#' comments. Enough for the
/// experiment config files; nested tables and dates are rejected.
struct Value {
    enum class Kind { string, number, boolean, array };
    Kind kind = Kind::string;
    std::string str;
    double num = 0.0;
    bool flag = false;
    std::vector<Value> items;

    const std::string& as_string() const;
    double as_number() const;
    long as_integer() const;
    bool as_bool() const;
    const std::vector<Value>& as_array() const;
};

struct Table {
    std::map<std::string, Value> entries;

    bool has(const std::string& key) const { return entries.count(key) != 0; }
    const Value& at(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_number(const std::string& key, double fallback) const;
    long get_integer(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_numbers(const std::string& key) const;
};

struct Document {
    std::map<std::string, Table> sections;

    bool has(const std::string& name) const { return sections.count(name) != 0; }
    const Table& at(const std::string& name) const;
    /// Missing section reads as empty.
    const Table& section(const std::string& name) const;
};

/// Throws std::runtime_error with a line number on malformed input.
Document parse(const std::string& text);
Document parse_file(const std::string& path);

}  // namespace qgbsde::toml
