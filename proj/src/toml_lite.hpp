#ifndef NONLOCAL_DP_SRC_TOML_LITE_HPP
#define NONLOCAL_DP_SRC_TOML_LITE_HPP

#include "nonlocal_dp/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace nldp::detail {

/// Minimal structured-text reader: [section] and [[section.array]] headers,
/// key = value entries, values being numbers, quoted strings, booleans, or
/// (nested) arrays. Arrays may span lines. '#' starts a comment.
struct TomlValue {
    enum class Kind { Number, String, Boolean, Array };
    Kind kind = Kind::Number;
    double num = 0.0;
    std::string str;
    bool boolean = false;
    std::vector<TomlValue> items;
    int line = 0;
};

struct TomlTable {
    std::map<std::string, TomlValue> entries;
    int line = 0;

    bool has(const std::string& key) const { return entries.count(key) != 0; }
};

struct TomlDoc {
    std::map<std::string, TomlTable> tables;
    std::map<std::string, std::vector<TomlTable>> table_arrays;
};

TomlDoc parse_toml(const std::string& text);

// Typed getters; every failure throws ParseError naming the field.
double get_number(const TomlTable& table, const std::string& section, const std::string& key);
double get_number_or(const TomlTable& table, const std::string& section, const std::string& key,
                     double fallback);
int get_int(const TomlTable& table, const std::string& section, const std::string& key);
std::string get_string(const TomlTable& table, const std::string& section, const std::string& key);
std::vector<double> get_number_array(const TomlTable& table, const std::string& section,
                                     const std::string& key);
std::vector<std::vector<double>> get_nested_array(const TomlTable& table,
                                                  const std::string& section,
                                                  const std::string& key);
std::vector<int> get_int_array(const TomlTable& table, const std::string& section,
                               const std::string& key);

}  // namespace nldp::detail

#endif
