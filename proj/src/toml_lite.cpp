#include "toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace nldp::detail {

namespace {

std::string strip(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Removes a trailing comment, respecting double quotes.
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

class ValueParser {
public:
    ValueParser(const std::string& text, int line) : text_(text), line_(line) {}

    TomlValue parse() {
        TomlValue v = parse_value();
        skip_ws();
        if (pos_ != text_.size()) fail("trailing characters after value");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& msg) { throw ParseError(line_, msg); }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    TomlValue parse_value() {
        skip_ws();
        if (pos_ >= text_.size()) fail("missing value");
        TomlValue v;
        v.line = line_;
        const char c = text_[pos_];
        if (c == '[') {
            v.kind = TomlValue::Kind::Array;
            ++pos_;
            skip_ws();
            if (pos_ < text_.size() && text_[pos_] == ']') {
                ++pos_;
                return v;
            }
            while (true) {
                v.items.push_back(parse_value());
                skip_ws();
                if (pos_ >= text_.size()) fail("unterminated array");
                if (text_[pos_] == ',') {
                    ++pos_;
                    skip_ws();
                    if (pos_ < text_.size() && text_[pos_] == ']') {  // trailing comma
                        ++pos_;
                        return v;
                    }
                    continue;
                }
                if (text_[pos_] == ']') {
                    ++pos_;
                    return v;
                }
                fail("expected ',' or ']' in array");
            }
        }
        if (c == '"') {
            v.kind = TomlValue::Kind::String;
            ++pos_;
            while (pos_ < text_.size() && text_[pos_] != '"') v.str += text_[pos_++];
            if (pos_ >= text_.size()) fail("unterminated string");
            ++pos_;
            return v;
        }
        if (text_.compare(pos_, 4, "true") == 0) {
            v.kind = TomlValue::Kind::Boolean;
            v.boolean = true;
            pos_ += 4;
            return v;
        }
        if (text_.compare(pos_, 5, "false") == 0) {
            v.kind = TomlValue::Kind::Boolean;
            v.boolean = false;
            pos_ += 5;
            return v;
        }
        std::size_t end = pos_;
        while (end < text_.size() && text_[end] != ',' && text_[end] != ']' &&
               !std::isspace(static_cast<unsigned char>(text_[end])))
            ++end;
        std::string token = text_.substr(pos_, end - pos_);
        if (!token.empty() && token.front() == '+') token.erase(0, 1);
        const char* first = token.data();
        const char* last = token.data() + token.size();
        double parsed = 0.0;
        const auto [ptr, ec] = std::from_chars(first, last, parsed);
        if (ec != std::errc{} || ptr != last) fail("cannot parse number '" + token + "'");
        v.kind = TomlValue::Kind::Number;
        v.num = parsed;
        pos_ = end;
        return v;
    }

    const std::string& text_;
    int line_;
    std::size_t pos_ = 0;
};

int bracket_balance(const std::string& s) {
    int depth = 0;
    bool quoted = false;
    for (char c : s) {
        if (c == '"') quoted = !quoted;
        if (quoted) continue;
        if (c == '[') ++depth;
        if (c == ']') --depth;
    }
    return depth;
}

}  // namespace

TomlDoc parse_toml(const std::string& text) {
    TomlDoc doc;
    TomlTable* current = nullptr;
    std::string current_name;

    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const int header_line = line_no;
        std::string line = strip(strip_comment(raw));
        if (line.empty()) continue;

        if (line.front() == '[') {
            const bool is_array = line.size() > 1 && line[1] == '[';
            const std::string close = is_array ? "]]" : "]";
            const std::size_t end = line.find(close);
            if (end == std::string::npos || strip(line.substr(end + close.size())) != "")
                throw ParseError(header_line, "malformed section header");
            const std::string name = strip(line.substr(is_array ? 2 : 1, end - (is_array ? 2 : 1)));
            if (name.empty()) throw ParseError(header_line, "empty section name");
            if (is_array) {
                doc.table_arrays[name].push_back(TomlTable{{}, header_line});
                current = &doc.table_arrays[name].back();
            } else {
                if (doc.tables.count(name))
                    throw ParseError(header_line, "duplicate section [" + name + "]");
                doc.tables[name] = TomlTable{{}, header_line};
                current = &doc.tables[name];
            }
            current_name = name;
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(header_line, "expected 'key = value'");
        const std::string key = strip(line.substr(0, eq));
        if (key.empty()) throw ParseError(header_line, "empty key");
        std::string value_text = strip(line.substr(eq + 1));

        // Arrays may continue on following lines until brackets balance.
        while (bracket_balance(value_text) > 0) {
            if (!std::getline(in, raw))
                throw ParseError(header_line, "unterminated array for key '" + key + "'");
            ++line_no;
            value_text += " " + strip(strip_comment(raw));
        }

        if (!current) throw ParseError(header_line, "key '" + key + "' outside any section");
        if (current->has(key))
            throw ParseError(header_line, "duplicate key '" + key + "' in [" + current_name + "]");
        current->entries[key] = ValueParser(value_text, header_line).parse();
    }
    return doc;
}

namespace {

const TomlValue& require(const TomlTable& table, const std::string& section,
                         const std::string& key) {
    const auto it = table.entries.find(key);
    if (it == table.entries.end())
        throw ParseError(table.line, "[" + section + "] missing field '" + key + "'");
    return it->second;
}

[[noreturn]] void wrong_type(const TomlValue& v, const std::string& section,
                             const std::string& key, const char* expected) {
    throw ParseError(v.line, "[" + section + "] field '" + key + "' must be " + expected);
}

}  // namespace

double get_number(const TomlTable& table, const std::string& section, const std::string& key) {
    const auto& v = require(table, section, key);
    if (v.kind != TomlValue::Kind::Number) wrong_type(v, section, key, "a number");
    return v.num;
}

double get_number_or(const TomlTable& table, const std::string& section, const std::string& key,
                     double fallback) {
    if (!table.has(key)) return fallback;
    return get_number(table, section, key);
}

int get_int(const TomlTable& table, const std::string& section, const std::string& key) {
    const double v = get_number(table, section, key);
    const int i = static_cast<int>(std::llround(v));
    if (v != static_cast<double>(i))
        throw ParseError(require(table, section, key).line,
                         "[" + section + "] field '" + key + "' must be an integer");
    return i;
}

std::string get_string(const TomlTable& table, const std::string& section,
                       const std::string& key) {
    const auto& v = require(table, section, key);
    if (v.kind != TomlValue::Kind::String) wrong_type(v, section, key, "a string");
    return v.str;
}

std::vector<double> get_number_array(const TomlTable& table, const std::string& section,
                                     const std::string& key) {
    const auto& v = require(table, section, key);
    if (v.kind != TomlValue::Kind::Array) wrong_type(v, section, key, "an array");
    std::vector<double> out;
    out.reserve(v.items.size());
    for (const auto& item : v.items) {
        if (item.kind != TomlValue::Kind::Number)
            wrong_type(item, section, key, "an array of numbers");
        out.push_back(item.num);
    }
    return out;
}

std::vector<std::vector<double>> get_nested_array(const TomlTable& table,
                                                  const std::string& section,
                                                  const std::string& key) {
    const auto& v = require(table, section, key);
    if (v.kind != TomlValue::Kind::Array) wrong_type(v, section, key, "an array");
    std::vector<std::vector<double>> out;
    for (const auto& row : v.items) {
        if (row.kind != TomlValue::Kind::Array)
            wrong_type(row, section, key, "an array of arrays");
        std::vector<double> r;
        for (const auto& item : row.items) {
            if (item.kind != TomlValue::Kind::Number)
                wrong_type(item, section, key, "numeric rows");
            r.push_back(item.num);
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<int> get_int_array(const TomlTable& table, const std::string& section,
                               const std::string& key) {
    const auto doubles = get_number_array(table, section, key);
    std::vector<int> out;
    out.reserve(doubles.size());
    for (double d : doubles) {
        const int i = static_cast<int>(std::llround(d));
        if (d != static_cast<double>(i))
            throw ParseError(require(table, section, key).line,
                             "[" + section + "] field '" + key + "' must hold integers");
        out.push_back(i);
    }
    return out;
}

}  // namespace nldp::detail
