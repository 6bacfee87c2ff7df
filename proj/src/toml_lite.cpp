#include "qgbsde/toml_lite.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qgbsde::toml {

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
    throw std::runtime_error("toml: line " + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Strips a trailing comment, respecting double-quoted strings.
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

Value parse_scalar(const std::string& raw, int line) {
    const std::string s = trim(raw);
    if (s.empty()) fail(line, "empty value");
    Value v;
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"') fail(line, "unterminated string");
        v.kind = Value::Kind::string;
        std::string out;
        for (size_t i = 1; i + 1 < s.size(); ++i) {
            if (s[i] == '\\' && i + 2 < s.size()) {
                ++i;
                switch (s[i]) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default: fail(line, "unsupported escape");
                }
            } else {
                out += s[i];
            }
        }
        v.str = out;
        return v;
    }
    if (s == "true" || s == "false") {
        v.kind = Value::Kind::boolean;
        v.flag = (s == "true");
        return v;
    }
    try {
        size_t used = 0;
        v.num = std::stod(s, &used);
        if (used != s.size()) fail(line, "trailing junk after number '" + s + "'");
        v.kind = Value::Kind::number;
        return v;
    } catch (const std::invalid_argument&) {
        fail(line, "unrecognized value '" + s + "'");
    }
}

Value parse_value(const std::string& raw, int line) {
    const std::string s = trim(raw);
    if (!s.empty() && s.front() == '[') {
        if (s.back() != ']') fail(line, "unterminated array");
        Value v;
        v.kind = Value::Kind::array;
        const std::string body = s.substr(1, s.size() - 2);
        std::string item;
        int depth = 0;
        bool quoted = false;
        for (char c : body) {
            if (c == '"') quoted = !quoted;
            if (!quoted) {
                if (c == '[') ++depth;
                if (c == ']') --depth;
                if (c == ',' && depth == 0) {
                    if (!trim(item).empty()) v.items.push_back(parse_value(item, line));
                    item.clear();
                    continue;
                }
            }
            item += c;
        }
        if (!trim(item).empty()) v.items.push_back(parse_value(item, line));
        return v;
    }
    return parse_scalar(s, line);
}

bool valid_key(const std::string& key) {
    if (key.empty()) return false;
    for (char c : key) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') {
            return false;
        }
    }
    return true;
}

}  // namespace

const std::string& Value::as_string() const {
    if (kind != Kind::string) throw std::runtime_error("toml: value is not a string");
    return str;
}

double Value::as_number() const {
    if (kind != Kind::number) throw std::runtime_error("toml: value is not a number");
    return num;
}

long Value::as_integer() const {
    const double v = as_number();
    const long i = static_cast<long>(v);
    if (static_cast<double>(i) != v) throw std::runtime_error("toml: value is not an integer");
    return i;
}

bool Value::as_bool() const {
    if (kind != Kind::boolean) throw std::runtime_error("toml: value is not a boolean");
    return flag;
}

const std::vector<Value>& Value::as_array() const {
    if (kind != Kind::array) throw std::runtime_error("toml: value is not an array");
    return items;
}

const Value& Table::at(const std::string& key) const {
    auto it = entries.find(key);
    if (it == entries.end()) throw std::runtime_error("toml: missing key '" + key + "'");
    return it->second;
}

std::string Table::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? at(key).as_string() : fallback;
}

double Table::get_number(const std::string& key, double fallback) const {
    return has(key) ? at(key).as_number() : fallback;
}

long Table::get_integer(const std::string& key, long fallback) const {
    return has(key) ? at(key).as_integer() : fallback;
}

bool Table::get_bool(const std::string& key, bool fallback) const {
    return has(key) ? at(key).as_bool() : fallback;
}

std::vector<double> Table::get_numbers(const std::string& key) const {
    std::vector<double> out;
    if (!has(key)) return out;
    for (const Value& v : at(key).as_array()) out.push_back(v.as_number());
    return out;
}

const Table& Document::at(const std::string& name) const {
    auto it = sections.find(name);
    if (it == sections.end()) {
        throw std::runtime_error("toml: missing section [" + name + "]");
    }
    return it->second;
}

const Table& Document::section(const std::string& name) const {
    static const Table empty;
    auto it = sections.find(name);
    return it == sections.end() ? empty : it->second;
}

Document parse(const std::string& text) {
    Document doc;
    Table* current = &doc.sections[""];
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(line_no, "unterminated section header");
            const std::string name = trim(line.substr(1, line.size() - 2));
            if (!valid_key(name)) fail(line_no, "bad section name '" + name + "'");
            current = &doc.sections[name];
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) fail(line_no, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (!valid_key(key)) fail(line_no, "bad key '" + key + "'");
        if (current->has(key)) fail(line_no, "duplicate key '" + key + "'");
        current->entries[key] = parse_value(line.substr(eq + 1), line_no);
    }
    if (doc.sections[""].entries.empty()) doc.sections.erase("");
    return doc;
}

Document parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("toml: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

}  // namespace qgbsde::toml
