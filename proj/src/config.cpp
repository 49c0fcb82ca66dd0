#include "fairsp/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fairsp::config {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

Value parse_value(const std::string& raw_in) {
    Value v;
    std::string raw = trim(raw_in);
    if (!raw.empty() && raw.front() == '[') {
        if (raw.back() != ']') throw std::runtime_error("config: unterminated array");
        v.is_array = true;
        std::string body = raw.substr(1, raw.size() - 2);
        std::string item;
        bool quoted = false;
        char quote_ch = 0;
        for (char ch : body) {
            if (quoted) {
                if (ch == quote_ch) quoted = false;
                item.push_back(ch);
            } else if (ch == '"' || ch == '\'') {
                quoted = true;
                quote_ch = ch;
                item.push_back(ch);
            } else if (ch == ',') {
                if (!trim(item).empty()) v.items.push_back(unquote(trim(item)));
                item.clear();
            } else {
                item.push_back(ch);
            }
        }
        if (!trim(item).empty()) v.items.push_back(unquote(trim(item)));
        v.raw = raw;
    } else {
        v.raw = unquote(raw);
    }
    return v;
}

}  // namespace

std::string Value::as_string() const {
    if (is_array) throw std::runtime_error("config: expected scalar, got array");
    return raw;
}

double Value::as_double() const {
    std::size_t pos = 0;
    const double d = std::stod(as_string(), &pos);
    if (pos != raw.size()) throw std::runtime_error("config: bad number: " + raw);
    return d;
}

long long Value::as_int() const {
    std::size_t pos = 0;
    const long long i = std::stoll(as_string(), &pos);
    if (pos != raw.size()) throw std::runtime_error("config: bad integer: " + raw);
    return i;
}

bool Value::as_bool() const {
    const std::string s = as_string();
    if (s == "true") return true;
    if (s == "false") return false;
    throw std::runtime_error("config: bad boolean: " + s);
}

std::vector<std::string> Value::as_string_array() const {
    if (!is_array) throw std::runtime_error("config: expected array");
    return items;
}

std::vector<double> Value::as_double_array() const {
    std::vector<double> out;
    for (const auto& s : as_string_array()) out.push_back(std::stod(s));
    return out;
}

std::vector<long long> Value::as_int_array() const {
    std::vector<long long> out;
    for (const auto& s : as_string_array()) out.push_back(std::stoll(s));
    return out;
}

void Table::set(const std::string& section, const std::string& key, Value v) {
    sections_[section][key] = std::move(v);
}

bool Table::has(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key) > 0;
}

const Value& Table::get(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    if (it == sections_.end() || !it->second.count(key))
        throw std::runtime_error("config: missing [" + section + "] " + key);
    return it->second.at(key);
}

std::string Table::get_string(const std::string& s, const std::string& k,
                              const std::string& dflt) const {
    return has(s, k) ? get(s, k).as_string() : dflt;
}
double Table::get_double(const std::string& s, const std::string& k, double dflt) const {
    return has(s, k) ? get(s, k).as_double() : dflt;
}
long long Table::get_int(const std::string& s, const std::string& k, long long dflt) const {
    return has(s, k) ? get(s, k).as_int() : dflt;
}
bool Table::get_bool(const std::string& s, const std::string& k, bool dflt) const {
    return has(s, k) ? get(s, k).as_bool() : dflt;
}

Table parse_string(const std::string& text) {
    Table table;
    std::istringstream in(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // strip comments outside quotes
        std::string stripped;
        bool quoted = false;
        char quote_ch = 0;
        for (char ch : line) {
            if (quoted) {
                if (ch == quote_ch) quoted = false;
            } else if (ch == '"' || ch == '\'') {
                quoted = true;
                quote_ch = ch;
            } else if (ch == '#') {
                break;
            }
            stripped.push_back(ch);
        }
        const std::string t = trim(stripped);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw std::runtime_error("config: bad section at line " +
                                         std::to_string(lineno));
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: expected key = value at line " +
                                     std::to_string(lineno));
        table.set(section, trim(t.substr(0, eq)), parse_value(t.substr(eq + 1)));
    }
    return table;
}

Table parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

}  // namespace fairsp::config
