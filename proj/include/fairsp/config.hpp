#pragma once

#include <map>
#include <string>
#include <vector>

namespace fairsp::config {

/// A TOML-flavored key/value file: [section] headers, `key = value` lines,
/// values being strings, numbers, booleans or flat arrays thereof. Enough for
/// experiment configs; not a general TOML implementation.
struct Value {
    std::string raw;
    std::vector<std::string> items;  // filled for arrays
    bool is_array = false;

    std::string as_string() const;
    double as_double() const;
    long long as_int() const;
    bool as_bool() const;
    std::vector<std::string> as_string_array() const;
    std::vector<double> as_double_array() const;
    std::vector<long long> as_int_array() const;
};

class Table {
public:
    void set(const std::string& section, const std::string& key, Value v);
    bool has(const std::string& section, const std::string& key) const;
    const Value& get(const std::string& section, const std::string& key) const;

    // typed lookups with defaults
    std::string get_string(const std::string& s, const std::string& k,
                           const std::string& dflt) const;
    double get_double(const std::string& s, const std::string& k, double dflt) const;
    long long get_int(const std::string& s, const std::string& k, long long dflt) const;
    bool get_bool(const std::string& s, const std::string& k, bool dflt) const;

private:
    std::map<std::string, std::map<std::string, Value>> sections_;
};

Table parse_file(const std::string& path);
Table parse_string(const std::string& text);

}  // namespace fairsp::config
