#pragma once

// Flat typed key-value configuration.
//
//   # comment
//   [reservoir]            section prefix for the following keys
//   n_layers = 4           integer
//   leak_rates = [0.5, 1]  list of scalars
//   activation = "tanh"    string (quotes optional for single words)
//   use_bias = true        boolean
//   task.name = "mso"      dotted keys work anywhere
//
// Keys are stored fully qualified ("reservoir.n_layers"). Every lookup marks
// its key as used so that leftovers can be reported as unknown.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace deepesn::cli {

using Scalar = std::variant<std::int64_t, double, bool, std::string>;

struct Value {
    std::vector<Scalar> items;  // one item for a scalar
    bool is_list = false;
};

/// Parses a single value as written on the right of '='.
Value parse_value(const std::string& text, const std::string& key);

class ConfigFile {
public:
    static ConfigFile parse(const std::string& text, const std::string& source = "config");
    static ConfigFile load(const std::string& path);

    /// Applies "key=value"; later settings win.
    void set(const std::string& assignment);
    void set(const std::string& key, const Value& v) { values_[key] = v; }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::vector<double> get_double_list(const std::string& key, const std::vector<double>& fallback) const;
    std::vector<std::int64_t> get_int_list(const std::string& key, const std::vector<std::int64_t>& fallback) const;
    std::vector<std::string> get_string_list(const std::string& key, const std::vector<std::string>& fallback) const;

    /// Throws ConfigError naming the first key no getter asked for.
    void reject_unused() const;

    const std::map<std::string, Value>& values() const { return values_; }

private:
    const Value* find(const std::string& key) const;

    std::map<std::string, Value> values_;
    mutable std::set<std::string> used_;
};

} // namespace deepesn::cli
