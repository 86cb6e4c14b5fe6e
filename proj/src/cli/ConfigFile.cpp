#include "deepesn/cli/ConfigFile.hpp"

#include "deepesn/Errors.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace deepesn::cli {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Drops a trailing '#' comment that is not inside a string.
std::string strip_comment(const std::string& line)
{
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

bool valid_key(const std::string& k)
{
    if (k.empty() || k.front() == '.' || k.back() == '.') return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
    return k.find("..") == std::string::npos;
}

Scalar parse_scalar(const std::string& raw, const std::string& key)
{
    const std::string t = trim(raw);
    if (t.empty()) throw ConfigError("empty value for '" + key + "'");
    if (t.front() == '"') {
        if (t.size() < 2 || t.back() != '"') throw ConfigError("unterminated string for '" + key + "'");
        return t.substr(1, t.size() - 2);
    }
    if (t == "true") return true;
    if (t == "false") return false;
    {
        std::int64_t i = 0;
        const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), i);
        if (ec == std::errc() && p == t.data() + t.size()) return i;
    }
    {
        double d = 0;
        const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), d);
        if (ec == std::errc() && p == t.data() + t.size()) return d;
    }
    for (char c : t)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' || c == '/'))
            throw ConfigError("cannot parse value '" + t + "' for '" + key + "'");
    return t;  // bare word
}

const char* type_name(const Scalar& s)
{
    switch (s.index()) {
    case 0: return "integer";
    case 1: return "number";
    case 2: return "boolean";
    default: return "string";
    }
}

double as_double(const Scalar& s, const std::string& key)
{
    if (const auto* i = std::get_if<std::int64_t>(&s)) return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(&s)) return *d;
    throw ConfigError("'" + key + "' must be a number, got " + type_name(s));
}

std::int64_t as_int(const Scalar& s, const std::string& key)
{
    if (const auto* i = std::get_if<std::int64_t>(&s)) return *i;
    if (const auto* d = std::get_if<double>(&s); d && std::isfinite(*d) && *d == std::floor(*d) &&
                                                 std::abs(*d) < 9.0e15)
        return static_cast<std::int64_t>(*d);
    throw ConfigError("'" + key + "' must be an integer, got " + type_name(s));
}

std::string as_string(const Scalar& s, const std::string& key)
{
    if (const auto* str = std::get_if<std::string>(&s)) return *str;
    throw ConfigError("'" + key + "' must be a string, got " + type_name(s));
}

} // namespace

Value parse_value(const std::string& text, const std::string& key)
{
    const std::string t = trim(text);
    Value v;
    if (!t.empty() && t.front() == '[') {
        if (t.back() != ']') throw ConfigError("unterminated list for '" + key + "'");
        v.is_list = true;
        const std::string body = trim(t.substr(1, t.size() - 2));
        if (body.empty()) return v;
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) v.items.push_back(parse_scalar(item, key));
        return v;
    }
    v.items.push_back(parse_scalar(t, key));
    return v;
}

ConfigFile ConfigFile::parse(const std::string& text, const std::string& source)
{
    ConfigFile cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string l = trim(strip_comment(line));
        if (l.empty()) continue;
        const std::string where = source + ":" + std::to_string(lineno);
        if (l.front() == '[') {
            if (l.back() != ']') throw ConfigError(where + ": malformed section header");
            section = trim(l.substr(1, l.size() - 2));
            if (!valid_key(section)) throw ConfigError(where + ": invalid section name '" + section + "'");
            continue;
        }
        const auto eq = l.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        const std::string local = trim(l.substr(0, eq));
        if (!valid_key(local)) throw ConfigError(where + ": invalid key '" + local + "'");
        const std::string key = section.empty() ? local : section + "." + local;
        if (cfg.values_.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
        try {
            cfg.values_[key] = parse_value(l.substr(eq + 1), key);
        } catch (const ConfigError& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
    return cfg;
}

ConfigFile ConfigFile::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
}

void ConfigFile::set(const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string key = trim(assignment.substr(0, eq));
    if (!valid_key(key)) throw ConfigError("invalid key '" + key + "' in override");
    values_[key] = parse_value(assignment.substr(eq + 1), key);
}

const Value* ConfigFile::find(const std::string& key) const
{
    used_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
}

namespace {

const Scalar& single(const Value& v, const std::string& key)
{
    if (v.is_list || v.items.size() != 1) throw ConfigError("'" + key + "' must be a single value, not a list");
    return v.items.front();
}

} // namespace

std::int64_t ConfigFile::get_int(const std::string& key, std::int64_t fallback) const
{
    const Value* v = find(key);
    return v ? as_int(single(*v, key), key) : fallback;
}

double ConfigFile::get_double(const std::string& key, double fallback) const
{
    const Value* v = find(key);
    return v ? as_double(single(*v, key), key) : fallback;
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const
{
    const Value* v = find(key);
    if (!v) return fallback;
    const Scalar& s = single(*v, key);
    if (const auto* b = std::get_if<bool>(&s)) return *b;
    throw ConfigError("'" + key + "' must be true or false, got " + type_name(s));
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const
{
    const Value* v = find(key);
    return v ? as_string(single(*v, key), key) : fallback;
}

std::vector<double> ConfigFile::get_double_list(const std::string& key, const std::vector<double>& fallback) const
{
    const Value* v = find(key);
    if (!v) return fallback;
    std::vector<double> out;
    for (const auto& s : v->items) out.push_back(as_double(s, key));
    return out;
}

std::vector<std::int64_t> ConfigFile::get_int_list(const std::string& key,
                                                   const std::vector<std::int64_t>& fallback) const
{
    const Value* v = find(key);
    if (!v) return fallback;
    std::vector<std::int64_t> out;
    for (const auto& s : v->items) out.push_back(as_int(s, key));
    return out;
}

std::vector<std::string> ConfigFile::get_string_list(const std::string& key,
                                                     const std::vector<std::string>& fallback) const
{
    const Value* v = find(key);
    if (!v) return fallback;
    std::vector<std::string> out;
    for (const auto& s : v->items) out.push_back(as_string(s, key));
    return out;
}

void ConfigFile::reject_unused() const
{
    for (const auto& [key, v] : values_)
        if (!used_.count(key)) throw ConfigError("unknown config key '" + key + "'");
}

} // namespace deepesn::cli
