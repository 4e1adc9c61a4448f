#pragma once

// Plain-text configuration: one `section.key = value` per line, `#` starts a
// comment. Lists are comma separated; positions are written `x, y`.

#include "pueguard/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace pueguard {

class KeyValueConfig {
public:
    struct Value {
        std::string text;
        int line = 0;
    };

    static KeyValueConfig parse(std::istream& in) {
        KeyValueConfig cfg;
        std::string raw;
        int line_no = 0;
        while (std::getline(in, raw)) {
            ++line_no;
            cfg.lines_.push_back(raw);
            std::string_view line = raw;
            if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) {
                throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'", "", line_no);
            }
            const std::string key(trim(line.substr(0, eq)));
            const std::string value(trim(line.substr(eq + 1)));
            if (key.empty() || key.find('.') == std::string::npos) {
                throw ConfigError("line " + std::to_string(line_no) + ": key '" + key + "' must be section.key", key,
                                  line_no);
            }
            if (cfg.values_.count(key)) {
                throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'", key, line_no);
            }
            cfg.values_[key] = {value, line_no};
        }
        return cfg;
    }

    static KeyValueConfig parse(const std::string& text) {
        std::istringstream in(text);
        return parse(in);
    }

    static KeyValueConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path + "'");
        return parse(in);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    const std::map<std::string, Value>& values() const { return values_; }

    /// Overrides or adds a key (used for command-line overrides).
    void set(const std::string& key, const std::string& value) { values_[key] = {value, 0}; }

    std::string get_string(const std::string& key) const { return at(key).text; }
    std::string get_string(const std::string& key, const std::string& fallback) const {
        return has(key) ? at(key).text : fallback;
    }

    double get_double(const std::string& key) const { return to_double(key, at(key)); }
    double get_double(const std::string& key, double fallback) const {
        return has(key) ? to_double(key, at(key)) : fallback;
    }

    long long get_int(const std::string& key) const { return to_int(key, at(key)); }
    long long get_int(const std::string& key, long long fallback) const {
        return has(key) ? to_int(key, at(key)) : fallback;
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        const auto& v = at(key);
        std::uint64_t out = 0;
        auto [p, ec] = std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
        if (ec != std::errc() || p != v.text.data() + v.text.size()) bad(key, v, "an unsigned integer");
        return out;
    }

    bool get_bool(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const auto& v = at(key);
        if (v.text == "true" || v.text == "1" || v.text == "yes") return true;
        if (v.text == "false" || v.text == "0" || v.text == "no") return false;
        bad(key, v, "a boolean");
        return false;
    }

    std::vector<double> get_doubles(const std::string& key) const {
        const auto& v = at(key);
        std::vector<double> out;
        for (const auto& item : split(v.text)) out.push_back(to_double(key, {item, v.line}));
        if (out.empty()) bad(key, v, "a non-empty list");
        return out;
    }

    std::vector<long long> get_ints(const std::string& key) const {
        const auto& v = at(key);
        std::vector<long long> out;
        for (const auto& item : split(v.text)) out.push_back(to_int(key, {item, v.line}));
        if (out.empty()) bad(key, v, "a non-empty list");
        return out;
    }

    std::pair<double, double> get_pair(const std::string& key) const {
        const auto xs = get_doubles(key);
        if (xs.size() != 2) bad(key, at(key), "two numbers 'x, y'");
        return {xs[0], xs[1]};
    }

    /// Distinct indices N appearing in keys `prefix.N.field`, ascending.
    std::vector<int> indices(const std::string& prefix) const {
        std::set<int> out;
        const std::string head = prefix + ".";
        for (const auto& [key, v] : values_) {
            if (key.rfind(head, 0) != 0) continue;
            const auto rest = std::string_view(key).substr(head.size());
            const auto dot = rest.find('.');
            int idx = 0;
            auto [p, ec] = std::from_chars(rest.data(), rest.data() + (dot == std::string_view::npos ? rest.size() : dot), idx);
            if (ec != std::errc() || dot == std::string_view::npos || p != rest.data() + dot) {
                throw ConfigError("line " + std::to_string(v.line) + ": malformed indexed key '" + key + "'", key,
                                  v.line);
            }
            out.insert(idx);
        }
        return {out.begin(), out.end()};
    }

    /// Throws on the first key not matched by `allowed`. Entries ending in
    /// ".*." match any index segment, e.g. "attacker.*.position".
    void require_known(const std::vector<std::string>& allowed) const {
        for (const auto& [key, v] : values_) {
            const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const std::string& pattern) {
                return matches(pattern, key);
            });
            if (!ok) {
                throw ConfigError("line " + std::to_string(v.line) + ": unknown key '" + key + "'", key, v.line);
            }
        }
    }

    /// Original text, reproduced in run manifests.
    std::string text() const {
        std::string out;
        for (const auto& l : lines_) out += l + "\n";
        return out;
    }

private:
    const Value& at(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("missing required key '" + key + "'", key);
        return it->second;
    }

    [[noreturn]] static void bad(const std::string& key, const Value& v, const std::string& expected) {
        throw ConfigError("line " + std::to_string(v.line) + ": key '" + key + "' expects " + expected + ", got '" +
                              v.text + "'",
                          key, v.line);
    }

    static double to_double(const std::string& key, const Value& v) {
        double out = 0.0;
        auto [p, ec] = std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
        if (ec != std::errc() || p != v.text.data() + v.text.size()) bad(key, v, "a number");
        return out;
    }

    static long long to_int(const std::string& key, const Value& v) {
        long long out = 0;
        auto [p, ec] = std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
        if (ec != std::errc() || p != v.text.data() + v.text.size()) bad(key, v, "an integer");
        return out;
    }

    static std::string_view trim(std::string_view s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
        return s;
    }

    static std::vector<std::string> split(const std::string& s) {
        std::vector<std::string> out;
        std::string_view rest = s;
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            const auto item = trim(rest.substr(0, comma));
            if (!item.empty()) out.emplace_back(item);
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        return out;
    }

    static bool matches(const std::string& pattern, const std::string& key) {
        const auto star = pattern.find(".*.");
        if (star == std::string::npos) return pattern == key;
        const std::string head = pattern.substr(0, star + 1);
        const std::string tail = pattern.substr(star + 2);
        if (key.rfind(head, 0) != 0 || key.size() < head.size() + tail.size()) return false;
        if (key.compare(key.size() - tail.size(), tail.size(), tail) != 0) return false;
        const std::string mid = key.substr(head.size(), key.size() - head.size() - tail.size());
        return !mid.empty() && std::all_of(mid.begin(), mid.end(), [](char c) { return c >= '0' && c <= '9'; });
    }

    std::map<std::string, Value> values_;
    std::vector<std::string> lines_;
};

}  // namespace pueguard
