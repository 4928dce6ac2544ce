#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "fedbatch/error.hpp"

namespace fedbatch::io {

using json = nlohmann::json;

/// Fixed 17-significant-digit rendering of a double; non-finite values become null.
inline std::string number17(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline void dump(const json& j, std::string& out, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string end_pad(static_cast<std::size_t>(indent * depth), ' ');
    const char* nl = indent > 0 ? "\n" : "";
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{";
            out += nl;
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) {
                    out += ",";
                    out += nl;
                }
                first = false;
                out += pad + json(it.key()).dump() + (indent > 0 ? ": " : ":");
                dump(it.value(), out, indent, depth + 1);
            }
            out += nl + end_pad + "}";
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += "[";
            out += nl;
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) {
                    out += ",";
                    out += nl;
                }
                out += pad;
                dump(j[i], out, indent, depth + 1);
            }
            out += nl + end_pad + "]";
            return;
        }
        case json::value_t::number_float: out += number17(j.get<double>()); return;
        default: out += j.dump(); return;
    }
}

}  // namespace detail

/// Serializes with every floating-point number at 17 significant digits.
inline std::string dump17(const json& j, int indent = 2) {
    std::string out;
    detail::dump(j, out, indent, 0);
    out += "\n";
    return out;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << text;
}

/// Rejects keys of `j` outside `allowed`.
inline void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                       const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (auto a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

inline double get_number(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + " is missing '" + key + "'");
    if (!j.at(key).is_number()) throw ConfigError(where + "." + key + " must be a number");
    return j.at(key).get<double>();
}

inline double get_number_or(const json& j, const char* key, double fallback,
                            const std::string& where) {
    return j.contains(key) ? get_number(j, key, where) : fallback;
}

}  // namespace fedbatch::io
