#pragma once

// Minimal CSV reading and number formatting shared by the file formats.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace ensimp {

/// Shortest text that reads back to the same double: 17 significant digits.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace csv {

/// Splits one record on commas, honouring double-quoted fields.
inline std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(ch);
        }
    }
    out.push_back(std::move(field));
    return out;
}

/// Line reader that strips CR, skips blank and '#' lines, and tracks line numbers.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    bool next(std::vector<std::string>& fields) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line_no_ == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
            if (line.empty() || line.front() == '#') continue;
            fields = split(line);
            return true;
        }
        return false;
    }

    std::size_t line() const noexcept { return line_no_; }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

inline std::string where(std::string_view path, std::size_t line) {
    return std::string(path) + ":" + std::to_string(line);
}

inline double parse_double(std::string_view text, std::string_view path, std::size_t line,
                           std::string_view column) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || text.empty() || !std::isfinite(v)) {
        throw ParseError(where(path, line) + ": column '" + std::string(column) + "' has invalid number '" +
                         std::string(text) + "'");
    }
    return v;
}

inline int parse_int(std::string_view text, std::string_view path, std::size_t line, std::string_view column) {
    int v = 0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || text.empty()) {
        throw ParseError(where(path, line) + ": column '" + std::string(column) + "' has invalid integer '" +
                         std::string(text) + "'");
    }
    return v;
}

/// Maps each expected column name to its position in the header.
inline std::vector<std::size_t> require_header(const std::vector<std::string>& header,
                                               const std::vector<std::string_view>& expected,
                                               std::string_view path) {
    std::vector<std::size_t> pos;
    for (auto name : expected) {
        std::optional<std::size_t> found;
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) found = i;
        }
        if (!found) {
            throw ParseError(std::string(path) + ": header is missing column '" + std::string(name) + "'");
        }
        pos.push_back(*found);
    }
    return pos;
}

} // namespace csv
} // namespace ensimp
