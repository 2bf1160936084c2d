// Copyright 2026 The purcellnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Locale-free CSV reading and writing. Numbers are written in shortest
// round-trip form with '.' decimals; lines end in LF.

#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "purcell/errors.hpp"

namespace purcell {

inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
    return std::string(buf, end);
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    double x = 0.0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc{} || end != s.data() + s.size() || s.empty()) return std::nullopt;
    return x;
}

inline std::vector<std::string> split_fields(std::string_view line, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.emplace_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

struct CsvRow {
    std::size_t line = 0;  // 1-based line number in the source
    std::vector<std::string> fields;
};

struct CsvTable {
    std::vector<std::string> header;  // empty when the file has none
    std::vector<CsvRow> rows;

    double number(const CsvRow &row, std::size_t col) const {
        if (col >= row.fields.size())
            throw InputError("line " + std::to_string(row.line) + ": expected at least " +
                             std::to_string(col + 1) + " columns");
        auto v = parse_number(row.fields[col]);
        if (!v)
            throw InputError("line " + std::to_string(row.line) + ": '" + row.fields[col] +
                             "' is not a number");
        return *v;
    }
};

/// Parses CSV text. '#' starts a comment line; blank lines are skipped. The first
/// data line is taken as a header when its first field is not numeric.
inline CsvTable parse_csv(std::istream &in, bool allow_text_first_column = false) {
    CsvTable t;
    std::string line;
    std::size_t n = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++n;
        auto view = trim(line);
        if (view.empty() || view.front() == '#') continue;
        auto fields = split_fields(view);
        if (first) {
            first = false;
            const bool numeric = parse_number(fields[0]).has_value();
            const bool text_data =
                allow_text_first_column && fields.size() > 1 && parse_number(fields[1]);
            if (!numeric && !text_data) {
                t.header = std::move(fields);
                continue;
            }
        }
        t.rows.push_back({n, std::move(fields)});
    }
    return t;
}

inline CsvTable read_csv(const std::string &path, bool allow_text_first_column = false) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return parse_csv(in, allow_text_first_column);
}

/// Writes rows with LF endings regardless of platform or locale.
class CsvWriter {
  public:
    explicit CsvWriter(std::ostream &out) : out_(out) {
    }
    void header(const std::vector<std::string> &names) {
        for (std::size_t i = 0; i < names.size(); ++i) out_ << (i ? "," : "") << names[i];
        out_ << '\n';
    }
    void row(const std::vector<double> &values) {
        for (std::size_t i = 0; i < values.size(); ++i)
            out_ << (i ? "," : "") << format_number(values[i]);
        out_ << '\n';
    }
    void text_row(const std::vector<std::string> &values) {
        header(values);
    }

  private:
    std::ostream &out_;
};

}  // namespace purcell
