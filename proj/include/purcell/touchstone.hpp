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

// Touchstone v1 (.sNp) scattering-parameter files.
//
// Reader accepts HZ/KHZ/MHZ/GHZ, RI/MA/DB and any reference resistance on the
// option line. Writer emits "# GHZ S RI R <z>". Two-port data is ordered
// S11 S21 S12 S22; larger port counts are row-major with at most four pairs
// per line.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "purcell/csv.hpp"
#include "purcell/errors.hpp"
#include "purcell/network.hpp"

namespace purcell {

struct TouchstoneData {
    int ports = 2;
    double z_ref = 50.0;
    std::vector<double> frequencies;  // Hz
    std::vector<CMatrix> s;
};

enum class TouchstoneFormat { ri, ma, db };

/// Port count from a ".sNp" extension, or 0 when the name has none.
inline int touchstone_ports_from_name(const std::string &path) {
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return 0;
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext.size() < 3 || ext.front() != 's' || ext.back() != 'p') return 0;
    int n = 0;
    for (std::size_t i = 1; i + 1 < ext.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(ext[i]))) return 0;
        n = n * 10 + (ext[i] - '0');
    }
    return n;
}

namespace detail {

// Position of S_jk in the per-frequency value list.
inline std::size_t touchstone_slot(int ports, int j, int k) {
    if (ports == 2) return static_cast<std::size_t>(k * 2 + j);
    return static_cast<std::size_t>(j * ports + k);
}

}  // namespace detail

inline TouchstoneData parse_touchstone(std::istream &in, int ports) {
    if (ports < 1) throw InputError("touchstone port count must be positive");
    TouchstoneData d;
    d.ports = ports;
    double unit = 1e9;
    TouchstoneFormat fmt = TouchstoneFormat::ma;
    bool have_options = false;

    std::vector<double> values;
    std::vector<std::size_t> value_lines;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (auto bang = line.find('!'); bang != std::string::npos) line.resize(bang);
        auto view = trim(line);
        if (view.empty()) continue;
        if (view.front() == '#') {
            if (have_options) continue;  // later option lines are ignored
            have_options = true;
            std::istringstream opts{std::string(view.substr(1))};
            std::string tok;
            while (opts >> tok) {
                std::transform(tok.begin(), tok.end(), tok.begin(),
                               [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
                if (tok == "HZ") unit = 1.0;
                else if (tok == "KHZ") unit = 1e3;
                else if (tok == "MHZ") unit = 1e6;
                else if (tok == "GHZ") unit = 1e9;
                else if (tok == "RI") fmt = TouchstoneFormat::ri;
                else if (tok == "MA") fmt = TouchstoneFormat::ma;
                else if (tok == "DB") fmt = TouchstoneFormat::db;
                else if (tok == "S") continue;
                else if (tok == "Y" || tok == "Z" || tok == "H" || tok == "G")
                    throw InputError("line " + std::to_string(n) +
                                     ": only S-parameter touchstone data is supported");
                else if (tok == "R") {
                    std::string r;
                    if (!(opts >> r) || !parse_number(r))
                        throw InputError("line " + std::to_string(n) + ": bad reference resistance");
                    d.z_ref = *parse_number(r);
                } else
                    throw InputError("line " + std::to_string(n) + ": unknown option '" + tok + "'");
            }
            continue;
        }
        std::istringstream tokens{std::string(view)};
        std::string tok;
        while (tokens >> tok) {
            auto v = parse_number(tok);
            if (!v) throw InputError("line " + std::to_string(n) + ": '" + tok + "' is not a number");
            values.push_back(*v);
            value_lines.push_back(n);
        }
    }

    const std::size_t per = 1 + 2 * static_cast<std::size_t>(ports) * ports;
    if (values.size() % per != 0)
        throw InputError("touchstone data ends mid-record (expected multiples of " +
                         std::to_string(per) + " numbers)");
    for (std::size_t r = 0; r * per < values.size(); ++r) {
        const double *rec = values.data() + r * per;
        const double f = rec[0] * unit;
        if (!d.frequencies.empty() && !(f > d.frequencies.back()))
            throw InputError("line " + std::to_string(value_lines[r * per]) +
                             ": frequencies must increase");
        CMatrix s(ports, ports);
        for (int j = 0; j < ports; ++j)
            for (int k = 0; k < ports; ++k) {
                const std::size_t slot = detail::touchstone_slot(ports, j, k);
                const double x = rec[1 + 2 * slot], y = rec[2 + 2 * slot];
                switch (fmt) {
                case TouchstoneFormat::ri: s(j, k) = cplx(x, y); break;
                case TouchstoneFormat::ma: s(j, k) = std::polar(x, y * kTwoPi / 360.0); break;
                case TouchstoneFormat::db:
                    s(j, k) = std::polar(std::pow(10.0, x / 20.0), y * kTwoPi / 360.0);
                    break;
                }
            }
        d.frequencies.push_back(f);
        d.s.push_back(std::move(s));
    }
    return d;
}

inline TouchstoneData read_touchstone(const std::string &path, int ports = 0) {
    if (ports == 0) ports = touchstone_ports_from_name(path);
    if (ports == 0) throw InputError("cannot infer port count from '" + path + "'");
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return parse_touchstone(in, ports);
}

inline void write_touchstone(std::ostream &out, const TouchstoneData &d) {
    out << "! purcellnet S-parameters\n";
    out << "# GHZ S RI R " << format_number(d.z_ref) << '\n';
    for (std::size_t i = 0; i < d.frequencies.size(); ++i) {
        out << format_number(d.frequencies[i] / 1e9);
        int on_line = 0;
        for (int j = 0; j < d.ports; ++j)
            for (int k = 0; k < d.ports; ++k) {
                // Reverse the slot ordering so the output follows the file convention.
                int jj = j, kk = k;
                if (d.ports == 2) std::swap(jj, kk);
                if (d.ports > 2 && (on_line == 4 || (k == 0 && j > 0))) {
                    out << '\n';
                    on_line = 0;
                }
                const cplx v = d.s[i](jj, kk);
                out << ' ' << format_number(v.real()) << ' ' << format_number(v.imag());
                ++on_line;
            }
        out << '\n';
    }
}

}  // namespace purcell
