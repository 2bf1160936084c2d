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

// Sweeps T_p of the default filter with and without the stub, prints the
// 1 ms band and writes tp_compare.svg into the current directory.

#include <fstream>
#include <iostream>

#include "purcell/purcell.hpp"

using namespace purcell;

int main(int argc, char **argv) {
    const std::string preset = argc > 1 ? argv[1] : "default";
    FilterGeometry g;
    try {
        g = preset_geometry(preset);
    } catch (const InputError &e) {
        std::cerr << e.what() << '\n';
        return 2;
    }
    const FrequencySweep band{3e9, 7e9, 2001};
    std::vector<SvgSeries> series;
    for (auto v : {Variant::with_stub, Variant::without_stub}) {
        const auto c = tp_curve(g, v, band);
        SvgSeries s{to_string(v), {}, {}};
        for (std::size_t i = 0; i < c.size(); ++i) {
            s.x.push_back(c.frequencies[i] / 1e9);
            s.y.push_back(c.tp[i]);
        }
        series.push_back(std::move(s));
        std::cout << to_string(v) << ": ";
        const auto runs = bands_above(c, 1e-3);
        if (runs.empty()) std::cout << "no band with T_p >= 1 ms";
        for (const auto &[lo, hi] : runs)
            std::cout << format_number(lo / 1e9) << "-" << format_number(hi / 1e9) << " GHz  ";
        std::cout << '\n';
    }
    for (const auto &n : notch_frequencies(g, band.start_hz, band.stop_hz))
        std::cout << "notch (" << to_string(n.family) << ") at " << format_number(n.frequency_hz / 1e9) << " GHz\n";

    std::ofstream svg("tp_compare.svg");
    write_svg_lines(svg, series, {"T_p, preset " + preset, "frequency (GHz)", "T_p (s)", true});
    return 0;
}
