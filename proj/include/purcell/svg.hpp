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

// Minimal SVG output: polylines on linear or log axes, and IQ scatter plots
// with 3-sigma ellipses.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "purcell/csv.hpp"
#include "purcell/readout.hpp"

namespace purcell {

struct SvgSeries {
    std::string name;
    std::vector<double> x, y;
};

struct SvgAxes {
    std::string title, x_label, y_label;
    bool log_y = false;
};

namespace detail {

inline const char *palette(std::size_t k) {
    static const char *colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    return colors[k % 6];
}

inline std::string xml_escape(const std::string &s) {
    std::string o;
    for (char c : s) {
        if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else if (c == '&') o += "&amp;";
        else o += c;
    }
    return o;
}

struct Frame {
    double x0, x1, y0, y1;
    static constexpr double W = 720, H = 440, L = 80, R = 20, T = 40, B = 60;
    double px(double x) const {
        return L + (x - x0) / (x1 - x0) * (W - L - R);
    }
    double py(double y) const {
        return H - B - (y - y0) / (y1 - y0) * (H - T - B);
    }
};

inline void frame_open(std::ostream &o, const Frame &f, const SvgAxes &ax, bool log_y) {
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Frame::W << "\" height=\"" << Frame::H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << Frame::W / 2 << "\" y=\"22\" text-anchor=\"middle\">" << xml_escape(ax.title) << "</text>\n";
    o << "<rect x=\"" << Frame::L << "\" y=\"" << Frame::T << "\" width=\"" << Frame::W - Frame::L - Frame::R
      << "\" height=\"" << Frame::H - Frame::T - Frame::B << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = f.x0 + (f.x1 - f.x0) * k / 4, yv = f.y0 + (f.y1 - f.y0) * k / 4;
        o << "<text x=\"" << f.px(xv) << "\" y=\"" << Frame::H - Frame::B + 16 << "\" text-anchor=\"middle\">"
          << format_number(std::round(xv * 1e4) / 1e4) << "</text>\n";
        const double shown = log_y ? std::pow(10.0, yv) : yv;
        o << "<text x=\"" << Frame::L - 6 << "\" y=\"" << f.py(yv) + 4 << "\" text-anchor=\"end\">"
          << format_number(std::round(shown * 1e4) / 1e4) << "</text>\n";
    }
    o << "<text x=\"" << Frame::W / 2 << "\" y=\"" << Frame::H - 16 << "\" text-anchor=\"middle\">"
      << xml_escape(ax.x_label) << "</text>\n";
    o << "<text transform=\"translate(18," << Frame::H / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << xml_escape(ax.y_label) << "</text>\n";
}

}  // namespace detail

inline void write_svg_lines(std::ostream &o, const std::vector<SvgSeries> &series, const SvgAxes &ax) {
    auto ty = [&](double y) { return ax.log_y ? std::log10(y) : y; };
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto &s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double y = ty(s.y[i]);
            if (!std::isfinite(y) || !std::isfinite(s.x[i])) continue;
            x0 = std::min(x0, s.x[i]), x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, y), y1 = std::max(y1, y);
        }
    if (!(x1 > x0)) x0 -= 0.5, x1 += 0.5;
    if (!(y1 > y0)) y0 -= 0.5, y1 += 0.5;
    const detail::Frame f{x0, x1, y0, y1};
    detail::frame_open(o, f, ax, ax.log_y);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto &s = series[k];
        o << "<polyline fill=\"none\" stroke=\"" << detail::palette(k) << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double y = ty(s.y[i]);
            if (!std::isfinite(y)) continue;
            o << format_number(std::round(f.px(s.x[i]) * 100) / 100) << ','
              << format_number(std::round(f.py(y) * 100) / 100) << ' ';
        }
        o << "\"/>\n";
        o << "<text x=\"" << detail::Frame::W - 30 << "\" y=\"" << 58 + 16 * k << "\" text-anchor=\"end\" fill=\""
          << detail::palette(k) << "\">" << detail::xml_escape(s.name) << "</text>\n";
    }
    o << "</svg>\n";
}

/// Scatter of the shots (at most `max_points` per label) with 3-sigma ellipses.
inline void write_svg_scatter(std::ostream &o, const IQShotSet &set, const BlobMap &blobs,
                              std::size_t max_points = 4000) {
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto &s : set.shots) {
        x0 = std::min(x0, s.i), x1 = std::max(x1, s.i);
        y0 = std::min(y0, s.q), y1 = std::max(y1, s.q);
    }
    if (!(x1 > x0)) x0 -= 0.5, x1 += 0.5;
    if (!(y1 > y0)) y0 -= 0.5, y1 += 0.5;
    const detail::Frame f{x0, x1, y0, y1};
    detail::frame_open(o, f, {"IQ single shots", "I", "Q", false}, false);
    const auto labels = set.labels();
    for (std::size_t k = 0; k < labels.size(); ++k) {
        std::size_t total = 0;
        for (const auto &s : set.shots) total += s.label == labels[k];
        const std::size_t stride = std::max<std::size_t>(1, total / max_points);
        std::size_t seen = 0;
        o << "<g fill=\"" << detail::palette(k) << "\" fill-opacity=\"0.35\">\n";
        for (const auto &s : set.shots) {
            if (s.label != labels[k] || seen++ % stride) continue;
            o << "<circle cx=\"" << format_number(std::round(f.px(s.i) * 10) / 10) << "\" cy=\""
              << format_number(std::round(f.py(s.q) * 10) / 10) << "\" r=\"1.2\"/>\n";
        }
        o << "</g>\n";
        if (auto it = blobs.find(labels[k]); it != blobs.end()) {
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(it->second.covariance);
            o << "<polygon fill=\"none\" stroke=\"black\" points=\"";
            for (int t = 0; t <= 72; ++t) {
                const double th = 2 * std::numbers::pi * t / 72;
                const Eigen::Vector2d p = it->second.mean + 3.0 * es.eigenvectors() *
                                                                 Eigen::Vector2d(std::sqrt(es.eigenvalues()(0)) * std::cos(th),
                                                                                 std::sqrt(es.eigenvalues()(1)) * std::sin(th));
                o << format_number(std::round(f.px(p(0)) * 10) / 10) << ','
                  << format_number(std::round(f.py(p(1)) * 10) / 10) << ' ';
            }
            o << "\"/>\n";
        }
        o << "<text x=\"" << detail::Frame::W - 30 << "\" y=\"" << 58 + 16 * k << "\" text-anchor=\"end\" fill=\""
          << detail::palette(k) << "\">" << detail::xml_escape(labels[k]) << "</text>\n";
    }
    o << "</svg>\n";
}

}  // namespace purcell
