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

// Input-output transmission model of a filter mode dressed by readout
// resonators, with a dB-domain least-squares fitter.
//
//   S21 = (-j k/2) / [ (j D_f + k/2) + sum_i g_i^2 / (j D_i + gamma_i/2) ]
//
// with D_f = w_f - w_d and D_i = w_i - w_d. Parameters are ordinary frequencies;
// 2 pi is applied internally.

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "purcell/csv.hpp"
#include "purcell/errors.hpp"
#include "purcell/levmar.hpp"
#include "purcell/tline.hpp"
#include "purcell/touchstone.hpp"

namespace purcell {

inline constexpr double kDbFloor = -200.0;
inline constexpr double kDefaultResonatorLossHz = 100e3;

struct ResonatorCoupling {
    double omega_r = 0.0;  // Hz
    double g_fr = 0.0;     // Hz
    double gamma_r = 0.0;  // Hz
};

struct S21ModelParams {
    double omega_f = 0.0;  // Hz
    double kappa_f = 0.0;  // Hz
    std::vector<ResonatorCoupling> resonators;
    double background_k = 0.0;  // dB/Hz
    double background_b = 0.0;  // dB

    void validate() const {
        if (!(kappa_f > 0.0)) throw InputError("kappa_f must be positive");
        for (const auto &r : resonators)
            if (!(r.gamma_r >= 0.0)) throw InputError("gamma_r must be >= 0");
    }
};

inline cplx s21_model(const S21ModelParams &p, double f_probe) {
    const double kappa = kTwoPi * p.kappa_f;
    cplx den = kJ * (kTwoPi * (p.omega_f - f_probe)) + kappa / 2.0;
    for (const auto &r : p.resonators) {
        const cplx d = kJ * (kTwoPi * (r.omega_r - f_probe)) + kTwoPi * r.gamma_r / 2.0;
        const double g2 = std::pow(kTwoPi * r.g_fr, 2);
        if (d == cplx(0.0)) {
            if (g2 > 0.0) return 0.0;
            continue;
        }
        den += g2 / d;
    }
    return -kJ * (kappa / 2.0) / den;
}

inline double s21_db_with_background(const S21ModelParams &p, double f_probe) {
    const double mag = std::abs(s21_model(p, f_probe));
    const double db = mag > 0.0 ? std::max(kDbFloor, 20.0 * std::log10(mag)) : kDbFloor;
    return db + p.background_k * f_probe + p.background_b;
}

struct SpectrumData {
    std::vector<double> frequencies;  // Hz
    std::vector<double> s21_db;

    std::size_t size() const {
        return frequencies.size();
    }
    void validate() const {
        if (frequencies.size() != s21_db.size())
            throw InputError("frequency and S21 columns differ in length");
        if (frequencies.empty()) throw InputError("spectrum has no points");
        for (std::size_t i = 1; i < frequencies.size(); ++i)
            if (!(frequencies[i] > frequencies[i - 1]))
                throw InputError("spectrum frequencies must increase strictly");
        for (double v : s21_db)
            if (!std::isfinite(v)) throw InputError("spectrum contains non-finite values");
    }
    /// Points with lo <= f <= hi.
    SpectrumData window(double lo, double hi) const {
        SpectrumData w;
        for (std::size_t i = 0; i < size(); ++i)
            if (frequencies[i] >= lo && frequencies[i] <= hi) {
                w.frequencies.push_back(frequencies[i]);
                w.s21_db.push_back(s21_db[i]);
            }
        return w;
    }
};

/// Model samples plus optional white Gaussian noise (dB) from a seeded generator.
inline SpectrumData synthesize_spectrum(const S21ModelParams &p,
                                        const std::vector<double> &frequencies,
                                        double noise_db = 0.0, std::uint64_t seed = 0) {
    SpectrumData d;
    d.frequencies = frequencies;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (double f : frequencies)
        d.s21_db.push_back(s21_db_with_background(p, f) + (noise_db > 0 ? noise_db * noise(rng) : 0.0));
    return d;
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    if (n > 1) v.back() = b;
    return v;
}

// ---------------------------------------------------------------------------
// Initial guess

namespace detail {

inline std::vector<double> moving_average(const std::vector<double> &y, std::size_t half) {
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const std::size_t lo = i >= half ? i - half : 0, hi = std::min(y.size() - 1, i + half);
        double s = 0.0;
        for (std::size_t k = lo; k <= hi; ++k) s += y[k];
        out[i] = s / static_cast<double>(hi - lo + 1);
    }
    return out;
}

// Robust white-noise estimate from second differences (MAD scaled to sigma).
inline double noise_sigma(const std::vector<double> &y) {
    if (y.size() < 5) return 0.0;
    std::vector<double> d2;
    for (std::size_t i = 1; i + 1 < y.size(); ++i) d2.push_back(std::abs(y[i - 1] - 2 * y[i] + y[i + 1]));
    std::nth_element(d2.begin(), d2.begin() + d2.size() / 2, d2.end());
    return d2[d2.size() / 2] / (0.6744897501960817 * std::sqrt(6.0));
}

// Topographic prominence of a local minimum.
inline double dip_prominence(const std::vector<double> &y, std::size_t i) {
    double left = y[i], right = y[i];
    for (std::size_t k = i; k-- > 0;) {
        if (y[k] < y[i]) break;
        left = std::max(left, y[k]);
    }
    for (std::size_t k = i + 1; k < y.size(); ++k) {
        if (y[k] < y[i]) break;
        right = std::max(right, y[k]);
    }
    return std::min(left, right) - y[i];
}

}  // namespace detail

struct Dip {
    double frequency_hz;
    double prominence_db;
};

/// Local minima of the detrended spectrum, most prominent first.
inline std::vector<Dip> find_dips(const std::vector<double> &f, const std::vector<double> &y,
                                  double min_prominence_db) {
    std::vector<Dip> dips;
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        if (!(y[i] < y[i - 1] && y[i] <= y[i + 1])) continue;
        const double p = detail::dip_prominence(y, i);
        if (p >= min_prominence_db) dips.push_back({f[i], p});
    }
    std::sort(dips.begin(), dips.end(),
              [](const Dip &a, const Dip &b) { return a.prominence_db > b.prominence_db; });
    return dips;
}

inline S21ModelParams auto_initial_guess(const SpectrumData &data, std::size_t n_resonators) {
    data.validate();
    const std::size_t n = data.size();
    if (n < 10) throw InputError("spectrum needs at least 10 points for an initial guess");
    const auto &f = data.frequencies;

    // Background slope from the outer 10% of the band.
    const std::size_t edge = std::max<std::size_t>(2, n / 20);
    double sf = 0, sy = 0, sff = 0, sfy = 0, cnt = 0;
    const double f0 = f.front();
    for (std::size_t i = 0; i < n; ++i) {
        if (i >= edge && i < n - edge) continue;
        const double x = f[i] - f0, y = data.s21_db[i];
        sf += x, sy += y, sff += x * x, sfy += x * y, cnt += 1;
    }
    const double den = cnt * sff - sf * sf;
    const double slope = den != 0.0 ? (cnt * sfy - sf * sy) / den : 0.0;

    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = data.s21_db[i] - slope * f[i];
    const double sigma = detail::noise_sigma(y);
    const auto smooth = detail::moving_average(y, 2);

    const auto peak = static_cast<std::size_t>(
        std::max_element(smooth.begin(), smooth.end()) - smooth.begin());
    const double top = smooth[peak];
    const double outer = std::min(smooth.front(), smooth.back());
    if (!(top - outer >= 3.0)) throw InputError("no filter peak found (less than 3 dB of contrast)");

    // Outer -3 dB crossings, searched inward from the band edges.
    const double level = top - 3.0;
    auto cross = [&](std::size_t a, std::size_t b) {
        const double t = (level - smooth[a]) / (smooth[b] - smooth[a]);
        return f[a] + t * (f[b] - f[a]);
    };
    std::size_t lo = 0;
    while (lo < peak && smooth[lo + 1] < level) ++lo;
    std::size_t hi = n - 1;
    while (hi > peak && smooth[hi - 1] < level) --hi;
    const double f_lo = lo < peak ? cross(lo, lo + 1) : f[peak];
    const double f_hi = hi > peak ? cross(hi, hi - 1) : f[peak];
    const double step = (f.back() - f.front()) / static_cast<double>(n - 1);

    S21ModelParams p;
    p.omega_f = f[peak];
    p.kappa_f = std::max(f_hi - f_lo, 2.0 * step);
    p.background_k = slope;
    p.background_b = top;

    if (n_resonators > 0) {
        const auto dips = find_dips(f, detail::moving_average(y, 1), std::max(0.5, 5.0 * sigma));
        if (dips.size() < n_resonators) {
            std::ostringstream msg;
            msg << "expected " << n_resonators << " resonator dips but found " << dips.size();
            msg.setf(std::ios::fixed);
            for (const auto &d : dips) {
                msg << (&d == &dips.front() ? ": " : ", ") << std::setprecision(6)
                    << d.frequency_hz / 1e9 << " GHz (" << std::setprecision(2) << d.prominence_db
                    << " dB)";
            }
            throw InputError(msg.str());
        }
        auto bare = p;
        for (std::size_t k = 0; k < n_resonators; ++k) {
            const double fr = dips[k].frequency_hz;
            // Width of the region more than 3 dB under the bare peak sets g^2 ~ W kappa / 4.
            const auto i0 = static_cast<std::size_t>(std::lower_bound(f.begin(), f.end(), fr) - f.begin());
            auto below = [&](std::size_t i) {
                return y[i] < s21_db_with_background(bare, f[i]) - slope * f[i] - 3.0;
            };
            std::size_t a = i0, b = i0;
            while (a > 0 && below(a - 1)) --a;
            while (b + 1 < n && below(b + 1)) ++b;
            const double width = std::max(f[b] - f[a], 2.0 * step);
            p.resonators.push_back({fr, std::sqrt(width * p.kappa_f / 4.0), kDefaultResonatorLossHz});
        }
        std::sort(p.resonators.begin(), p.resonators.end(),
                  [](const auto &x, const auto &y2) { return x.omega_r < y2.omega_r; });
    }
    return p;
}

// ---------------------------------------------------------------------------
// Fit

struct FitResult {
    S21ModelParams params;
    S21ModelParams std_errors;
    double residual_rms = 0.0;  // dB
    bool converged = false;
    int iterations = 0;
    std::string status;
    std::vector<double> rms_history;
};

namespace detail {

// Scaled parameter vector: frequencies and rates in units of the initial
// linewidth, slope in dB per band span, offset in dB.
struct S21Packing {
    double f_ref, scale, span;
    std::size_t n;

    VectorXd pack(const S21ModelParams &p) const {
        VectorXd x(4 + 3 * n);
        x(0) = (p.omega_f - f_ref) / scale;
        x(1) = p.kappa_f / scale;
        for (std::size_t i = 0; i < n; ++i) {
            x(2 + 3 * i) = (p.resonators[i].omega_r - f_ref) / scale;
            x(3 + 3 * i) = p.resonators[i].g_fr / scale;
            x(4 + 3 * i) = p.resonators[i].gamma_r / scale;
        }
        x(2 + 3 * n) = p.background_k * span;
        x(3 + 3 * n) = p.background_b;
        return x;
    }
    S21ModelParams unpack(const VectorXd &x) const {
        S21ModelParams p;
        p.omega_f = f_ref + x(0) * scale;
        p.kappa_f = std::abs(x(1)) * scale;
        for (std::size_t i = 0; i < n; ++i)
            p.resonators.push_back({f_ref + x(2 + 3 * i) * scale, std::abs(x(3 + 3 * i)) * scale,
                                    std::abs(x(4 + 3 * i)) * scale});
        p.background_k = x(2 + 3 * n) / span;
        p.background_b = x(3 + 3 * n);
        return p;
    }
    S21ModelParams unpack_errors(const VectorXd &se) const {
        S21ModelParams e;
        e.omega_f = se(0) * scale;
        e.kappa_f = se(1) * scale;
        for (std::size_t i = 0; i < n; ++i)
            e.resonators.push_back({se(2 + 3 * i) * scale, se(3 + 3 * i) * scale, se(4 + 3 * i) * scale});
        e.background_k = se(2 + 3 * n) / span;
        e.background_b = se(3 + 3 * n);
        return e;
    }
};

}  // namespace detail

inline FitResult fit_s21(const SpectrumData &data, const S21ModelParams &initial,
                         const LeastSquaresOptions &opt = {}) {
    data.validate();
    initial.validate();
    const detail::S21Packing pk{initial.omega_f, initial.kappa_f,
                                std::max(data.frequencies.back() - data.frequencies.front(), 1.0),
                                initial.resonators.size()};
    const auto m = static_cast<Eigen::Index>(data.size());
    const ResidualFn residual = [&](const VectorXd &x) {
        const auto p = pk.unpack(x);
        VectorXd r(m);
        for (Eigen::Index i = 0; i < m; ++i)
            r(i) = s21_db_with_background(p, data.frequencies[i]) - data.s21_db[i];
        return r;
    };
    const auto ls = least_squares(residual, pk.pack(initial), opt);
    FitResult out;
    out.params = pk.unpack(ls.x);
    out.std_errors = pk.unpack_errors(ls.std_errors);
    out.residual_rms = ls.rms;
    out.converged = ls.converged;
    out.iterations = ls.iterations;
    out.status = ls.status;
    out.rms_history = ls.rms_history;
    return out;
}

// ---------------------------------------------------------------------------
// Reference modes used by the synthetic fixtures

namespace reference {

/// Fundamental filter mode, bare.
inline S21ModelParams mode_a() {
    S21ModelParams p;
    p.omega_f = 3.567e9;
    p.kappa_f = 5.4e6;
    return p;
}

/// Second-order mode dressed by six readout resonators. Resonator positions and
/// couplings are illustrative, not measured values.
inline S21ModelParams mode_b() {
    S21ModelParams p;
    p.omega_f = 6.583e9;
    p.kappa_f = 20.2e6;
    const double offsets[] = {-31e6, -19e6, -7.5e6, 6.5e6, 18e6, 29e6};
    const double g[] = {3.2e6, 3.8e6, 4.4e6, 4.1e6, 3.6e6, 3.0e6};
    for (int i = 0; i < 6; ++i) p.resonators.push_back({p.omega_f + offsets[i], g[i], kDefaultResonatorLossHz});
    return p;
}

inline constexpr double kNoiseDb = 0.1;

/// Probe grid of +-10 linewidths around the mode.
inline std::vector<double> probe_grid(const S21ModelParams &p, std::size_t points) {
    return linspace(p.omega_f - 10 * p.kappa_f, p.omega_f + 10 * p.kappa_f, points);
}

inline constexpr std::size_t kModeAPoints = 801;
inline constexpr std::size_t kModeBPoints = 2001;

}  // namespace reference

// ---------------------------------------------------------------------------
// I/O

inline nlohmann::json to_json(const S21ModelParams &p) {
    nlohmann::json res = nlohmann::json::array();
    for (const auto &r : p.resonators)
        res.push_back({{"omega_r_hz", r.omega_r}, {"g_fr_hz", r.g_fr}, {"gamma_r_hz", r.gamma_r}});
    return {{"omega_f_hz", p.omega_f},
            {"kappa_f_hz", p.kappa_f},
            {"resonators", res},
            {"background_k_db_per_hz", p.background_k},
            {"background_b_db", p.background_b}};
}

inline S21ModelParams s21_params_from_json(const nlohmann::json &j) {
    try {
        S21ModelParams p;
        p.omega_f = j.at("omega_f_hz").get<double>();
        p.kappa_f = j.at("kappa_f_hz").get<double>();
        p.background_k = j.value("background_k_db_per_hz", 0.0);
        p.background_b = j.value("background_b_db", 0.0);
        if (j.contains("resonators"))
            for (const auto &r : j.at("resonators"))
                p.resonators.push_back({r.at("omega_r_hz").get<double>(), r.at("g_fr_hz").get<double>(),
                                        r.value("gamma_r_hz", kDefaultResonatorLossHz)});
        p.validate();
        return p;
    } catch (const nlohmann::json::exception &ex) {
        throw InputError(std::string("malformed S21 parameters: ") + ex.what());
    }
}

inline nlohmann::json to_json(const FitResult &r) {
    return {{"params", to_json(r.params)},
            {"std_errors", to_json(r.std_errors)},
            {"residual_rms_db", r.residual_rms},
            {"converged", r.converged},
            {"iterations", r.iterations},
            {"status", r.status}};
}

/// CSV (f_hz, s21_db) or Touchstone (S21 of a .s2p, converted to dB).
inline SpectrumData load_spectrum(const std::string &path) {
    SpectrumData d;
    if (touchstone_ports_from_name(path) >= 2) {
        const auto ts = read_touchstone(path);
        for (std::size_t i = 0; i < ts.frequencies.size(); ++i) {
            d.frequencies.push_back(ts.frequencies[i]);
            const double mag = std::abs(ts.s[i](1, 0));
            d.s21_db.push_back(mag > 0 ? std::max(kDbFloor, 20 * std::log10(mag)) : kDbFloor);
        }
    } else {
        const auto t = read_csv(path);
        std::size_t col = 1;
        for (std::size_t c = 0; c < t.header.size(); ++c)
            if (t.header[c] == "s21_db") col = c;
        for (const auto &row : t.rows) {
            d.frequencies.push_back(t.number(row, 0));
            d.s21_db.push_back(t.number(row, col));
        }
    }
    d.validate();
    return d;
}

inline void write_spectrum_csv(std::ostream &out, const SpectrumData &d) {
    CsvWriter w(out);
    w.header({"f_hz", "s21_db"});
    for (std::size_t i = 0; i < d.size(); ++i) w.row({d.frequencies[i], d.s21_db[i]});
}

}  // namespace purcell
