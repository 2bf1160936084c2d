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

// Three-segment multi-mode Purcell filter: netlist construction, the closed-form
// transfer impedance of the bare line, notch placement and Purcell-limited T_p.
//
// Node layout of the full model:
//
//   in --C_in-- e1 ==l_p1== a ==l_p2== b ==l_p3== e4 (open)
//                           |          |
//                 C_qf  C_fr|          C_out -- out
//                   |       r1 ==resonator== gnd
//                   q --C_qr-- r1
//                   |
//                  C_q
//                   |
//                  gnd
//
// Ports: "in" (1) and "out" (2) carry the feedline reference impedance,
// "qubit" (3) is an unterminated probe.

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "purcell/csv.hpp"
#include "purcell/errors.hpp"
#include "purcell/netlist.hpp"
#include "purcell/network.hpp"
#include "purcell/tline.hpp"

namespace purcell {

inline constexpr double kSpeedOfLight = 299792458.0;
/// Effective phase velocity of the default coplanar lines, about c / sqrt(6.35).
inline constexpr double kDefaultPhaseVelocity = 1.19e8;
inline constexpr double kReadoutResonatorHz = 6.486e9;
inline constexpr double kStubNotchHz = 5.0e9;
/// Re[Y] below this is reported as beyond what the model can resolve.
inline constexpr double kReYCeiling = 1e-15;

enum class Variant { with_stub, without_stub };

inline const char *to_string(Variant v) {
    return v == Variant::with_stub ? "with_stub" : "without_stub";
}
inline Variant parse_variant(const std::string &s) {
    if (s == "with_stub") return Variant::with_stub;
    if (s == "without_stub") return Variant::without_stub;
    throw InputError("unknown variant '" + s + "' (expected with_stub or without_stub)");
}

struct FilterGeometry {
    double l_p1 = 0.0;  // m, open end to the qubit tap
    double l_p2 = 0.0;  // m, qubit tap to the output tap
    double l_p3 = 0.0;  // m, output tap to the open end (the stub)
    LineSpec line{50.0, kDefaultPhaseVelocity, 0.0};
    double c_in = 0.0;
    double c_out = 0.0;
    double c_qf = 0.0;
    double c_qr = 0.0;
    double c_fr = 0.0;
    double c_q = 0.0;
    LineSpec resonator{50.0, kDefaultPhaseVelocity, 0.0};
    double port_z0 = 50.0;

    double total_length() const {
        return l_p1 + l_p2 + l_p3;
    }

    void validate() const {
        for (double l : {l_p1, l_p2, l_p3})
            if (!(l >= 0.0) || !std::isfinite(l)) throw InputError("segment lengths must be >= 0");
        if (!(total_length() > 0.0)) throw InputError("total filter length must be positive");
        for (double c : {c_in, c_out, c_qf, c_qr, c_fr, c_q})
            if (!(c > 0.0) || !std::isfinite(c)) throw InputError("capacitances must be positive");
        line.validate();
        resonator.validate();
        if (!(resonator.length > 0.0)) throw InputError("resonator length must be positive");
        if (!(port_z0 > 0.0)) throw InputError("port impedance must be positive");
    }

    /// Moves the qubit tap so that l_p1 = ratio * l_p, keeping l_p and l_p3.
    FilterGeometry with_tap_ratio(double ratio) const {
        FilterGeometry g = *this;
        const double lp = total_length();
        g.l_p1 = ratio * lp;
        g.l_p2 = lp - g.l_p1 - l_p3;
        if (g.l_p2 < 0.0) throw InputError("tap ratio leaves no room for the middle segment");
        return g;
    }
};

inline FilterGeometry default_geometry() {
    FilterGeometry g;
    const double v = kDefaultPhaseVelocity;
    const double lp = 16.59e-3;
    g.l_p3 = v / (4.0 * kStubNotchHz);
    g.l_p1 = 0.01 * lp;
    g.l_p2 = lp - g.l_p1 - g.l_p3;
    g.c_in = 0.61e-15;
    g.c_out = 123e-15;
    g.c_qf = 1.75e-15;
    g.c_qr = 15.3e-15;
    g.c_fr = 4.95e-15;
    g.c_q = 90e-15;
    g.resonator = {50.0, v, v / (4.0 * kReadoutResonatorHz)};
    return g;
}

inline std::vector<std::string> preset_names() {
    return {"default", "mid_tap"};
}

/// "default": tap near the open end (l_p1/l_p = 0.01).
/// "mid_tap": same filter with the tap moved to l_p1/l_p = 0.39.
inline FilterGeometry preset_geometry(const std::string &name) {
    if (name == "default") return default_geometry();
    if (name == "mid_tap") return default_geometry().with_tap_ratio(0.39);
    throw InputError("unknown preset '" + name + "'");
}

inline nlohmann::json to_json(const FilterGeometry &g) {
    auto line = [](const LineSpec &l) {
        return nlohmann::json{{"z0", l.z0}, {"v_phase", l.v_phase}, {"length", l.length}};
    };
    nlohmann::json j{{"l_p1", g.l_p1},   {"l_p2", g.l_p2}, {"l_p3", g.l_p3},
                     {"z0", g.line.z0},  {"v_phase", g.line.v_phase},
                     {"c_in", g.c_in},   {"c_out", g.c_out}, {"c_qf", g.c_qf},
                     {"c_qr", g.c_qr},   {"c_fr", g.c_fr},   {"c_q", g.c_q},
                     {"port_z0", g.port_z0}};
    j["resonator"] = line(g.resonator);
    return j;
}

/// Reads a geometry. Missing keys keep the default preset's value, so a file may
/// override only what it changes. A "preset" key selects the base.
inline FilterGeometry geometry_from_json(const nlohmann::json &j) {
    try {
        FilterGeometry g = preset_geometry(j.value("preset", std::string("default")));
        auto get = [&](const char *key, double &dst) {
            if (j.contains(key)) dst = j.at(key).get<double>();
        };
        get("l_p1", g.l_p1);
        get("l_p2", g.l_p2);
        get("l_p3", g.l_p3);
        get("z0", g.line.z0);
        get("v_phase", g.line.v_phase);
        get("c_in", g.c_in);
        get("c_out", g.c_out);
        get("c_qf", g.c_qf);
        get("c_qr", g.c_qr);
        get("c_fr", g.c_fr);
        get("c_q", g.c_q);
        get("port_z0", g.port_z0);
        if (j.contains("resonator")) {
            const auto &r = j.at("resonator");
            g.resonator.z0 = r.value("z0", g.resonator.z0);
            g.resonator.v_phase = r.value("v_phase", g.resonator.v_phase);
            g.resonator.length = r.value("length", g.resonator.length);
        }
        g.validate();
        return g;
    } catch (const nlohmann::json::exception &ex) {
        throw InputError(std::string("malformed geometry JSON: ") + ex.what());
    }
}

inline FilterGeometry load_geometry(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open geometry '" + path + "'");
    try {
        return geometry_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error &ex) {
        throw InputError("geometry '" + path + "' is not valid JSON: " + ex.what());
    }
}

// ---------------------------------------------------------------------------
// Netlists

namespace detail {

// Lays the three segments e1 - a - b - e4, skipping zero-length ones. Returns
// the node names of the qubit tap and the output tap.
inline std::pair<std::string, std::string> lay_filter_line(Netlist &net, const LineSpec &line,
                                                           double l1, double l2, double l3) {
    auto seg = [&](const char *name, const std::string &a, const std::string &b, double len) {
        LineSpec s = line;
        s.length = len;
        net.add_tline(name, a, b, s);
    };
    const std::string a = "a", b = l2 > 0.0 ? "b" : "a";
    net.add_node(a);
    net.add_node(b);
    if (l1 > 0.0) {
        net.add_node("e1");
        seg("TLp1", "e1", a, l1);
    }
    if (l2 > 0.0) seg("TLp2", a, b, l2);
    if (l3 > 0.0) {
        net.add_node("e4");
        seg("TLp3", b, "e4", l3);
    }
    return {a, b};
}

}  // namespace detail

/// Full filter circuit. `without_stub` folds l_p3 into l_p2 so the output
/// capacitor sits at the open end; total length is unchanged.
inline Netlist build_netlist(const FilterGeometry &geom, Variant variant) {
    geom.validate();
    double l1 = geom.l_p1, l2 = geom.l_p2, l3 = geom.l_p3;
    if (variant == Variant::without_stub) {
        l2 += l3;
        l3 = 0.0;
    }
    Netlist net;
    net.add_node("in");
    net.add_node("out");
    net.add_node("q");
    net.add_node("r1");
    const auto [a, b] = detail::lay_filter_line(net, geom.line, l1, l2, l3);
    net.add_capacitor("Cin", "in", l1 > 0.0 ? "e1" : a, geom.c_in);
    net.add_capacitor("Cout", b, "out", geom.c_out);
    net.add_capacitor("Cq", "q", kGround, geom.c_q);
    net.add_capacitor("Cqf", "q", a, geom.c_qf);
    net.add_capacitor("Cqr", "q", "r1", geom.c_qr);
    net.add_capacitor("Cfr", "r1", a, geom.c_fr);
    net.add_tline("TLres", "r1", kGround, geom.resonator);
    net.add_port("in", "in", geom.port_z0);
    net.add_port("out", "out", geom.port_z0);
    net.add_port("qubit", "q");
    net.validate();
    return net;
}

/// The coupling-free line alone: both ends open, a current probe at the qubit
/// tap ("qubit") and a voltage probe at the output tap ("out").
inline Netlist build_bare_line_netlist(const FilterGeometry &geom) {
    geom.validate();
    Netlist net;
    const auto [a, b] = detail::lay_filter_line(net, geom.line, geom.l_p1, geom.l_p2, geom.l_p3);
    net.add_port("out", b);
    net.add_port("qubit", a);
    net.validate();
    return net;
}

/// Transfer impedance V_out / I_qubit of the bare open-ended line,
///   Z23 = -j Z0 cos(b l_p1) cos(b l_p3) / sin(b l_p).
/// Zeros where either end segment is a quarter wave; poles at the line's
/// half-wave resonances.
inline PoleOr<cplx> z23_closed_form(const FilterGeometry &geom, double frequency_hz) {
    if (!(frequency_hz > 0.0)) throw InputError("frequency must be positive");
    const double beta = propagation_constant(frequency_hz, geom.line.v_phase);
    const double den = std::sin(beta * geom.total_length());
    if (std::abs(den) < kPoleTolerance) return PoleOr<cplx>::pole();
    return cplx(-kJ * geom.line.z0 * std::cos(beta * geom.l_p1) * std::cos(beta * geom.l_p3) /
                den);
}

enum class NotchFamily { stub, input_segment };

inline const char *to_string(NotchFamily f) {
    return f == NotchFamily::stub ? "stub" : "input_segment";
}

struct Notch {
    double frequency_hz;
    NotchFamily family;
};

/// Quarter-wave frequencies of l_p3 (stub) and l_p1 (input_segment) inside the band.
inline std::vector<Notch> notch_frequencies(const FilterGeometry &geom, double start_hz,
                                            double stop_hz) {
    if (!(stop_hz >= start_hz) || !(start_hz >= 0.0)) throw InputError("band must be nonempty");
    std::vector<Notch> out;
    auto family = [&](double length, NotchFamily fam) {
        if (!(length > 0.0)) return;
        const double f0 = geom.line.v_phase / (4.0 * length);
        for (int k = 0;; ++k) {
            const double f = (2 * k + 1) * f0;
            if (f > stop_hz) break;
            if (f >= start_hz) out.push_back({f, fam});
        }
    };
    family(geom.l_p3, NotchFamily::stub);
    family(geom.l_p1, NotchFamily::input_segment);
    std::sort(out.begin(), out.end(),
              [](const Notch &x, const Notch &y) { return x.frequency_hz < y.frequency_hz; });
    return out;
}

/// S21 from "in" to "out" of the full filter.
inline cplx filter_s21(const Netlist &net, double frequency_hz) {
    const auto sp = s_parameters(net, frequency_hz);
    Eigen::Index i_in = -1, i_out = -1;
    for (std::size_t k = 0; k < sp.ports.size(); ++k) {
        if (sp.ports[k] == "in") i_in = static_cast<Eigen::Index>(k);
        if (sp.ports[k] == "out") i_out = static_cast<Eigen::Index>(k);
    }
    if (i_in < 0 || i_out < 0) throw InputError("netlist lacks terminated 'in' and 'out' ports");
    return sp.s(i_out, i_in);
}

// ---------------------------------------------------------------------------
// Purcell-limited lifetime

enum class ReYMethod { full_admittance, output_power };

inline const char *to_string(ReYMethod m) {
    return m == ReYMethod::full_admittance ? "full_admittance" : "output_power";
}
inline ReYMethod parse_method(const std::string &s) {
    if (s == "full_admittance") return ReYMethod::full_admittance;
    if (s == "output_power") return ReYMethod::output_power;
    throw InputError("unknown method '" + s + "' (expected full_admittance or output_power)");
}

enum class TpFlag { ok = 0, above_ceiling = 1, gap = 2 };

struct TpCurve {
    Variant variant = Variant::with_stub;
    ReYMethod method = ReYMethod::full_admittance;
    std::vector<double> frequencies;
    std::vector<double> tp;  // s; at the ceiling bound when flagged, NaN for gaps
    std::vector<TpFlag> flags;

    std::size_t size() const {
        return frequencies.size();
    }
};

inline double re_y(const Netlist &net, double frequency_hz, ReYMethod method) {
    if (method == ReYMethod::full_admittance)
        return driving_point_admittance(net, "qubit", frequency_hz).real();
    return re_y_via_output_power(net, "qubit", "out", frequency_hz);
}

/// T_p = C_q / Re[Y] over a sweep, taking Re[Y] seen by the qubit port.
inline TpCurve tp_curve(const Netlist &net, double c_q, const FrequencySweep &band,
                        ReYMethod method, Variant variant = Variant::with_stub) {
    if (!(c_q > 0.0)) throw InputError("c_q must be positive");
    const auto pts = sweep(net, band, [&](const Netlist &n, double f) { return re_y(n, f, method); });
    TpCurve c;
    c.variant = variant;
    c.method = method;
    for (const auto &p : pts) {
        c.frequencies.push_back(p.frequency_hz);
        if (!p.value) {
            c.tp.push_back(std::numeric_limits<double>::quiet_NaN());
            c.flags.push_back(TpFlag::gap);
        } else if (*p.value < kReYCeiling) {
            c.tp.push_back(c_q / kReYCeiling);
            c.flags.push_back(TpFlag::above_ceiling);
        } else {
            c.tp.push_back(c_q / *p.value);
            c.flags.push_back(TpFlag::ok);
        }
    }
    return c;
}

inline TpCurve tp_curve(const FilterGeometry &geom, Variant variant, const FrequencySweep &band,
                        ReYMethod method = ReYMethod::full_admittance) {
    return tp_curve(build_netlist(geom, variant), geom.c_q, band, method, variant);
}

inline void write_tp_csv(std::ostream &out, const TpCurve &c) {
    CsvWriter w(out);
    w.header({"f_hz", "tp_seconds", "ceiling_flag"});
    for (std::size_t i = 0; i < c.size(); ++i)
        w.row({c.frequencies[i], c.tp[i], static_cast<double>(static_cast<int>(c.flags[i]))});
}

/// Widest run of consecutive points with T_p >= threshold (flagged points count as
/// above) that contains `anchor_hz`; returns {start, stop} or nullopt.
inline std::optional<std::pair<double, double>> band_above(const TpCurve &c, double threshold_s,
                                                           double anchor_hz) {
    if (c.size() == 0) return std::nullopt;
    auto above = [&](std::size_t i) {
        return c.flags[i] == TpFlag::above_ceiling ||
               (c.flags[i] == TpFlag::ok && c.tp[i] >= threshold_s);
    };
    std::size_t k = 0;
    for (std::size_t i = 1; i < c.size(); ++i)
        if (std::abs(c.frequencies[i] - anchor_hz) < std::abs(c.frequencies[k] - anchor_hz)) k = i;
    if (!above(k)) return std::nullopt;
    std::size_t lo = k, hi = k;
    while (lo > 0 && above(lo - 1)) --lo;
    while (hi + 1 < c.size() && above(hi + 1)) ++hi;
    return std::pair{c.frequencies[lo], c.frequencies[hi]};
}

/// All runs of T_p >= threshold, as {start, stop} pairs in ascending order.
inline std::vector<std::pair<double, double>> bands_above(const TpCurve &c, double threshold_s) {
    std::vector<std::pair<double, double>> out;
    std::optional<std::size_t> open;
    for (std::size_t i = 0; i <= c.size(); ++i) {
        const bool up = i < c.size() && (c.flags[i] == TpFlag::above_ceiling ||
                                         (c.flags[i] == TpFlag::ok && c.tp[i] >= threshold_s));
        if (up && !open) open = i;
        if (!up && open) {
            out.emplace_back(c.frequencies[*open], c.frequencies[i - 1]);
            open.reset();
        }
    }
    return out;
}

/// Summed width of all runs above threshold, in Hz.
inline double total_band_above(const TpCurve &c, double threshold_s) {
    double w = 0.0;
    for (const auto &[lo, hi] : bands_above(c, threshold_s)) w += hi - lo;
    return w;
}

/// Dispersive single-mode estimate Gamma = kappa (g / Delta)^2, all in Hz.
inline double single_mode_purcell_rate(double g_hz, double kappa_hz, double delta_hz) {
    if (delta_hz == 0.0) throw std::domain_error("detuning must be nonzero");
    const double r = g_hz / delta_hz;
    return kappa_hz * r * r;
}

}  // namespace purcell
