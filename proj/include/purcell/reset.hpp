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

// Resonant qubit-to-lossy-mode reset: closed-form residual excitation in the
// three damping regimes, an independent RK4 oracle, last-crossing reset
// times, curve fitting, and the f-e-g cascade.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "purcell/csv.hpp"
#include "purcell/errors.hpp"
#include "purcell/levmar.hpp"
#include "purcell/tline.hpp"

namespace purcell {

inline constexpr double kRegimeTolerance = 1e-9;

/// Frequencies are ordinary (Hz); the evaluators apply 2 pi.
struct ResetParams {
    double g_qf = 0.0;
    double kappa_f = 0.0;
    double p_exc_ss = 0.0;

    void validate() const {
        if (!(g_qf >= 0.0) || !std::isfinite(g_qf)) throw InputError("g_qf must be >= 0");
        if (!(kappa_f > 0.0) || !std::isfinite(kappa_f)) throw InputError("kappa_f must be positive");
        if (!(p_exc_ss >= 0.0 && p_exc_ss < 1.0)) throw InputError("p_exc_ss must lie in [0, 1)");
    }
};

enum class Regime { overdamped, critically_damped, underdamped };

inline const char *to_string(Regime r) {
    switch (r) {
    case Regime::overdamped: return "overdamped";
    case Regime::critically_damped: return "critically_damped";
    default: return "underdamped";
    }
}

inline Regime classify_regime(const ResetParams &p) {
    const double edge = p.kappa_f / 4.0;
    if (p.g_qf < edge * (1.0 - kRegimeTolerance)) return Regime::overdamped;
    if (p.g_qf > edge * (1.0 + kRegimeTolerance)) return Regime::underdamped;
    return Regime::critically_damped;
}

namespace detail {

// Qubit amplitude c_q(t) without the floor. x = M t with M the regime's
// (real) eigenfrequency offset; written through sinh(x)/x and sin(x)/x so the
// expression stays smooth through the critical point.
inline double reset_amplitude(const ResetParams &p, double t) {
    const double g = kTwoPi * p.g_qf, k = kTwoPi * p.kappa_f;
    const double q = k * t / 4.0;
    switch (classify_regime(p)) {
    case Regime::critically_damped: return std::exp(-q) * (1.0 + q);
    case Regime::underdamped: {
        const double m2 = std::sqrt(16.0 * g * g - k * k) / 4.0;
        const double y = m2 * t;
        const double sinc = y < 1e-8 ? 1.0 - y * y / 6.0 : std::sin(y) / y;
        return std::exp(-q) * (std::cos(y) + q * sinc);
    }
    default: {
        const double m1 = std::sqrt(k * k - 16.0 * g * g) / 4.0;
        const double x = m1 * t;
        if (x < 1.0) {
            const double sinhc = x < 1e-8 ? 1.0 + x * x / 6.0 : std::sinh(x) / x;
            return std::exp(-q) * (std::cosh(x) + q * sinhc);
        }
        // Exponential form avoids overflow of cosh/sinh at long times.
        const double a = k / (4.0 * m1);
        return 0.5 * (1.0 + a) * std::exp(x - q) + 0.5 * (1.0 - a) * std::exp(-x - q);
    }
    }
}

inline double with_floor(const ResetParams &p, double pe) {
    return p.p_exc_ss + (1.0 - p.p_exc_ss) * pe;
}

}  // namespace detail

/// Residual excitation p_ss + (1 - p_ss) |c_q(t)|^2.
inline double residual_excitation(const ResetParams &p, double t) {
    if (!(t >= 0.0)) throw InputError("time must be >= 0");
    const double c = detail::reset_amplitude(p, t);
    return detail::with_floor(p, std::clamp(c * c, 0.0, 1.0));
}

/// Same quantity from RK4 integration of
///   dc_q/dt = -i g c_f,  dc_f/dt = -i g c_q - (kappa/2) c_f,
/// starting in c_q = 1, with step <= 1 / (200 max(g, kappa)) in angular units.
inline double oracle_residual(const ResetParams &p, double t) {
    if (!(t >= 0.0)) throw InputError("time must be >= 0");
    using C = std::complex<double>;
    const double g = kTwoPi * p.g_qf, k = kTwoPi * p.kappa_f;
    const double rate = std::max(g, k);
    C cq = 1.0, cf = 0.0;
    if (t > 0.0 && rate > 0.0) {
        const double h_max = 1.0 / (200.0 * rate);
        const auto steps = static_cast<long long>(std::ceil(t / h_max));
        const double h = t / static_cast<double>(steps);
        const C mi(0.0, -1.0);
        auto dq = [&](C, C f) { return mi * g * f; };
        auto df = [&](C q, C f) { return mi * g * q - 0.5 * k * f; };
        for (long long i = 0; i < steps; ++i) {
            const C k1q = dq(cq, cf), k1f = df(cq, cf);
            const C k2q = dq(cq + 0.5 * h * k1q, cf + 0.5 * h * k1f);
            const C k2f = df(cq + 0.5 * h * k1q, cf + 0.5 * h * k1f);
            const C k3q = dq(cq + 0.5 * h * k2q, cf + 0.5 * h * k2f);
            const C k3f = df(cq + 0.5 * h * k2q, cf + 0.5 * h * k2f);
            const C k4q = dq(cq + h * k3q, cf + h * k3f);
            const C k4f = df(cq + h * k3q, cf + h * k3f);
            cq += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
            cf += h / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
        }
    }
    return detail::with_floor(p, std::norm(cq));
}

/// Upper envelope of the floor-free |c_q|^2; non-increasing for t >= 0.
inline double reset_envelope(const ResetParams &p, double t) {
    const double g = kTwoPi * p.g_qf, k = kTwoPi * p.kappa_f;
    const double q = k * t / 4.0;
    switch (classify_regime(p)) {
    case Regime::critically_damped: return std::exp(-2.0 * q) * (1.0 + q) * (1.0 + q);
    case Regime::underdamped: {
        const double m2 = std::sqrt(16.0 * g * g - k * k) / 4.0;
        const double a = 1.0 + k / (4.0 * m2);
        return std::exp(-2.0 * q) * a * a;
    }
    default: {
        const double m1 = std::sqrt(k * k - 16.0 * g * g) / 4.0;
        const double a = k / (4.0 * m1);
        const double c = 0.5 * (1.0 + a) + 0.5 * std::abs(1.0 - a);
        return c * c * std::exp(2.0 * (m1 * t - q));
    }
    }
}

/// Last time the residual excitation exceeds `threshold`: the smallest t with
/// p(t') <= threshold for every t' >= t. Dense sampling, then bisection to 0.1 ns.
inline double time_to_threshold(const ResetParams &p, double threshold,
                                double resolution_s = 0.1e-9) {
    p.validate();
    if (!(threshold > p.p_exc_ss))
        throw UnreachableError("threshold " + format_number(threshold) +
                               " is not above the steady-state floor " + format_number(p.p_exc_ss));
    if (threshold >= 1.0) return 0.0;
    if (p.g_qf == 0.0)
        throw UnreachableError("an uncoupled qubit never reaches threshold " + format_number(threshold));

    // Horizon beyond which the envelope keeps the curve under threshold.
    auto env = [&](double t) { return detail::with_floor(p, reset_envelope(p, t)); };
    const double rate = kTwoPi * std::max(p.g_qf, p.kappa_f);
    double horizon = 1.0 / rate;
    while (env(horizon) > threshold) {
        horizon *= 2.0;
        if (horizon > 1.0) throw UnreachableError("reset slower than one second");
    }

    const double dt = 1.0 / (100.0 * rate);
    const auto n = static_cast<std::size_t>(std::ceil(horizon / dt));
    if (n > 200000000) throw UnreachableError("reset time needs too many samples");
    std::size_t last = n + 1;  // last sample above threshold
    for (std::size_t i = 0; i <= n; ++i)
        if (residual_excitation(p, static_cast<double>(i) * dt) > threshold) last = i;
    if (last == n + 1) return 0.0;

    double lo = static_cast<double>(last) * dt, hi = static_cast<double>(last + 1) * dt;
    while (hi - lo > resolution_s) {
        const double mid = 0.5 * (lo + hi);
        (residual_excitation(p, mid) > threshold ? lo : hi) = mid;
    }
    return hi;
}

// ---------------------------------------------------------------------------
// Curve fitting

struct ResetFit {
    ResetParams params;
    ResetParams std_errors;
    Regime regime = Regime::underdamped;
    double residual_rms = 0.0;
    bool converged = false;
    int iterations = 0;
    std::string status;
};

/// Least squares over (g_qf, kappa_f, p_exc_ss). Starts from the best point of a
/// logarithmic (g, kappa) grid with the floor at the tail mean.
inline ResetFit fit_reset_curve(const std::vector<double> &times, const std::vector<double> &p_e,
                                const LeastSquaresOptions &opt = {}) {
    if (times.size() != p_e.size()) throw InputError("time and population columns differ in length");
    if (times.size() < 10) throw InputError("reset curve needs at least 10 points");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] >= 0.0)) throw InputError("reset times must be >= 0");
        if (!(p_e[i] >= 0.0 && p_e[i] <= 1.0)) throw InputError("populations must lie in [0, 1]");
    }
    const std::size_t m = times.size();
    const std::size_t tail = std::max<std::size_t>(1, m / 10);
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return times[a] < times[b]; });
    double floor0 = 0.0;
    for (std::size_t i = m - tail; i < m; ++i) floor0 += p_e[order[i]];
    floor0 = std::clamp(floor0 / static_cast<double>(tail), 0.0, 0.99);

    constexpr double unit = 1e6;  // fit in MHz
    auto make = [&](const VectorXd &x) {
        return ResetParams{std::abs(x(0)) * unit, std::max(std::abs(x(1)), 1e-9) * unit,
                           std::clamp(x(2), 0.0, 0.999999)};
    };
    const ResidualFn residual = [&](const VectorXd &x) {
        const auto p = make(x);
        VectorXd r(static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i)
            r(static_cast<Eigen::Index>(i)) = residual_excitation(p, times[i]) - p_e[i];
        return r;
    };

    VectorXd best(3);
    double best_ssr = std::numeric_limits<double>::infinity();
    constexpr int grid = 40;
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            VectorXd x(3);
            x << 0.05 * std::pow(2000.0, i / double(grid - 1)), 0.2 * std::pow(1000.0, j / double(grid - 1)),
                floor0;
            const double ssr = residual(x).squaredNorm();
            if (ssr < best_ssr) best_ssr = ssr, best = x;
        }

    const auto ls = least_squares(residual, best, opt);
    ResetFit out;
    out.params = make(ls.x);
    out.std_errors = {ls.std_errors(0) * unit, ls.std_errors(1) * unit, ls.std_errors(2)};
    out.regime = classify_regime(out.params);
    out.residual_rms = ls.rms;
    out.converged = ls.converged;
    out.iterations = ls.iterations;
    out.status = ls.status;
    return out;
}

// ---------------------------------------------------------------------------
// Cascade

struct QubitParams {
    double omega_eg_max = 0.0;   // Hz
    double anharmonicity = 0.0;  // Hz, positive magnitude (about E_C / h)
    double t1 = 0.0;             // s

    void validate() const {
        if (!(omega_eg_max > 0.0 && anharmonicity > 0.0 && t1 > 0.0))
            throw InputError("qubit frequency, anharmonicity and T1 must be positive");
    }
    /// f-e transition when the e-g transition sits at `eg_hz`.
    double fe_frequency(double eg_hz) const {
        return eg_hz - anharmonicity;
    }
    /// e-g frequency that puts the f-e transition on a mode at `mode_hz`.
    double eg_for_fe_resonance(double mode_hz) const {
        return mode_hz + anharmonicity;
    }
};

struct CascadeSchedule {
    double t_rst_f = 0.0;  // s
    double t_rst_e = 0.0;  // s
    double omega_rst_f = 0.0;  // Hz
    double omega_rst_e = 0.0;  // Hz
    QubitParams qubit;

    void validate() const {
        if (!(t_rst_f >= 0.0 && t_rst_e >= 0.0)) throw InputError("reset durations must be >= 0");
    }
    double total_duration() const {
        return t_rst_f + t_rst_e;
    }
};

enum class QutritState { g, e, f };

inline QutritState parse_state(const std::string &s) {
    if (s == "g") return QutritState::g;
    if (s == "e") return QutritState::e;
    if (s == "f") return QutritState::f;
    throw InputError("unknown state '" + s + "' (expected g, e or f)");
}

struct Populations {
    double p_g = 0.0, p_e = 0.0, p_f = 0.0;
    double duration = 0.0;  // s
};

/// f-e stage for t_rst_f, then e-g stage for t_rst_e. Each stage leaves the
/// fraction residual_excitation(stage, t) of its upper level in place and
/// moves the rest one level down.
inline Populations cascade_evaluate(const CascadeSchedule &s, const ResetParams &fe,
                                    const ResetParams &eg, QutritState initial) {
    s.validate();
    fe.validate();
    eg.validate();
    Populations p;
    (initial == QutritState::g ? p.p_g : initial == QutritState::e ? p.p_e : p.p_f) = 1.0;
    const double keep_f = residual_excitation(fe, s.t_rst_f);
    const double moved_f = p.p_f * (1.0 - keep_f);
    p.p_f -= moved_f;
    p.p_e += moved_f;
    const double keep_e = residual_excitation(eg, s.t_rst_e);
    const double moved_e = p.p_e * (1.0 - keep_e);
    p.p_e -= moved_e;
    p.p_g += moved_e;
    p.duration = s.total_duration();
    return p;
}

/// Leakage reduction: the f-e stage alone.
inline Populations lru_evaluate(double t_rst_f, const ResetParams &fe, QutritState initial) {
    CascadeSchedule s;
    s.t_rst_f = t_rst_f;
    return cascade_evaluate(s, fe, ResetParams{0.0, 1.0, 0.0}, initial);
}

// ---------------------------------------------------------------------------
// I/O

inline nlohmann::json to_json(const ResetParams &p) {
    return {{"g_qf_hz", p.g_qf}, {"kappa_f_hz", p.kappa_f}, {"p_exc_ss", p.p_exc_ss}};
}

inline ResetParams reset_params_from_json(const nlohmann::json &j) {
    try {
        ResetParams p{j.at("g_qf_hz").get<double>(), j.at("kappa_f_hz").get<double>(),
                      j.value("p_exc_ss", 0.0)};
        p.validate();
        return p;
    } catch (const nlohmann::json::exception &ex) {
        throw InputError(std::string("malformed reset parameters: ") + ex.what());
    }
}

inline nlohmann::json to_json(const CascadeSchedule &s) {
    return {{"t_rst_f_s", s.t_rst_f},
            {"t_rst_e_s", s.t_rst_e},
            {"omega_rst_f_hz", s.omega_rst_f},
            {"omega_rst_e_hz", s.omega_rst_e},
            {"qubit",
             {{"omega_eg_max_hz", s.qubit.omega_eg_max},
              {"anharmonicity_hz", s.qubit.anharmonicity},
              {"t1_s", s.qubit.t1}}}};
}

inline CascadeSchedule schedule_from_json(const nlohmann::json &j) {
    try {
        CascadeSchedule s;
        s.t_rst_f = j.value("t_rst_f_s", 0.0);
        s.t_rst_e = j.value("t_rst_e_s", 0.0);
        s.omega_rst_f = j.value("omega_rst_f_hz", 0.0);
        s.omega_rst_e = j.value("omega_rst_e_hz", 0.0);
        if (j.contains("qubit")) {
            const auto &q = j.at("qubit");
            s.qubit = {q.value("omega_eg_max_hz", 0.0), q.value("anharmonicity_hz", 0.0),
                       q.value("t1_s", 0.0)};
        }
        s.validate();
        return s;
    } catch (const nlohmann::json::exception &ex) {
        throw InputError(std::string("malformed schedule: ") + ex.what());
    }
}

struct ResetCurve {
    std::vector<double> times;  // s
    std::vector<double> p_e;
};

/// Model curve plus Gaussian noise, clipped to [0, 1] like a measured population.
inline ResetCurve synthesize_reset_curve(const ResetParams &p, const std::vector<double> &times,
                                         double noise = 0.0, std::uint64_t seed = 0) {
    ResetCurve c;
    c.times = times;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (double t : times) {
        const double v = residual_excitation(p, t) + (noise > 0.0 ? noise * n01(rng) : 0.0);
        c.p_e.push_back(std::clamp(v, 0.0, 1.0));
    }
    return c;
}

inline void write_reset_curve_csv(std::ostream &out, const ResetCurve &c) {
    CsvWriter w(out);
    w.header({"t_seconds", "p_e"});
    for (std::size_t i = 0; i < c.times.size(); ++i) w.row({c.times[i], c.p_e[i]});
}

inline ResetCurve load_reset_curve(const std::string &path) {
    const auto t = read_csv(path);
    ResetCurve c;
    for (const auto &row : t.rows) {
        c.times.push_back(t.number(row, 0));
        c.p_e.push_back(t.number(row, 1));
    }
    if (c.times.empty()) throw InputError("reset curve '" + path + "' has no rows");
    return c;
}

inline nlohmann::json to_json(const ResetFit &f) {
    return {{"params", to_json(f.params)},
            {"std_errors", to_json(f.std_errors)},
            {"regime", to_string(f.regime)},
            {"residual_rms", f.residual_rms},
            {"converged", f.converged},
            {"iterations", f.iterations},
            {"status", f.status}};
}

inline nlohmann::json to_json(const Populations &p) {
    return {{"p_g", p.p_g}, {"p_e", p.p_e}, {"p_f", p.p_f}, {"duration_s", p.duration}};
}

/// Reset fit values reported for the devices this tool was built around.
namespace reference {
inline constexpr ResetParams kEgReset{3.9e6, 8.5e6, 0.008};
inline constexpr ResetParams kFeReset{5.6e6, 9.1e6, 0.071};
inline constexpr QubitParams kQubit{4.621e9, 211e6, 58e-6};
inline constexpr double kFeFirstMinimum = 64e-9;
inline constexpr double kLruDuration = 62e-9;
inline constexpr double kEgResetDuration = 242e-9;
inline constexpr double kLruResidual = 0.061;
/// Sampling of the synthetic reset curves: 0 to 2 us in 2 ns steps.
inline std::vector<double> curve_times() {
    std::vector<double> t(1001);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = 2e-9 * static_cast<double>(i);
    return t;
}
inline constexpr double kCurveNoise = 0.005;
}  // namespace reference

}  // namespace purcell
