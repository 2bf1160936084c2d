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

// Lossless transmission-line primitives and two-port chain (ABCD) algebra.
//
// All frequency arguments are ordinary frequencies in Hz; angular frequency is
// formed internally.

#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

#include "purcell/errors.hpp"

namespace purcell {

using cplx = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cplx kJ{0.0, 1.0};

/// |sin| or |cos| below this is treated as an exact zero when deciding poles.
inline constexpr double kPoleTolerance = 1e-12;

inline double angular(double frequency_hz) {
    return kTwoPi * frequency_hz;
}

/// A lossless TEM line section.
struct LineSpec {
    double z0 = 50.0;       // ohm
    double v_phase = 1e8;   // m/s
    double length = 0.0;    // m

    void validate() const {
        if (!(z0 > 0.0)) throw InputError("line z0 must be positive");
        if (!(v_phase > 0.0)) throw InputError("line phase velocity must be positive");
        if (!(length >= 0.0)) throw InputError("line length must be non-negative");
    }

    bool operator==(const LineSpec &) const = default;
};

/// A network-function value, or the marker that the evaluation point sits on a pole.
template <class T>
class PoleOr {
  public:
    PoleOr(T value) : value_(std::move(value)) {
    }
    static PoleOr pole() {
        return PoleOr();
    }

    bool is_pole() const {
        return !value_.has_value();
    }
    const T &value() const {
        if (!value_) throw std::logic_error("network function evaluated at a pole");
        return *value_;
    }
    T value_or(T fallback) const {
        return value_.value_or(std::move(fallback));
    }

  private:
    PoleOr() = default;
    std::optional<T> value_;
};

/// Phase constant beta = 2 pi f / v in rad/m.
inline double propagation_constant(double frequency_hz, double v_phase) {
    if (!(v_phase > 0.0)) throw std::domain_error("phase velocity must be positive");
    if (!(frequency_hz >= 0.0)) throw std::domain_error("frequency must be non-negative");
    return kTwoPi * frequency_hz / v_phase;
}

/// Electrical length beta*l of a line section at the given frequency.
inline double electrical_length(const LineSpec &line, double frequency_hz) {
    return propagation_constant(frequency_hz, line.v_phase) * line.length;
}

/// Chain matrix [V1; I1] = [[a, b], [c, d]] [V2; I2] with I2 leaving port 2.
struct AbcdMatrix {
    cplx a{1.0}, b{0.0}, c{0.0}, d{1.0};

    static AbcdMatrix identity() {
        return {};
    }
    cplx determinant() const {
        return a * d - b * c;
    }
    /// Driving-point impedance at port 1 with port 2 open.
    PoleOr<cplx> open_input_impedance() const {
        if (std::abs(c) == 0.0) return PoleOr<cplx>::pole();
        return a / c;
    }
    /// Driving-point impedance at port 1 with port 2 terminated in `load`.
    cplx input_impedance(cplx load) const {
        return (a * load + b) / (c * load + d);
    }
};

inline AbcdMatrix cascade(const AbcdMatrix &m1, const AbcdMatrix &m2) {
    return {m1.a * m2.a + m1.b * m2.c, m1.a * m2.b + m1.b * m2.d,
            m1.c * m2.a + m1.d * m2.c, m1.c * m2.b + m1.d * m2.d};
}

inline AbcdMatrix operator*(const AbcdMatrix &m1, const AbcdMatrix &m2) {
    return cascade(m1, m2);
}

inline AbcdMatrix abcd_series_impedance(cplx z) {
    return {1.0, z, 0.0, 1.0};
}

inline AbcdMatrix abcd_shunt_admittance(cplx y) {
    return {1.0, 0.0, y, 1.0};
}

/// Series capacitor: b = 1/(j w C). Throws at DC where the element is an open.
inline AbcdMatrix abcd_series_capacitor(double capacitance, double frequency_hz) {
    if (!(capacitance > 0.0)) throw std::domain_error("capacitance must be positive");
    if (!(frequency_hz > 0.0))
        throw std::domain_error("series capacitor has singular impedance at DC");
    return abcd_series_impedance(1.0 / (kJ * angular(frequency_hz) * capacitance));
}

inline AbcdMatrix abcd_line(const LineSpec &line, double frequency_hz) {
    line.validate();
    const double bl = electrical_length(line, frequency_hz);
    const double c = std::cos(bl);
    const double s = std::sin(bl);
    return {c, kJ * line.z0 * s, kJ * s / line.z0, c};
}

/// Input impedance of an open-circuited line, Z0 / (j tan(beta l)).
///
/// Zero at beta l = (2k+1) pi/2 (the quarter-wave short), pole at beta l = k pi.
inline PoleOr<cplx> open_stub_impedance(const LineSpec &line, double frequency_hz) {
    line.validate();
    const double bl = electrical_length(line, frequency_hz);
    const double s = std::sin(bl);
    if (std::abs(s) < kPoleTolerance) return PoleOr<cplx>::pole();
    return line.z0 * std::cos(bl) / (kJ * s);
}

/// Standing-wave voltage ratio V(z1)/V(z2) on an open-ended line, z measured
/// from the open end: cos(beta z1) / cos(beta z2). Only the line's phase
/// velocity enters.
inline PoleOr<cplx> open_line_voltage_ratio(double distance_1, double distance_2,
                                            const LineSpec &line, double frequency_hz) {
    if (!(distance_1 >= 0.0) || !(distance_2 >= 0.0))
        throw std::domain_error("distances from the open end must be non-negative");
    const double beta = propagation_constant(frequency_hz, line.v_phase);
    const double den = std::cos(beta * distance_2);
    if (std::abs(den) < kPoleTolerance) return PoleOr<cplx>::pole();
    return cplx(std::cos(beta * distance_1) / den);
}

}  // namespace purcell
