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

// Frequency-domain nodal analysis of netlists built from lumped elements and
// lossless line sections.
//
// Line sections are stamped with their exact two-port admittance
//   y11 = y22 = -j cot(beta l) / Z0,  y12 = y21 = j / (Z0 sin(beta l)),
// so results are exact up to floating point at every frequency except the
// isolated points where sin(beta l) = 0.
//
// Port conventions:
//   * transfer_impedance / z_parameters: all ports open (pure current injection).
//   * solve_ac / driving_point_admittance / re_y_via_output_power: the driven
//     port sees a unit voltage source; every other port that has a reference
//     impedance is terminated in it; probe ports stay open.
//   * s_parameters: every port with a reference impedance, power-wave
//     normalised. Equal to (Z - Zref)(Z + Zref)^-1 whenever Z exists.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "purcell/errors.hpp"
#include "purcell/netlist.hpp"
#include "purcell/parallel.hpp"
#include "purcell/tline.hpp"

namespace purcell {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Systems whose estimated condition number exceeds this are reported singular.
inline constexpr double kMaxConditionNumber = 1e12;
/// Relative KCL residual every solution must meet.
inline constexpr double kKclTolerance = 1e-10;

namespace detail {

inline std::string hz_text(double f) {
    std::ostringstream os;
    os.precision(10);
    os << f << " Hz";
    return os.str();
}

inline void stamp_branch(CMatrix &y, Eigen::VectorXd &mag, int a, int b, cplx admittance) {
    if (a >= 0) mag(a) += std::abs(admittance);
    if (b >= 0) mag(b) += std::abs(admittance);
    if (a >= 0) y(a, a) += admittance;
    if (b >= 0) y(b, b) += admittance;
    if (a >= 0 && b >= 0) {
        y(a, b) -= admittance;
        y(b, a) -= admittance;
    }
}

/// LU of a symmetrically equilibrated matrix with a condition-number guard.
/// `magnitude` holds, per row, the summed magnitude of the element admittances
/// stamped there; scaling by it exposes cancellation at undamped resonances,
/// which scaling by the net diagonal would hide.
class Factorization {
  public:
    Factorization(const CMatrix &m, double frequency_hz, const Eigen::VectorXd &magnitude)
        : scale_(m.rows()) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            const double d = std::max(magnitude(i), std::abs(m(i, i)));
            scale_(i) = d > 0.0 ? 1.0 / std::sqrt(d) : 1.0;
        }
        const CMatrix scaled = scale_.asDiagonal() * m * scale_.asDiagonal();
        lu_.compute(scaled);
        // Condition number relative to the element magnitudes, whose scaled
        // norm is of order one.
        const double norm = scaled.cwiseAbs().colwise().sum().maxCoeff();
        const double rcond = lu_.rcond() * norm;
        if (!(rcond * kMaxConditionNumber >= 1.0))
            throw SingularNetworkError("network matrix is singular at " + hz_text(frequency_hz) +
                                           " (estimated condition number " +
                                           std::to_string(rcond > 0 ? 1.0 / rcond : INFINITY) +
                                           ")",
                                       frequency_hz);
    }

    CMatrix solve(const CMatrix &rhs) const {
        const CMatrix x = lu_.solve(scale_.asDiagonal() * rhs);
        return scale_.asDiagonal() * x;
    }

  private:
    Eigen::VectorXd scale_;
    Eigen::PartialPivLU<CMatrix> lu_;
};

inline int port_node(const Netlist &net, const Port &p) {
    return net.node_index(p.node);
}

}  // namespace detail

/// Nodal admittance matrix over all non-ground nodes, in declaration order.
/// When `magnitude` is given it receives the per-node sum of |element admittance|.
inline CMatrix assemble_admittance(const Netlist &net, double frequency_hz,
                                   Eigen::VectorXd *magnitude = nullptr) {
    if (!(frequency_hz > 0.0)) throw InputError("analysis frequency must be positive");
    const auto n = static_cast<Eigen::Index>(net.node_count());
    CMatrix y = CMatrix::Zero(n, n);
    Eigen::VectorXd mag = Eigen::VectorXd::Zero(n);
    const double w = angular(frequency_hz);
    for (const auto &e : net.elements()) {
        const int a = net.node_index(e.node_a);
        const int b = net.node_index(e.node_b);
        std::visit(
            [&](const auto &k) {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Resistor>) {
                    detail::stamp_branch(y, mag, a, b, 1.0 / k.ohms);
                } else if constexpr (std::is_same_v<K, Capacitor>) {
                    detail::stamp_branch(y, mag, a, b, kJ * w * k.farads);
                } else if constexpr (std::is_same_v<K, Inductor>) {
                    detail::stamp_branch(y, mag, a, b, 1.0 / (kJ * w * k.henries));
                } else {
                    const double bl = electrical_length(k.spec(), frequency_hz);
                    const double s = std::sin(bl);
                    if (std::abs(s) < kPoleTolerance)
                        throw SingularNetworkError("line '" + e.name +
                                                       "' is a whole number of half "
                                                       "wavelengths at " +
                                                       detail::hz_text(frequency_hz),
                                                   frequency_hz);
                    const cplx y11 = -kJ * std::cos(bl) / (k.z0 * s);
                    const cplx y12 = kJ / (k.z0 * s);
                    if (a >= 0) y(a, a) += y11, mag(a) += std::abs(y11) + std::abs(y12);
                    if (b >= 0) y(b, b) += y11, mag(b) += std::abs(y11) + std::abs(y12);
                    if (a >= 0 && b >= 0) {
                        y(a, b) += y12;
                        y(b, a) += y12;
                    }
                }
            },
            e.kind);
    }
    if (magnitude) *magnitude = std::move(mag);
    return y;
}

/// Node voltages for a unit voltage drive at one port.
struct AcSolution {
    double frequency_hz = 0.0;
    std::string drive_port;
    std::vector<std::string> node_names;
    std::vector<cplx> node_voltages;
    cplx source_current;        // A, flowing from the source into the network
    double kcl_residual = 0.0;  // relative

    cplx voltage(const std::string &node) const {
        if (node == kGround) return 0.0;
        for (std::size_t i = 0; i < node_names.size(); ++i)
            if (node_names[i] == node) return node_voltages[i];
        throw InputError("unknown node '" + node + "'");
    }
};

/// Drives `drive_port` with 1 V; other terminated ports see their reference impedance.
inline AcSolution solve_ac(const Netlist &net, const std::string &drive_port,
                           double frequency_hz) {
    const Port &drive = net.port(drive_port);
    Eigen::VectorXd mag;
    CMatrix y = assemble_admittance(net, frequency_hz, &mag);
    for (const auto &p : net.ports()) {
        if (p.name == drive.name || !p.terminated()) continue;
        const int k = detail::port_node(net, p);
        y(k, k) += 1.0 / *p.z_ref;
        mag(k) += 1.0 / *p.z_ref;
    }
    const int d = detail::port_node(net, drive);
    const auto n = y.rows();

    std::vector<Eigen::Index> rest;
    for (Eigen::Index i = 0; i < n; ++i)
        if (i != d) rest.push_back(i);
    const auto m = static_cast<Eigen::Index>(rest.size());

    CVector v = CVector::Zero(n);
    v(d) = 1.0;
    double residual = 0.0;
    if (m > 0) {
        CMatrix yrr(m, m);
        CVector rhs(m);
        Eigen::VectorXd mrr(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            rhs(i) = -y(rest[i], d);
            mrr(i) = mag(rest[i]);
            for (Eigen::Index j = 0; j < m; ++j) yrr(i, j) = y(rest[i], rest[j]);
        }
        detail::Factorization lu(yrr, frequency_hz, mrr);
        const CVector vr = lu.solve(rhs);
        for (Eigen::Index i = 0; i < m; ++i) v(rest[i]) = vr(i);
        const double scale = yrr.cwiseAbs().rowwise().sum().maxCoeff() * vr.cwiseAbs().maxCoeff() +
                             rhs.cwiseAbs().maxCoeff();
        residual = scale > 0 ? (yrr * vr - rhs).cwiseAbs().maxCoeff() / scale : 0.0;
        if (!(residual < kKclTolerance))
            throw SingularNetworkError("KCL residual " + std::to_string(residual) +
                                           " exceeds tolerance at " +
                                           detail::hz_text(frequency_hz),
                                       frequency_hz);
    }

    AcSolution sol;
    sol.frequency_hz = frequency_hz;
    sol.drive_port = drive.name;
    sol.node_names = net.nodes();
    sol.node_voltages.assign(v.data(), v.data() + n);
    sol.source_current = y.row(d) * v;
    sol.kcl_residual = residual;
    return sol;
}

/// Open-circuit impedance matrix over the named ports (all ports open).
inline CMatrix z_parameters(const Netlist &net, const std::vector<std::string> &port_names,
                            double frequency_hz) {
    Eigen::VectorXd mag;
    const CMatrix y = assemble_admittance(net, frequency_hz, &mag);
    const auto np = static_cast<Eigen::Index>(port_names.size());
    CMatrix inject = CMatrix::Zero(y.rows(), np);
    std::vector<int> rows;
    for (Eigen::Index k = 0; k < np; ++k) {
        rows.push_back(detail::port_node(net, net.port(port_names[k])));
        inject(rows.back(), k) = 1.0;
    }
    detail::Factorization lu(y, frequency_hz, mag);
    const CMatrix v = lu.solve(inject);
    CMatrix z(np, np);
    for (Eigen::Index i = 0; i < np; ++i)
        for (Eigen::Index k = 0; k < np; ++k) z(i, k) = v(rows[i], k);
    return z;
}

/// V(v_port) per unit current injected at i_port with every port open.
/// Returns the pole marker where the network matrix is singular.
inline PoleOr<cplx> transfer_impedance(const Netlist &net, const std::string &v_port,
                                       const std::string &i_port, double frequency_hz) {
    const int vi = detail::port_node(net, net.port(v_port));
    const int ii = detail::port_node(net, net.port(i_port));
    try {
        Eigen::VectorXd mag;
        const CMatrix y = assemble_admittance(net, frequency_hz, &mag);
        CMatrix inject = CMatrix::Zero(y.rows(), 1);
        inject(ii, 0) = 1.0;
        detail::Factorization lu(y, frequency_hz, mag);
        return cplx(lu.solve(inject)(vi, 0));
    } catch (const SingularNetworkError &) {
        return PoleOr<cplx>::pole();
    }
}

/// Y = I/V seen from `port` into the network (other terminated ports loaded).
inline cplx driving_point_admittance(const Netlist &net, const std::string &port,
                                     double frequency_hz) {
    return solve_ac(net, port, frequency_hz).source_current;
}

/// Re[Y] estimated from the power delivered to a terminated output port,
/// |V_out / V_source|^2 / Z_out. Accurate when the output dominates the
/// dissipation (weakly coupled input, C_out >> C_in).
inline double re_y_via_output_power(const Netlist &net, const std::string &source_port,
                                    const std::string &out_port, double frequency_hz) {
    const Port &out = net.port(out_port);
    if (!out.terminated())
        throw InputError("output port '" + out_port + "' has no reference termination");
    if (out.name == source_port) throw InputError("source and output port must differ");
    const AcSolution sol = solve_ac(net, source_port, frequency_hz);
    return std::norm(sol.voltage(out.node)) / *out.z_ref;
}

/// Scattering matrix over the ports that carry a reference impedance.
struct SParameters {
    double frequency_hz = 0.0;
    std::vector<std::string> ports;
    std::vector<double> z_ref;
    CMatrix s;
};

inline std::vector<std::string> terminated_ports(const Netlist &net) {
    std::vector<std::string> out;
    for (const auto &p : net.ports())
        if (p.terminated()) out.push_back(p.name);
    return out;
}

inline SParameters s_parameters(const Netlist &net, double frequency_hz) {
    SParameters sp;
    sp.frequency_hz = frequency_hz;
    sp.ports = terminated_ports(net);
    if (sp.ports.empty()) throw InputError("s-parameters need at least one terminated port");
    Eigen::VectorXd mag;
    CMatrix y = assemble_admittance(net, frequency_hz, &mag);
    const auto np = static_cast<Eigen::Index>(sp.ports.size());
    std::vector<int> rows;
    for (const auto &name : sp.ports) {
        const Port &p = net.port(name);
        rows.push_back(detail::port_node(net, p));
        sp.z_ref.push_back(*p.z_ref);
        y(rows.back(), rows.back()) += 1.0 / *p.z_ref;
        mag(rows.back()) += 1.0 / *p.z_ref;
    }
    // Incident power wave a_k = 1: Norton current 2/sqrt(R_k) into the loaded node.
    CMatrix inject = CMatrix::Zero(y.rows(), np);
    for (Eigen::Index k = 0; k < np; ++k) inject(rows[k], k) = 2.0 / std::sqrt(sp.z_ref[k]);
    detail::Factorization lu(y, frequency_hz, mag);
    const CMatrix v = lu.solve(inject);
    sp.s.resize(np, np);
    for (Eigen::Index j = 0; j < np; ++j)
        for (Eigen::Index k = 0; k < np; ++k)
            sp.s(j, k) = v(rows[j], k) / std::sqrt(sp.z_ref[j]) - (j == k ? 1.0 : 0.0);
    return sp;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class Spacing { linear, log };

struct FrequencySweep {
    double start_hz = 1e9;
    double stop_hz = 2e9;
    std::size_t points = 101;
    Spacing spacing = Spacing::linear;

    void validate() const {
        if (!(start_hz > 0.0) || !std::isfinite(stop_hz))
            throw InputError("sweep start must be positive");
        if (!(stop_hz >= start_hz)) throw InputError("sweep stop must not precede start");
        if (points == 0) throw InputError("sweep needs at least one point");
        if (points > 1 && stop_hz == start_hz)
            throw InputError("sweep band is empty but more than one point was requested");
    }

    std::vector<double> frequencies() const {
        validate();
        std::vector<double> f(points);
        if (points == 1) {
            f[0] = start_hz;
            return f;
        }
        for (std::size_t i = 0; i < points; ++i) {
            const double t = static_cast<double>(i) / static_cast<double>(points - 1);
            f[i] = spacing == Spacing::linear
                       ? start_hz + (stop_hz - start_hz) * t
                       : start_hz * std::pow(stop_hz / start_hz, t);
        }
        f.back() = stop_hz;
        return f;
    }
};

/// One sweep point: either a value or the frequency at which the solve was singular.
template <class T>
struct SweepPoint {
    double frequency_hz = 0.0;
    std::optional<T> value;
};

/// Evaluates fn(netlist, f) at every sweep frequency, in parallel, in order.
/// Singular points come back empty instead of aborting the sweep.
template <class Fn>
auto sweep(const Netlist &net, const FrequencySweep &band, Fn &&fn) {
    using T = decltype(fn(net, 0.0));
    const auto freqs = band.frequencies();
    return parallel_map(freqs.size(), [&](std::size_t i) {
        SweepPoint<T> pt;
        pt.frequency_hz = freqs[i];
        try {
            pt.value = fn(net, freqs[i]);
        } catch (const SingularNetworkError &) {
        }
        return pt;
    });
}

}  // namespace purcell
