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

// Single-shot IQ readout: per-label Gaussian blobs, maximum-likelihood
// assignment, overlap (separation) error and its split from state error.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "purcell/csv.hpp"
#include "purcell/errors.hpp"

namespace purcell {

inline constexpr double kPlanck = 6.62607015e-34;     // J s
inline constexpr double kBoltzmann = 1.380649e-23;    // J / K
inline constexpr std::size_t kMinShotsPerLabel = 100;
inline constexpr double kDefaultTrimSigma = 3.5;

struct IQShot {
    std::string label;
    double i = 0.0;
    double q = 0.0;
};

struct IQShotSet {
    std::vector<IQShot> shots;

    /// Labels present, ordered g, e, f first and any others alphabetically.
    std::vector<std::string> labels() const {
        std::vector<std::string> out;
        for (const auto &s : shots)
            if (std::find(out.begin(), out.end(), s.label) == out.end()) out.push_back(s.label);
        auto rank = [](const std::string &l) { return l == "g" ? 0 : l == "e" ? 1 : l == "f" ? 2 : 3; };
        std::sort(out.begin(), out.end(), [&](const auto &a, const auto &b) {
            return rank(a) != rank(b) ? rank(a) < rank(b) : a < b;
        });
        return out;
    }
};

struct GaussianBlob {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d covariance = Eigen::Matrix2d::Identity();
    double weight = 1.0;  // fraction of the label's shots inside the fit core
    std::size_t shots = 0;

    double log_density(const Eigen::Vector2d &x) const {
        const Eigen::Vector2d d = x - mean;
        return -0.5 * d.dot(covariance.inverse() * d) - 0.5 * std::log(covariance.determinant()) -
               std::log(2.0 * std::numbers::pi);
    }
};

using BlobMap = std::map<std::string, GaussianBlob>;

namespace detail {

inline bool positive_definite(const Eigen::Matrix2d &c) {
    return c(0, 0) > 0.0 && c.determinant() > 1e-12 * c(0, 0) * c(1, 1) && std::isfinite(c.sum());
}

// Ratio of the covariance of a 2-D standard normal truncated at Mahalanobis
// radius c to the untruncated one.
inline double truncation_shrink(double c) {
    const double h = 0.5 * c * c, e = std::exp(-h);
    return 1.0 - h * e / (1.0 - e);
}

inline GaussianBlob moments(const std::vector<Eigen::Vector2d> &pts, const std::vector<char> &keep) {
    GaussianBlob b;
    std::size_t n = 0;
    for (std::size_t k = 0; k < pts.size(); ++k)
        if (keep[k]) b.mean += pts[k], ++n;
    b.mean /= static_cast<double>(n);
    b.covariance.setZero();
    for (std::size_t k = 0; k < pts.size(); ++k)
        if (keep[k]) {
            const Eigen::Vector2d d = pts[k] - b.mean;
            b.covariance += d * d.transpose();
        }
    b.covariance /= static_cast<double>(n > 1 ? n - 1 : 1);
    b.shots = n;
    return b;
}

}  // namespace detail

/// Gaussian fit of one cluster. With trim_sigma > 0 the fit iterates on the
/// points within that Mahalanobis radius (corrected for the truncation), so
/// sparse tails from state transitions do not widen the blob. trim_sigma = 0
/// gives the plain sample mean and covariance.
inline GaussianBlob fit_blob(const std::vector<Eigen::Vector2d> &pts, double trim_sigma = kDefaultTrimSigma,
                             std::size_t min_shots = kMinShotsPerLabel) {
    std::vector<char> keep(pts.size(), 1);
    if (pts.size() < 3) throw InputError("degenerate covariance: fewer than three shots");
    GaussianBlob b = detail::moments(pts, keep);
    if (!detail::positive_definite(b.covariance)) throw InputError("degenerate covariance");
    if (pts.size() < min_shots)
        throw InputError("need at least " + std::to_string(min_shots) + " shots per label, got " +
                         std::to_string(pts.size()));
    if (trim_sigma > 0.0) {
        // Robust start: coordinate medians and MAD.
        auto median_mad = [&](int axis) {
            std::vector<double> v;
            for (const auto &p : pts) v.push_back(p(axis));
            std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
            const double med = v[v.size() / 2];
            for (auto &x : v) x = std::abs(x - med);
            std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
            return std::pair{med, 1.4826 * v[v.size() / 2]};
        };
        const auto [mi, si] = median_mad(0);
        const auto [mq, sq] = median_mad(1);
        if (si > 0.0 && sq > 0.0) {
            b.mean = {mi, mq};
            b.covariance = Eigen::Vector2d(si * si, sq * sq).asDiagonal();
        }
        const double shrink = detail::truncation_shrink(trim_sigma);
        for (int iter = 0; iter < 100; ++iter) {
            const Eigen::Matrix2d inv = b.covariance.inverse();
            std::vector<char> next(pts.size());
            std::size_t n = 0;
            for (std::size_t k = 0; k < pts.size(); ++k) {
                const Eigen::Vector2d d = pts[k] - b.mean;
                next[k] = d.dot(inv * d) <= trim_sigma * trim_sigma;
                n += next[k];
            }
            if (n < 3) throw InputError("degenerate covariance after trimming");
            const bool same = next == keep;
            keep = std::move(next);
            b = detail::moments(pts, keep);
            b.covariance /= shrink;
            if (!detail::positive_definite(b.covariance)) throw InputError("degenerate covariance");
            if (same && iter > 0) break;
        }
    }
    b.weight = static_cast<double>(b.shots) / static_cast<double>(pts.size());
    b.shots = pts.size();
    return b;
}

inline BlobMap fit_blobs(const IQShotSet &set, double trim_sigma = kDefaultTrimSigma,
                         std::size_t min_shots = kMinShotsPerLabel) {
    BlobMap out;
    for (const auto &label : set.labels()) {
        std::vector<Eigen::Vector2d> pts;
        for (const auto &s : set.shots)
            if (s.label == label) pts.emplace_back(s.i, s.q);
        try {
            out[label] = fit_blob(pts, trim_sigma, min_shots);
        } catch (const InputError &e) {
            throw InputError("label '" + label + "': " + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Assignment

struct AssignmentMatrix {
    std::vector<std::string> prepared;  // rows
    std::vector<std::string> assigned;  // columns
    Eigen::MatrixXd p;                  // P(assigned | prepared)
    std::vector<std::size_t> counts;    // shots per prepared label

    double at(const std::string &prep, const std::string &assign) const {
        const auto r = std::find(prepared.begin(), prepared.end(), prep) - prepared.begin();
        const auto c = std::find(assigned.begin(), assigned.end(), assign) - assigned.begin();
        if (r == static_cast<long>(prepared.size()) || c == static_cast<long>(assigned.size()))
            throw InputError("no entry for (" + prep + ", " + assign + ")");
        return p(r, c);
    }
};

/// Index of the most likely blob. Exact ties rotate among the tied blobs by
/// shot index so identical blobs share shots evenly.
inline std::size_t classify(const std::vector<const GaussianBlob *> &blobs, const Eigen::Vector2d &x,
                            std::size_t shot_index = 0) {
    std::vector<double> ll(blobs.size());
    for (std::size_t k = 0; k < blobs.size(); ++k) ll[k] = blobs[k]->log_density(x);
    const double best = *std::max_element(ll.begin(), ll.end());
    std::vector<std::size_t> tied;
    for (std::size_t k = 0; k < ll.size(); ++k)
        if (ll[k] == best) tied.push_back(k);
    return tied[shot_index % tied.size()];
}

inline AssignmentMatrix assignment_matrix(const IQShotSet &set, const BlobMap &blobs) {
    AssignmentMatrix m;
    m.prepared = set.labels();
    std::vector<const GaussianBlob *> bp;
    IQShotSet order;
    for (const auto &[label, blob] : blobs) order.shots.push_back({label, 0, 0});
    m.assigned = order.labels();
    for (const auto &l : m.assigned) bp.push_back(&blobs.at(l));
    for (const auto &l : m.prepared)
        if (!blobs.contains(l)) throw InputError("no blob for prepared label '" + l + "'");
    m.p = Eigen::MatrixXd::Zero(static_cast<long>(m.prepared.size()), static_cast<long>(m.assigned.size()));
    m.counts.assign(m.prepared.size(), 0);
    std::size_t idx = 0;
    for (const auto &s : set.shots) {
        const auto r = std::find(m.prepared.begin(), m.prepared.end(), s.label) - m.prepared.begin();
        const auto c = classify(bp, {s.i, s.q}, idx++);
        m.p(r, static_cast<long>(c)) += 1.0;
        ++m.counts[static_cast<std::size_t>(r)];
    }
    for (long r = 0; r < m.p.rows(); ++r) m.p.row(r) /= static_cast<double>(m.counts[static_cast<std::size_t>(r)]);
    return m;
}

// ---------------------------------------------------------------------------
// Separation error

namespace detail {

using Interval = std::pair<double, double>;

// Radii r >= 0 along x = mean_a + v r where blob b is strictly more likely than a.
// Coefficients of A r^2 + B r + C > 0 in the whitened frame of a.
inline std::vector<Interval> losing_radii(double A, double B, double C) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double scale = std::max({std::abs(A), std::abs(B), std::abs(C), 1e-300});
    std::vector<Interval> out;
    if (std::abs(A) <= 1e-13 * scale) {
        if (std::abs(B) <= 1e-13 * scale) {
            if (C > 0) out.push_back({0.0, inf});
        } else {
            const double r0 = -C / B;
            if (B > 0) out.push_back({std::max(0.0, r0), inf});
            else if (r0 > 0) out.push_back({0.0, r0});
        }
        return out;
    }
    const double disc = B * B - 4 * A * C;
    if (disc <= 0) {
        if (A > 0) out.push_back({0.0, inf});
        return out;
    }
    const double sq = std::sqrt(disc);
    const double qq = -0.5 * (B + (B >= 0 ? sq : -sq));
    double r1 = qq / A, r2 = C / qq;
    if (qq == 0.0) r1 = r2 = 0.0;
    if (r1 > r2) std::swap(r1, r2);
    if (A > 0) {
        if (r1 > 0) out.push_back({0.0, r1});
        out.push_back({std::max(0.0, r2), inf});
    } else if (r2 > 0) {
        out.push_back({std::max(0.0, r1), r2});
    }
    return out;
}

inline double ray_mass(std::vector<Interval> iv) {
    std::sort(iv.begin(), iv.end());
    double mass = 0.0, cur_lo = -1.0, cur_hi = -1.0;
    auto flush = [&] {
        if (cur_hi > cur_lo) mass += std::exp(-0.5 * cur_lo * cur_lo) - std::exp(-0.5 * cur_hi * cur_hi);
    };
    for (const auto &[lo, hi] : iv) {
        if (lo > cur_hi) {
            flush();
            cur_lo = lo, cur_hi = hi;
        } else {
            cur_hi = std::max(cur_hi, hi);
        }
    }
    flush();
    return mass;
}

inline double adaptive_simpson(const std::function<double(double)> &f, double a, double b, double fa,
                               double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b), lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6 * (fa + 4 * flm + fm), right = (b - m) / 6 * (fm + 4 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15 * tol)
        return left + right + (left + right - whole) / 15;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

inline bool same_blob(const GaussianBlob &a, const GaussianBlob &b) {
    return (a.mean - b.mean).norm() <= 1e-12 * (1 + a.mean.norm()) &&
           (a.covariance - b.covariance).norm() <= 1e-12 * a.covariance.norm();
}

}  // namespace detail

/// Probability mass of `a` that maximum likelihood assigns to any of `others`.
/// Integrated in polar coordinates of a's whitened frame: the radial part is
/// exact, the angle uses adaptive Simpson to an absolute error well below 1e-5.
inline double misassigned_mass(const GaussianBlob &a, const std::vector<const GaussianBlob *> &others) {
    if (!detail::positive_definite(a.covariance)) throw InputError("covariance not positive definite");
    const Eigen::Matrix2d la = Eigen::LLT<Eigen::Matrix2d>(a.covariance).matrixL();
    const double log_det_a = std::log(a.covariance.determinant());
    std::vector<const GaussianBlob *> distinct;
    std::size_t twins = 0;
    for (const auto *b : others) {
        if (!detail::positive_definite(b->covariance)) throw InputError("covariance not positive definite");
        if (detail::same_blob(a, *b)) ++twins;
        else distinct.push_back(b);
    }
    std::vector<Eigen::Matrix2d> inv;
    std::vector<double> log_det;
    for (const auto *b : distinct) {
        inv.push_back(b->covariance.inverse());
        log_det.push_back(std::log(b->covariance.determinant()));
    }
    auto integrand = [&](double theta) {
        const Eigen::Vector2d v = la * Eigen::Vector2d(std::cos(theta), std::sin(theta));
        std::vector<detail::Interval> iv;
        for (std::size_t k = 0; k < distinct.size(); ++k) {
            const Eigen::Vector2d d = a.mean - distinct[k]->mean;
            const double A = 0.5 * (1.0 - v.dot(inv[k] * v));
            const double B = -d.dot(inv[k] * v);
            const double C = -0.5 * d.dot(inv[k] * d) + 0.5 * (log_det_a - log_det[k]);
            const auto r = detail::losing_radii(A, B, C);
            iv.insert(iv.end(), r.begin(), r.end());
        }
        return detail::ray_mass(std::move(iv)) / (2.0 * std::numbers::pi);
    };
    double eps = 0.0;
    if (!distinct.empty()) {
        // Split the circle so the initial Simpson panels see the structure.
        constexpr int panels = 64;
        for (int k = 0; k < panels; ++k) {
            const double t0 = 2 * std::numbers::pi * k / panels, t1 = 2 * std::numbers::pi * (k + 1) / panels;
            const double f0 = integrand(t0), f1 = integrand(t1), fm = integrand(0.5 * (t0 + t1));
            eps += detail::adaptive_simpson(integrand, t0, t1, f0, fm, f1, (t1 - t0) / 6 * (f0 + 4 * fm + f1),
                                            1e-9 / panels, 30);
        }
    }
    // Identical blobs tie everywhere; ties are shared evenly.
    return 1.0 - (1.0 - std::clamp(eps, 0.0, 1.0)) / static_cast<double>(1 + twins);
}

inline std::pair<double, double> separation_error(const GaussianBlob &a, const GaussianBlob &b) {
    return {misassigned_mass(a, {&b}), misassigned_mass(b, {&a})};
}

/// Upper Gaussian tail Q(x) = P(N(0,1) > x).
inline double gaussian_tail(double x) {
    return 0.5 * std::erfc(x / std::sqrt(2.0));
}

// ---------------------------------------------------------------------------
// Error budget

struct ErrorBreakdown {
    std::vector<std::string> labels;
    std::vector<double> epsilon;    // 1 - P(assigned = prepared)
    std::vector<double> epsilon_s;  // overlap of the fitted Gaussians
    std::vector<double> epsilon_t;  // epsilon - epsilon_s, clipped at 0
    std::vector<std::string> warnings;
};

inline ErrorBreakdown error_breakdown(const AssignmentMatrix &m, const BlobMap &blobs) {
    ErrorBreakdown e;
    for (std::size_t r = 0; r < m.prepared.size(); ++r) {
        const auto &label = m.prepared[r];
        e.labels.push_back(label);
        e.epsilon.push_back(1.0 - m.at(label, label));
        std::vector<const GaussianBlob *> others;
        for (const auto &[l, b] : blobs)
            if (l != label) others.push_back(&b);
        const double es = misassigned_mass(blobs.at(label), others);
        e.epsilon_s.push_back(es);
        double et = e.epsilon.back() - es;
        if (et < 0.0) {
            e.warnings.push_back("state error for '" + label + "' came out negative (" + format_number(et) +
                                 "); clipped to 0");
            et = 0.0;
        }
        e.epsilon_t.push_back(et);
    }
    return e;
}

/// Decay during a measurement of length tau_m: 1 - exp(-tau_m / T1).
inline double t1_error_bound(double t1, double tau_m) {
    if (!(t1 > 0.0) || !(tau_m >= 0.0)) throw std::domain_error("need t1 > 0 and tau_m >= 0");
    return -std::expm1(-tau_m / t1);
}

/// Boltzmann temperature for the excited/ground population ratio at f_eg.
inline double effective_temperature(double p_e, double p_g, double f_eg) {
    if (!(p_e >= 0.0 && p_e < p_g)) throw std::domain_error("need 0 <= p_e < p_g");
    if (!(f_eg > 0.0)) throw std::domain_error("transition frequency must be positive");
    if (p_e == 0.0) return 0.0;
    return kPlanck * f_eg / kBoltzmann / std::log(p_g / p_e);
}

/// Readout figures reported for the reference device; used to shape synthetic
/// generators only.
namespace reference {
inline constexpr double kEpsilon0 = 0.0108;
inline constexpr double kEpsilon1 = 0.0886;
inline constexpr double kEpsilonS0 = 0.0038;
inline constexpr double kEpsilonS1 = 0.0008;
inline constexpr double kT1 = 58e-6;
}  // namespace reference

// ---------------------------------------------------------------------------
// Synthetic shots

/// Two equal isotropic blobs at (0, 0) for g and (separation, 0) for e. A
/// fraction of each label is drawn from the other blob to mimic transitions.
struct TwoStateGenerator {
    double separation = 5.34;
    double sigma = 1.0;
    double flip_g = 0.007;  // g shots drawn from the e blob
    double flip_e = 0.085;  // e shots drawn from the g blob
    std::size_t shots_per_state = 30000;
    std::uint64_t seed = 1;

    double overlap() const {
        return gaussian_tail(separation / (2.0 * sigma));
    }
    /// Assignment error expected from the generator for "g" or "e".
    double true_error(const std::string &label) const {
        const double t = label == "g" ? flip_g : flip_e;
        return (1.0 - t) * overlap() + t * (1.0 - overlap());
    }
};

/// Generator whose errors follow the reference readout figures for g and e.
inline TwoStateGenerator reference_generator(std::uint64_t seed = 1) {
    TwoStateGenerator g;
    // Q(d / 2 sigma) = epsilon_s,0.
    double lo = 0.0, hi = 20.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (gaussian_tail(mid) > reference::kEpsilonS0 ? lo : hi) = mid;
    }
    g.separation = 2.0 * 0.5 * (lo + hi);
    const double q = reference::kEpsilonS0;
    g.flip_g = (reference::kEpsilon0 - q) / (1.0 - 2.0 * q);
    g.flip_e = (reference::kEpsilon1 - q) / (1.0 - 2.0 * q);
    g.seed = seed;
    return g;
}

inline IQShotSet synthesize_readout(const TwoStateGenerator &gen) {
    std::mt19937_64 rng(gen.seed);
    std::normal_distribution<double> n(0.0, gen.sigma);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    IQShotSet set;
    set.shots.reserve(2 * gen.shots_per_state);
    for (const char *label : {"g", "e"}) {
        const bool is_g = label[0] == 'g';
        for (std::size_t k = 0; k < gen.shots_per_state; ++k) {
            const bool flip = u(rng) < (is_g ? gen.flip_g : gen.flip_e);
            const bool at_e = is_g == flip;
            const double i = n(rng) + (at_e ? gen.separation : 0.0);
            const double q = n(rng);
            set.shots.push_back({label, i, q});
        }
    }
    return set;
}

// ---------------------------------------------------------------------------
// I/O

/// CSV with columns label, i, q; a header line is optional.
inline IQShotSet parse_shots(std::istream &in) {
    IQShotSet set;
    const auto t = parse_csv(in, true);
    for (const auto &row : t.rows) {
        if (row.fields.size() != 3)
            throw InputError("line " + std::to_string(row.line) + ": expected 3 columns (label, i, q)");
        if (row.fields[0].empty()) throw InputError("line " + std::to_string(row.line) + ": empty label");
        set.shots.push_back({row.fields[0], t.number(row, 1), t.number(row, 2)});
    }
    if (set.shots.empty()) throw InputError("no shots found");
    return set;
}

inline IQShotSet load_shots(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return parse_shots(in);
}

inline void write_shots_csv(std::ostream &out, const IQShotSet &set) {
    out << "label,i,q\n";
    for (const auto &s : set.shots) out << s.label << ',' << format_number(s.i) << ',' << format_number(s.q) << '\n';
}

inline nlohmann::json to_json(const GaussianBlob &b) {
    return {{"mean", {b.mean(0), b.mean(1)}},
            {"covariance", {{b.covariance(0, 0), b.covariance(0, 1)}, {b.covariance(1, 0), b.covariance(1, 1)}}},
            {"weight", b.weight},
            {"shots", b.shots}};
}

inline nlohmann::json to_json(const AssignmentMatrix &m) {
    nlohmann::json rows = nlohmann::json::array();
    for (long r = 0; r < m.p.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (long c = 0; c < m.p.cols(); ++c) row.push_back(m.p(r, c));
        rows.push_back(row);
    }
    return {{"prepared", m.prepared}, {"assigned", m.assigned}, {"p", rows}, {"counts", m.counts}};
}

inline nlohmann::json to_json(const ErrorBreakdown &e) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t k = 0; k < e.labels.size(); ++k)
        j[e.labels[k]] = {{"epsilon", e.epsilon[k]}, {"epsilon_s", e.epsilon_s[k]}, {"epsilon_t", e.epsilon_t[k]}};
    return {{"per_state", j}, {"warnings", e.warnings}};
}

}  // namespace purcell
