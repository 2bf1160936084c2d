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

// Bounded-iteration driver around Eigen's MINPACK-style Levenberg-Marquardt.
// Residual functions take the parameter vector and return the residual vector;
// the Jacobian is formed by central differences.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

namespace purcell {

using Eigen::VectorXd;
using Eigen::MatrixXd;

using ResidualFn = std::function<VectorXd(const VectorXd &)>;

struct LeastSquaresOptions {
    int max_iterations = 500;
    double xtol = 1e-8;        // relative step
    double rms_change = 1e-10; // absolute change of the rms residual over one iteration
    double ftol = 1e-14;       // relative reduction of the sum of squares
};

struct LeastSquaresResult {
    VectorXd x;
    VectorXd std_errors;
    double rms = 0.0;
    bool converged = false;
    int iterations = 0;
    std::string status;
    std::vector<double> rms_history;  // after each accepted iteration, starting with x0
};

namespace detail {

inline double rms_of(const VectorXd &r) {
    return r.size() ? std::sqrt(r.squaredNorm() / static_cast<double>(r.size())) : 0.0;
}

inline MatrixXd central_jacobian(const ResidualFn &fn, const VectorXd &x, Eigen::Index m) {
    MatrixXd jac(m, x.size());
    VectorXd xp = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(x(j)));
        xp(j) = x(j) + h;
        const VectorXd up = fn(xp);
        xp(j) = x(j) - h;
        const VectorXd dn = fn(xp);
        xp(j) = x(j);
        jac.col(j) = (up - dn) / (2.0 * h);
    }
    return jac;
}

struct LmFunctor : Eigen::DenseFunctor<double> {
    LmFunctor(const ResidualFn &fn, int n, int m) : DenseFunctor<double>(n, m), fn(fn) {
    }
    int operator()(const VectorXd &x, VectorXd &fvec) const {
        fvec = fn(x);
        return 0;
    }
    int df(const VectorXd &x, MatrixXd &fjac) const {
        fjac = central_jacobian(fn, x, values());
        return 0;
    }
    const ResidualFn &fn;
};

inline const char *status_text(Eigen::LevenbergMarquardtSpace::Status s) {
    using namespace Eigen::LevenbergMarquardtSpace;
    switch (s) {
    case RelativeReductionTooSmall: return "relative reduction below ftol";
    case RelativeErrorTooSmall: return "relative step below xtol";
    case RelativeErrorAndReductionTooSmall: return "step and reduction below tolerance";
    case CosinusTooSmall: return "gradient orthogonal to residual";
    case TooManyFunctionEvaluation: return "too many function evaluations";
    case FtolTooSmall: return "no further reduction possible";
    case XtolTooSmall: return "no further step possible";
    case GtolTooSmall: return "gradient at machine precision";
    case ImproperInputParameters: return "improper input";
    default: return "running";
    }
}

}  // namespace detail

/// Standard errors from sigma^2 (J^T J)^+ with sigma^2 = SSR / (m - n).
inline VectorXd standard_errors(const ResidualFn &fn, const VectorXd &x) {
    const VectorXd r = fn(x);
    const auto m = r.size(), n = x.size();
    VectorXd se = VectorXd::Zero(n);
    if (m <= n) return se;
    const MatrixXd jac = detail::central_jacobian(fn, x, m);
    const MatrixXd jtj = jac.transpose() * jac;
    const MatrixXd cov = jtj.completeOrthogonalDecomposition().pseudoInverse() *
                         (r.squaredNorm() / static_cast<double>(m - n));
    for (Eigen::Index j = 0; j < n; ++j) se(j) = std::sqrt(std::max(0.0, cov(j, j)));
    return se;
}

inline LeastSquaresResult least_squares(const ResidualFn &fn, const VectorXd &x0,
                                        const LeastSquaresOptions &opt = {}) {
    using namespace Eigen::LevenbergMarquardtSpace;
    LeastSquaresResult res;
    const VectorXd r0 = fn(x0);
    const auto m = static_cast<int>(r0.size());
    const auto n = static_cast<int>(x0.size());
    res.x = x0;
    res.rms = detail::rms_of(r0);
    res.rms_history.push_back(res.rms);
    if (m < n) {
        res.status = "fewer residuals than parameters";
        return res;
    }

    detail::LmFunctor functor(fn, n, m);
    Eigen::LevenbergMarquardt<detail::LmFunctor> lm(functor);
    lm.setXtol(opt.xtol);
    lm.setFtol(opt.ftol);
    lm.setGtol(0.0);
    lm.setMaxfev(1000000);

    VectorXd x = x0;
    Status st = lm.minimizeInit(x);
    if (st == ImproperInputParameters) {
        res.status = detail::status_text(st);
        return res;
    }
    double prev = res.rms;
    while (true) {
        if (res.iterations >= opt.max_iterations) {
            res.status = "iteration limit reached";
            break;
        }
        st = lm.minimizeOneStep(x);
        ++res.iterations;
        const double now = detail::rms_of(fn(x));
        res.rms_history.push_back(now);
        if (st != Running) {
            res.converged = st != TooManyFunctionEvaluation && st != ImproperInputParameters;
            res.status = detail::status_text(st);
            break;
        }
        if (std::abs(prev - now) < opt.rms_change) {
            res.converged = true;
            res.status = "rms change below tolerance";
            break;
        }
        prev = now;
    }
    res.x = x;
    res.rms = detail::rms_of(fn(x));
    res.std_errors = standard_errors(fn, x);
    return res;
}

}  // namespace purcell
