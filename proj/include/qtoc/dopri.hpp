#pragma once

// Dormand-Prince 5(4) with PI step control and cubic Hermite dense output.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "qtoc/errors.hpp"

namespace qtoc {

template <int N>
struct OdeSolution {
    using State = Eigen::Matrix<double, N, 1>;

    std::vector<double> t;
    std::vector<State> x;
    std::vector<State> dx;
    long rejected = 0;

    double t_begin() const { return t.front(); }
    double t_end() const { return t.back(); }
    const State& final_state() const { return x.back(); }

    // Hermite interpolation on the accepted step containing tq.
    State at(double tq) const {
        const bool forward = t.back() >= t.front();
        auto it = forward ? std::upper_bound(t.begin(), t.end(), tq)
                          : std::upper_bound(t.begin(), t.end(), tq, std::greater<double>());
        std::size_t i = static_cast<std::size_t>(std::distance(t.begin(), it));
        if (i == 0) {
            return x.front();
        }
        if (i >= t.size()) {
            return x.back();
        }
        const std::size_t k = i - 1;
        const double h = t[k + 1] - t[k];
        const double s = (tq - t[k]) / h;
        const double s2 = s * s;
        const double s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * x[k] + (s3 - 2 * s2 + s) * h * dx[k] + (-2 * s3 + 3 * s2) * x[k + 1] +
               (s3 - s2) * h * dx[k + 1];
    }
};

struct DopriOptions {
    double rtol = 1e-10;
    double atol = 1e-10;
    double h_initial = 0.0; // 0 selects automatically
    double h_max = std::numeric_limits<double>::infinity();
    long max_steps = 2'000'000;
};

// Integrates xdot = f(t, x) from t0 to t1 (either direction).
template <int N, class Rhs>
OdeSolution<N> dopri45(Rhs&& f, double t0, const Eigen::Matrix<double, N, 1>& x0, double t1,
                       const DopriOptions& opt = {}) {
    using State = Eigen::Matrix<double, N, 1>;
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    OdeSolution<N> sol;
    sol.t.push_back(t0);
    sol.x.push_back(x0);
    State k1 = f(t0, x0);
    sol.dx.push_back(k1);
    if (t1 == t0) {
        return sol;
    }
    const double dir = t1 > t0 ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);

    auto err_norm = [&](const State& err, const State& xa, const State& xb) {
        double m = 0.0;
        for (int i = 0; i < xa.size(); ++i) {
            const double sc = opt.atol + opt.rtol * std::max(std::abs(xa[i]), std::abs(xb[i]));
            m = std::max(m, std::abs(err[i]) / sc);
        }
        return m;
    };

    double h = opt.h_initial;
    if (h <= 0.0) {
        const double d0 = x0.cwiseAbs().maxCoeff();
        const double d1 = k1.cwiseAbs().maxCoeff();
        h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h = std::min({h, span, 0.1});
    }
    h = std::min(h, opt.h_max);

    double t = t0;
    State x = x0;
    double err_prev = 1e-4;
    long steps = 0;
    while (dir * (t1 - t) > 0.0) {
        if (++steps > opt.max_steps) {
            throw NumericalError("dopri45: maximum number of steps exceeded");
        }
        bool last = false;
        if (h >= std::abs(t1 - t)) {
            h = std::abs(t1 - t);
            last = true;
        }
        const double hs = dir * h;
        const State k2 = f(t + c2 * hs, State(x + hs * a21 * k1));
        const State k3 = f(t + c3 * hs, State(x + hs * (a31 * k1 + a32 * k2)));
        const State k4 = f(t + c4 * hs, State(x + hs * (a41 * k1 + a42 * k2 + a43 * k3)));
        const State k5 = f(t + c5 * hs, State(x + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
        const State k6 = f(t + hs, State(x + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
        const State xn = x + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const State k7 = f(t + hs, xn);
        const State err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double en = err_norm(err, x, xn);

        if (en <= 1.0) {
            t = last ? t1 : t + hs;
            x = xn;
            k1 = k7;
            sol.t.push_back(t);
            sol.x.push_back(x);
            sol.dx.push_back(k1);
            const double e = std::max(en, 1e-10);
            double fac = 0.9 * std::pow(e, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0);
            fac = std::clamp(fac, 0.2, 5.0);
            h = std::min(h * fac, opt.h_max);
            err_prev = e;
        } else {
            ++sol.rejected;
            h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
        }
        if (h < 1e-14 * std::max(1.0, std::abs(t))) {
            throw NumericalError("dopri45: step size underflow");
        }
    }
    return sol;
}

} // namespace qtoc
