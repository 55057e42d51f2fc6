#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <random>

#include "qtoc/flows.hpp"

namespace qtoc::testing {

// Uniform sample of the disk of radius r.
inline Vec2 random_disk_state(std::mt19937_64& rng, double r = 1.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double rho = r * std::sqrt(u(rng));
    const double ang = 2.0 * std::numbers::pi * u(rng);
    return {rho * std::cos(ang), rho * std::sin(ang)};
}

// Durations (t1, t2) of a two-arc bang word from x0 reaching target, by damped
// Newton on a finite-difference Jacobian. Nullopt when it fails to converge.
inline std::optional<Vec2> shoot_two_arc(const Vec2& x0, const Vec2& target, double u1, double u2,
                                         const ModelParams& p, Vec2 guess) {
    auto end = [&](const Vec2& t) { return flow_const(flow_const(x0, p, u1, t.x()), p, u2, t.y()); };
    Vec2 t = guess;
    for (int it = 0; it < 100; ++it) {
        const Vec2 r = end(t) - target;
        if (r.norm() < 1e-13) {
            return t;
        }
        Mat2 j;
        const double h = 1e-7;
        j.col(0) = (end(t + Vec2{h, 0}) - end(t - Vec2{h, 0})) / (2 * h);
        j.col(1) = (end(t + Vec2{0, h}) - end(t - Vec2{0, h})) / (2 * h);
        Vec2 step = j.fullPivLu().solve(r);
        double lam = 1.0;
        while (lam > 1e-4 && (t - lam * step).minCoeff() < 0) {
            lam *= 0.5;
        }
        t -= lam * step;
    }
    return (end(t) - target).norm() < 1e-11 ? std::optional<Vec2>(t) : std::nullopt;
}

} // namespace qtoc::testing
