#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace qtoc {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline Vec2 perp(const Vec2& a) { return {-a.y(), a.x()}; }

// Scalar factors of exp(M t) = exp(sigma t) * (c * I + s * (M - sigma I)),
// where sigma = tr(M)/2 and q = sigma^2 - det(M), so that (M - sigma I)^2 = q I.
struct ExpFactors {
    double growth; // exp(sigma t)
    double c;
    double s;
};

// `confluent` forces the series form, which is exact at q == 0 and accurate
// while |q| t^2 stays small.
inline ExpFactors exp_factors(double q, double sigma, double t, bool confluent = false) {
    ExpFactors f{std::exp(sigma * t), 1.0, t};
    const double qt2 = q * t * t;
    if (confluent || std::abs(qt2) < 1e-4) {
        f.c = 1.0 + qt2 / 2.0 + qt2 * qt2 / 24.0;
        f.s = t * (1.0 + qt2 / 6.0 + qt2 * qt2 / 120.0);
    } else if (q > 0.0) {
        const double w = std::sqrt(q);
        f.c = std::cosh(w * t);
        f.s = std::sinh(w * t) / w;
    } else {
        const double w = std::sqrt(-q);
        f.c = std::cos(w * t);
        f.s = std::sin(w * t) / w;
    }
    return f;
}

// Closed-form matrix exponential of a real 2x2 matrix.
inline Mat2 expm2(const Mat2& m, double t, bool confluent = false) {
    const double sigma = 0.5 * m.trace();
    const double q = sigma * sigma - m.determinant();
    const ExpFactors f = exp_factors(q, sigma, t, confluent);
    const Mat2 n = m - sigma * Mat2::Identity();
    return f.growth * (f.c * Mat2::Identity() + f.s * n);
}

} // namespace qtoc
