#include "qtoc/clockform.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qtoc/errors.hpp"

namespace qtoc {

namespace {

constexpr std::array<double, 5> kGaussNodes = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                               0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kGaussWeights = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                                 0.4786286704993665, 0.2369268850561891};

void check_guard(const Vec2& x, const ModelParams& p, const char* what) {
    if (std::abs(delta_A(x, p)) <= kClockGuard) {
        std::ostringstream msg;
        msg << what << ": (" << x.x() << ", " << x.y() << ") lies in the C_A guard band";
        throw ClockFormSingularError(msg.str());
    }
}

// Fourth-order central difference of a piece evaluator.
Vec2 velocity(const ArcPiece& a, double t, double h) {
    return (a.state(t - 2 * h) - 8.0 * a.state(t - h) + 8.0 * a.state(t + h) - a.state(t + 2 * h)) / (12.0 * h);
}

// Points at equal arc-length fractions, evaluated on the exact path.
std::vector<Vec2> arc_length_resample(const Trajectory& traj, int n) {
    const int dense = 20000;
    std::vector<double> ts(dense + 1);
    std::vector<double> s(dense + 1, 0.0);
    const double t0 = traj.t_begin();
    const double t1 = traj.t_end();
    Vec2 prev = traj.state_at(t0);
    ts[0] = t0;
    for (int k = 1; k <= dense; ++k) {
        ts[k] = t0 + (t1 - t0) * k / dense;
        const Vec2 cur = traj.state_at(ts[k]);
        s[k] = s[k - 1] + (cur - prev).norm();
        prev = cur;
    }
    std::vector<Vec2> out(n + 1);
    const double total = s.back();
    for (int i = 0; i <= n; ++i) {
        const double target = total * i / n;
        auto it = std::lower_bound(s.begin(), s.end(), target);
        std::size_t k = std::clamp<std::size_t>(static_cast<std::size_t>(std::distance(s.begin(), it)), 1, dense);
        const double span = s[k] - s[k - 1];
        const double w = span > 0.0 ? (target - s[k - 1]) / span : 0.0;
        out[i] = traj.state_at(ts[k - 1] + w * (ts[k] - ts[k - 1]));
    }
    out.front() = traj.start();
    out.back() = traj.end();
    return out;
}

double path_length(const Trajectory& traj) {
    double len = 0.0;
    for (std::size_t i = 1; i < traj.samples.size(); ++i) {
        len += (traj.samples[i].x - traj.samples[i - 1].x).norm();
    }
    return len;
}

int winding_number(const std::vector<Vec2>& loop, const Vec2& q) {
    double total = 0.0;
    for (std::size_t i = 0; i < loop.size(); ++i) {
        const Vec2 a = loop[i] - q;
        const Vec2 b = loop[(i + 1) % loop.size()] - q;
        total += std::atan2(cross(a, b), a.dot(b));
    }
    return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

} // namespace

Vec2 alpha_at(const Vec2& x, const ModelParams& p) {
    const double da = delta_A(x, p);
    if (std::abs(da) <= kAlphaSingular) {
        std::ostringstream msg;
        msg << "clock form undefined near C_A at (" << x.x() << ", " << x.y() << ")";
        throw ClockFormSingularError(msg.str());
    }
    // Denominator Gamma x2^2 - gm x3 + gp x3^2 = -delta_A.
    return Vec2{x.x() / da, x.y() / da};
}

double g_density(const Vec2& x, const ModelParams& p) {
    const double da = delta_A(x, p);
    if (std::abs(da) <= kAlphaSingular) {
        throw ClockFormSingularError("g density undefined near C_A");
    }
    return delta_B(x, p) / (da * da);
}

ClockSample clock_sample(const Vec2& x, const ModelParams& p) {
    const Vec2 a = alpha_at(x, p);
    return {x, a.x(), a.y(), g_density(x, p)};
}

double time_via_alpha(const Trajectory& traj, const ModelParams& p) {
    for (const TrajSample& s : traj.samples) {
        check_guard(s.x, p, "time_via_alpha");
    }
    double total = 0.0;
    for (const ArcPiece& piece : traj.pieces) {
        const double len = piece.t1 - piece.t0;
        if (len <= 0.0) {
            continue;
        }
        const int m = std::max(1, static_cast<int>(std::ceil(len / 0.01)));
        const double seg = len / m;
        const double h = std::min(1e-4, 0.01 * seg);
        for (int k = 0; k < m; ++k) {
            const double a = piece.t0 + seg * k;
            for (std::size_t q = 0; q < kGaussNodes.size(); ++q) {
                const double t = a + 0.5 * seg * (kGaussNodes[q] + 1.0);
                const Vec2 x = piece.state(t);
                check_guard(x, p, "time_via_alpha");
                total += 0.5 * seg * kGaussWeights[q] * alpha_at(x, p).dot(velocity(piece, t, h));
            }
        }
    }
    return total;
}

StokesReport direct_compare(const Trajectory& path1, const Trajectory& path2, double tie_tol) {
    StokesReport r;
    r.t1 = path1.t_end() - path1.t_begin();
    r.t2 = path2.t_end() - path2.t_begin();
    r.line_difference = r.t1 - r.t2;
    const double d = r.t1 - r.t2;
    r.winner = std::abs(d) <= tie_tol ? "tie" : (d < 0 ? "path1" : "path2");
    return r;
}

StokesReport stokes_compare(const Trajectory& path1, const Trajectory& path2, const ModelParams& p,
                            double tie_tol) {
    if ((path1.start() - path2.start()).norm() > 1e-6 || (path1.end() - path2.end()).norm() > 1e-6) {
        throw ValidationError("stokes_compare: paths must share both endpoints");
    }
    StokesReport r = direct_compare(path1, path2, tie_tol);
    r.line_difference = time_via_alpha(path1, p) - time_via_alpha(path2, p);

    const double len = std::max(path_length(path1), path_length(path2));
    const int n = std::clamp(static_cast<int>(std::ceil(len / 5e-4)), 200, 20000);
    const std::vector<Vec2> a = arc_length_resample(path1, n);
    const std::vector<Vec2> b = arc_length_resample(path2, n);

    std::vector<Vec2> loop(a.begin(), a.end());
    loop.insert(loop.end(), b.rbegin() + 1, b.rend() - 1);
    std::vector<Vec2> ca_points{Vec2::Zero()};
    if (!p.unital()) {
        for (const auto& arc : loci(p, 201).ca_arcs) {
            ca_points.insert(ca_points.end(), arc.begin(), arc.end());
        }
    }
    for (const Vec2& q : ca_points) {
        if (winding_number(loop, q) != 0) {
            throw ClockFormSingularError("stokes_compare: the enclosed region contains part of C_A");
        }
    }

    double surface = 0.0;
    bool pos = false;
    bool neg = false;
    constexpr std::array<double, 3> gs_n = {-0.7745966692414834, 0.0, 0.7745966692414834};
    constexpr std::array<double, 3> gs_w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    for (int i = 0; i < n; ++i) {
        const Vec2 p0 = a[i];
        const Vec2 p1 = a[i + 1];
        const Vec2 q0 = b[i];
        const Vec2 q1 = b[i + 1];
        const double width = std::max((q0 - p0).norm(), (q1 - p1).norm());
        const int panels = std::max(1, static_cast<int>(std::ceil(width / 0.02)));
        for (int k = 0; k < panels; ++k) {
            for (std::size_t js = 0; js < gs_n.size(); ++js) {
                const double s = 0.5 * (gs_n[js] + 1.0);
                const Vec2 bottom = (1 - s) * p0 + s * p1;
                const Vec2 top = (1 - s) * q0 + s * q1;
                for (std::size_t jr = 0; jr < kGaussNodes.size(); ++jr) {
                    const double r = (k + 0.5 * (kGaussNodes[jr] + 1.0)) / panels;
                    const Vec2 x = (1 - r) * bottom + r * top;
                    const Vec2 dxds = (1 - r) * (p1 - p0) + r * (q1 - q0);
                    const Vec2 dxdr = top - bottom;
                    check_guard(x, p, "stokes_compare");
                    const double g = g_density(x, p);
                    if (g > 1e-12) {
                        pos = true;
                    } else if (g < -1e-12) {
                        neg = true;
                    }
                    surface += 0.5 * gs_w[js] * 0.5 * kGaussWeights[jr] / panels * g * cross(dxds, dxdr);
                }
            }
        }
    }
    r.surface_difference = surface;
    r.spans_quadrants = pos && neg;
    return r;
}

nlohmann::json to_json(const StokesReport& r) {
    nlohmann::json j{{"T1", r.t1},
                     {"T2", r.t2},
                     {"difference_line_integral", r.line_difference},
                     {"difference_surface_integral", nullptr},
                     {"winner", r.winner}};
    if (r.surface_difference) {
        j["difference_surface_integral"] = *r.surface_difference;
    }
    return j;
}

Trajectory mirror_x2(const Trajectory& traj) {
    Trajectory out;
    out.termination = traj.termination;
    for (TrajSample s : traj.samples) {
        s.x.x() = -s.x.x();
        s.u = -s.u;
        out.samples.push_back(s);
    }
    auto flip = [](ArcKind k) { return k == ArcKind::X ? ArcKind::Y : (k == ArcKind::Y ? ArcKind::X : k); };
    for (const ArcPiece& src : traj.pieces) {
        ArcPiece a = src;
        a.kind = flip(src.kind);
        a.state = [f = src.state](double t) {
            Vec2 x = f(t);
            x.x() = -x.x();
            return x;
        };
        a.control = [f = src.control](double t) { return -f(t); };
        out.pieces.push_back(std::move(a));
    }
    for (Arc arc : traj.word.arcs()) {
        arc.kind = flip(arc.kind);
        out.word.append(arc);
    }
    return out;
}

std::string to_string(TurnpikeLabel l) {
    switch (l) {
    case TurnpikeLabel::Turnpike: return "turnpike";
    case TurnpikeLabel::AntiTurnpike: return "anti_turnpike";
    case TurnpikeLabel::Unlabeled: return "unlabeled";
    }
    return "?";
}

TurnpikeLabel turnpike_at(const Vec2& x, const ModelParams& p, CbLine line) {
    const double da = delta_A(x, p);
    if (std::abs(da) <= 1e-12) {
        return TurnpikeLabel::Unlabeled;
    }
    const Vec2 n = line == CbLine::Vertical ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    const double yn = controlled_field(x, p, 1.0).dot(n);
    const double xn = controlled_field(x, p, -1.0).dot(n);
    if (!(yn * xn < 0.0)) {
        return TurnpikeLabel::Unlabeled;
    }
    const double g = p.gamma_total;
    const double gp = p.gamma_plus();
    const Vec2 grad_b{2.0 * (g - gp) * x.y() + p.gamma_minus(), 2.0 * (g - gp) * x.x()};
    const double dn = grad_b.dot(n);
    if (std::abs(dn) <= 1e-12) {
        return TurnpikeLabel::Unlabeled;
    }
    // f = -delta_B / delta_A just inside the region Y points into.
    const double f_y = -(yn > 0 ? 1.0 : -1.0) * dn / da;
    return f_y > 0 ? TurnpikeLabel::Turnpike : TurnpikeLabel::AntiTurnpike;
}

std::vector<TurnpikeArc> classify_turnpike(const ModelParams& p, int resolution) {
    std::vector<TurnpikeArc> out;
    resolution = std::max(resolution, 3);
    for (const CbSegment& cb : loci(p).cb) {
        const Vec2 a = cb.segment.from;
        const Vec2 b = cb.segment.to;
        auto point = [&](double s) { return Vec2((1 - s) * a + s * b); };
        auto label = [&](double s) { return turnpike_at(point(s), p, cb.line); };
        double run_start = 0.0;
        TurnpikeLabel current = label(0.0);
        double prev_s = 0.0;
        for (int i = 1; i < resolution; ++i) {
            const double s = static_cast<double>(i) / (resolution - 1);
            const TurnpikeLabel l = label(s);
            if (l != current) {
                double lo = prev_s;
                double hi = s;
                for (int it = 0; it < 60; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (label(mid) == current ? lo : hi) = mid;
                }
                out.push_back({cb.line, {point(run_start), point(lo)}, current});
                run_start = hi;
                current = l;
            }
            prev_s = s;
        }
        out.push_back({cb.line, {point(run_start), b}, current});
    }
    // Zero-length runs come from isolated points such as the C_A crossings.
    std::erase_if(out, [](const TurnpikeArc& t) { return (t.segment.to - t.segment.from).norm() < 1e-9; });
    return out;
}

} // namespace qtoc
