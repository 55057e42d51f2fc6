#include "qtoc/flows.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>
#include <sstream>

#include "qtoc/errors.hpp"

namespace qtoc {

std::string to_string(Damping d) {
    switch (d) {
    case Damping::Aperiodic: return "aperiodic";
    case Damping::Critical: return "critical";
    case Damping::PseudoPeriodic: return "pseudo_periodic";
    }
    return "?";
}

DiscriminantClass discriminant(const ModelParams& p) {
    const double d = p.gamma_total - p.gamma_plus();
    DiscriminantClass out;
    out.delta = d * d - 4.0;
    if (std::abs(out.delta) <= 1e-12) {
        out.kind = Damping::Critical;
    } else {
        out.kind = out.delta > 0.0 ? Damping::Aperiodic : Damping::PseudoPeriodic;
    }
    return out;
}

Mat2 system_matrix(const ModelParams& p, double u) {
    Mat2 a;
    a << -p.gamma_total, -u, u, -p.gamma_plus();
    return a;
}

Mat2 transition_matrix(const ModelParams& p, double u, double t) {
    const double sigma = -0.5 * (p.gamma_total + p.gamma_plus());
    const double half_gap = 0.5 * (p.gamma_total - p.gamma_plus());
    const double q = half_gap * half_gap - u * u;
    const ExpFactors f = exp_factors(q, sigma, t, std::abs(4.0 * q) < 1e-9);
    const Mat2 n = system_matrix(p, u) - sigma * Mat2::Identity();
    return f.growth * (f.c * Mat2::Identity() + f.s * n);
}

Vec2 flow_const(const Vec2& x0, const ModelParams& p, double u, double t) {
    if (t == 0.0) {
        return x0;
    }
    const Vec2 xs = controlled_limit_point(p, u);
    return xs + transition_matrix(p, u, t) * (x0 - xs);
}

BlochState bang_flow(const BlochState& s0, const ModelParams& p, int eps, double t) {
    if (eps != 1 && eps != -1) {
        throw ValidationError("bang_flow: eps must be +1 or -1");
    }
    if (!(t >= 0.0)) {
        throw ValidationError("bang_flow: duration must be nonnegative");
    }
    const Vec2 x = flow_const(s0.vec(), p, static_cast<double>(eps), t);
    return BlochState(x.x(), x.y());
}

BlochState free_flow(const BlochState& s0, const ModelParams& p, double t) {
    if (!(t >= 0.0)) {
        throw ValidationError("free_flow: duration must be nonnegative");
    }
    const double x2 = s0.x2() * std::exp(-p.gamma_total * t);
    double x3 = s0.x3();
    if (p.gamma_plus() > 0.0) {
        const double xf = p.gamma_minus() / p.gamma_plus();
        x3 = xf + (s0.x3() - xf) * std::exp(-p.gamma_plus() * t);
    }
    return BlochState(x2, x3);
}

std::optional<CbLine> cb_line_at(const Vec2& x, const ModelParams& p, double tol) {
    if (std::abs(x.x()) <= tol) {
        return CbLine::Vertical;
    }
    const auto h = cb_horizontal_level(p);
    if (h && std::abs(x.y() - *h) <= tol) {
        return CbLine::Horizontal;
    }
    return std::nullopt;
}

double horizontal_singular_constant(const ModelParams& p) {
    const double g = p.gamma_total;
    const double gp = p.gamma_plus();
    if (g == gp) {
        throw ValidationError("no horizontal C_B line when Gamma == gamma_plus");
    }
    return p.gamma_minus() * (gp - 2.0 * g) / (2.0 * (g - gp));
}

double singular_feedback(const Vec2& x, const ModelParams& p, CbLine line) {
    if (line == CbLine::Vertical) {
        return 0.0;
    }
    const double c = horizontal_singular_constant(p);
    if (c == 0.0) {
        return 0.0;
    }
    return c / x.x();
}

SingularControl singular_control(const BlochState& s, const ModelParams& p) {
    const auto line = cb_line_at(s.vec(), p);
    if (!line) {
        std::ostringstream msg;
        msg << "singular_control: (" << s.x2() << ", " << s.x3() << ") is not on C_B";
        throw ValidationError(msg.str());
    }
    SingularControl out{singular_feedback(s.vec(), p, *line), *line, true};
    if (std::abs(out.phi) > 1.0 + 1e-12) {
        std::ostringstream msg;
        msg << "singular control phi = " << out.phi << " is not admissible (|phi| > 1)";
        throw InadmissibleSingularError(out.phi, msg.str());
    }
    return out;
}

Vec2 Trajectory::state_at(double t) const {
    const ArcPiece& piece = pieces.at(piece_index(t));
    return piece.state(std::clamp(t, piece.t0, piece.t1));
}

double Trajectory::control_at(double t) const {
    const ArcPiece& piece = pieces.at(piece_index(t));
    return piece.control(std::clamp(t, piece.t0, piece.t1));
}

std::size_t Trajectory::piece_index(double t) const {
    if (pieces.empty()) {
        throw ValidationError("trajectory has no arcs");
    }
    auto it = std::upper_bound(pieces.begin(), pieces.end(), t,
                               [](double v, const ArcPiece& a) { return v < a.t0; });
    if (it == pieces.begin()) {
        return 0;
    }
    std::size_t i = static_cast<std::size_t>(std::distance(pieces.begin(), it)) - 1;
    // Zero-length trailing pieces do not own their start time.
    while (i > 0 && pieces[i].t1 == pieces[i].t0 && t <= pieces[i - 1].t1) {
        --i;
    }
    return i;
}

void Trajectory::extend(const Trajectory& next) {
    if (next.samples.empty()) {
        return;
    }
    if (samples.empty()) {
        *this = next;
        return;
    }
    const double shift = t_end() - next.t_begin();
    for (const ArcPiece& src : next.pieces) {
        ArcPiece a = src;
        a.t0 += shift;
        a.t1 += shift;
        a.state = [f = src.state, shift](double t) { return f(t - shift); };
        a.control = [f = src.control, shift](double t) { return f(t - shift); };
        pieces.push_back(std::move(a));
    }
    for (std::size_t i = 1; i < next.samples.size(); ++i) {
        TrajSample s = next.samples[i];
        s.t += shift;
        samples.push_back(s);
    }
    for (const Arc& a : next.word.arcs()) {
        word.append(a);
    }
    termination = next.termination;
}

namespace {

void push_piece(Trajectory& traj, ArcPiece piece, double spacing) {
    const double len = piece.t1 - piece.t0;
    const int n = std::max(1, static_cast<int>(std::ceil(len / spacing - 1e-9)));
    const bool first = traj.samples.empty();
    for (int k = first ? 0 : 1; k <= n; ++k) {
        const double t = k == n ? piece.t1 : piece.t0 + len * static_cast<double>(k) / n;
        traj.samples.push_back({t, piece.state(t), piece.control(t)});
    }
    traj.pieces.push_back(std::move(piece));
}

ArcPiece constant_piece(const Vec2& x0, const ModelParams& p, ArcKind kind, double t0, double t1) {
    const double u = bang_control(kind);
    ArcPiece a;
    a.kind = kind;
    a.t0 = t0;
    a.t1 = t1;
    a.state = [x0, p, u, t0](double t) { return flow_const(x0, p, u, t - t0); };
    a.control = [u](double) { return u; };
    return a;
}

} // namespace

Trajectory singular_flow(const BlochState& s0, const ModelParams& p, double t, std::optional<CbLine> line) {
    if (!(t >= 0.0)) {
        throw ValidationError("singular_flow: duration must be nonnegative");
    }
    Vec2 x0 = s0.vec();
    if (!line) {
        line = cb_line_at(x0, p, kSnapTolerance);
        if (!line) {
            throw ValidationError("singular_flow: start state is not on C_B");
        }
    } else {
        const auto level = cb_horizontal_level(p);
        const double dist = *line == CbLine::Vertical ? std::abs(x0.x())
                            : level                   ? std::abs(x0.y() - *level)
                                                      : 1.0;
        if (dist > kSnapTolerance) {
            throw ValidationError("singular_flow: start state is not on the requested C_B line");
        }
    }

    Trajectory traj;
    ArcPiece piece;
    piece.kind = ArcKind::Z;
    piece.line = line;
    piece.t0 = 0.0;
    double duration = t;

    if (*line == CbLine::Vertical) {
        x0.x() = 0.0;
        const BlochState start(0.0, x0.y());
        piece.state = [start, p](double tau) { return free_flow(start, p, tau).vec(); };
        piece.control = [](double) { return 0.0; };
    } else {
        const double h = *cb_horizontal_level(p);
        const double c = horizontal_singular_constant(p);
        x0.y() = h;
        const double w0 = x0.x() * x0.x();
        if (std::abs(x0.x()) < std::abs(c) * (1.0 - 1e-12)) {
            const double phi = c / x0.x();
            throw InadmissibleSingularError(phi, "singular_flow: inadmissible start (|phi| > 1)");
        }
        const double g = p.gamma_total;
        const double w_inf = -c * h / g;
        const double sign = x0.x() < 0.0 ? -1.0 : 1.0;
        auto w_at = [w0, w_inf, g](double tau) { return w_inf + (w0 - w_inf) * std::exp(-2.0 * g * tau); };
        auto time_to = [w0, w_inf, g](double level) {
            return -std::log((level - w_inf) / (w0 - w_inf)) / (2.0 * g);
        };
        const double c2 = c * c;
        if (c2 > 0.0 && w_inf < c2 && w0 > c2) {
            const double tau = time_to(c2);
            if (tau < duration) {
                duration = tau;
                traj.termination = Termination::Admissibility;
            }
        }
        const double rim = 1.0 - h * h;
        if (w_inf > rim && w0 < rim) {
            const double tau = time_to(rim);
            if (tau < duration) {
                duration = tau;
                traj.termination = Termination::LeftDisk;
            }
        }
        piece.feedback = c != 0.0;
        piece.state = [w_at, sign, h](double tau) {
            return Vec2{sign * std::sqrt(std::max(0.0, w_at(tau))), h};
        };
        piece.control = [w_at, sign, c](double tau) {
            if (c == 0.0) {
                return 0.0;
            }
            return std::clamp(c / (sign * std::sqrt(std::max(0.0, w_at(tau)))), -1.0, 1.0);
        };
    }
    piece.t1 = duration;
    traj.word.append({ArcKind::Z, duration, line});
    push_piece(traj, std::move(piece), kSampleSpacing);
    return traj;
}

Trajectory propagate_word(const BlochState& s0, const ModelParams& p, const ControlWord& word,
                          double sample_spacing) {
    Trajectory traj;
    Vec2 x = s0.vec();
    double t = 0.0;
    if (word.empty()) {
        ArcPiece a;
        a.kind = ArcKind::F0;
        a.state = [x](double) { return x; };
        a.control = [](double) { return 0.0; };
        traj.pieces.push_back(a);
        traj.samples.push_back({0.0, x, 0.0});
        return traj;
    }
    for (const Arc& arc : word.arcs()) {
        if (arc.kind == ArcKind::Z) {
            Trajectory z = singular_flow(BlochState(x), p, arc.duration, arc.line);
            if (traj.samples.empty()) {
                traj = std::move(z);
            } else {
                traj.extend(z);
            }
            t = traj.t_end();
            x = traj.end();
            if (traj.termination != Termination::None) {
                return traj;
            }
            continue;
        }
        ArcPiece piece = constant_piece(x, p, arc.kind, t, t + arc.duration);
        x = piece.state(t + arc.duration);
        push_piece(traj, std::move(piece), sample_spacing);
        traj.word.append({arc.kind, arc.duration, std::nullopt});
        t += arc.duration;
    }
    return traj;
}

Trajectory rk_oracle(const BlochState& s0, const ModelParams& p, const FeedbackFn& u, double t, double tol) {
    if (!(tol >= 1e-12 && tol <= 1e-6)) {
        throw ValidationError("rk_oracle: tolerance must lie in [1e-12, 1e-6]");
    }
    if (!(t >= 0.0)) {
        throw ValidationError("rk_oracle: duration must be nonnegative");
    }
    auto rhs = [&](double tau, const Vec2& x) { return controlled_field(x, p, u(tau, x)); };
    DopriOptions opt;
    opt.rtol = tol;
    opt.atol = tol;
    auto sol = std::make_shared<OdeSolution<2>>(dopri45<2>(rhs, 0.0, s0.vec(), t, opt));

    Trajectory traj;
    ArcPiece piece;
    piece.kind = ArcKind::F0;
    piece.feedback = true;
    piece.t0 = 0.0;
    piece.t1 = t;
    piece.state = [sol](double tau) { return Vec2(sol->at(tau)); };
    piece.control = [sol, u](double tau) { return u(tau, sol->at(tau)); };
    for (std::size_t i = 0; i < sol->t.size(); ++i) {
        if (i > 0) {
            const double gap = sol->t[i] - sol->t[i - 1];
            const int n = static_cast<int>(std::ceil(gap / kSampleSpacing - 1e-9));
            for (int k = 1; k < n; ++k) {
                const double tau = sol->t[i - 1] + gap * k / n;
                const Vec2 x = sol->at(tau);
                traj.samples.push_back({tau, x, u(tau, x)});
            }
        }
        traj.samples.push_back({sol->t[i], sol->x[i], u(sol->t[i], sol->x[i])});
    }
    traj.pieces.push_back(std::move(piece));
    return traj;
}

Trajectory rk_oracle(const BlochState& s0, const ModelParams& p, const std::function<double(double)>& u,
                     double t, double tol) {
    return rk_oracle(s0, p, FeedbackFn([u](double tau, const Vec2&) { return u(tau); }), t, tol);
}

OdeSolution<3> rk_oracle_3d(const Bloch3State& s0, const ModelParams& p, const std::function<double(double)>& u1,
                            const std::function<double(double)>& u2, double t, double tol) {
    if (!(tol >= 1e-12 && tol <= 1e-6)) {
        throw ValidationError("rk_oracle_3d: tolerance must lie in [1e-12, 1e-6]");
    }
    auto rhs = [&](double tau, const Eigen::Vector3d& x) {
        const auto r = rhs_3d({x[0], x[1], x[2]}, p, u1(tau), u2(tau));
        return Eigen::Vector3d(r[0], r[1], r[2]);
    };
    DopriOptions opt;
    opt.rtol = tol;
    opt.atol = tol;
    return dopri45<3>(rhs, 0.0, Eigen::Vector3d(s0.x1, s0.x2, s0.x3), t, opt);
}

std::string to_string(EventKind k) {
    switch (k) {
    case EventKind::DeltaA: return "deltaA";
    case EventKind::DeltaB: return "deltaB";
    case EventKind::X2: return "x2";
    case EventKind::DiskBoundary: return "disk";
    }
    return "?";
}

namespace {

int sign_of(double v, double tiny) { return v > tiny ? 1 : (v < -tiny ? -1 : 0); }

double event_value(EventKind k, const Vec2& x, const ModelParams& p) {
    switch (k) {
    case EventKind::DeltaA: return delta_A(x, p);
    case EventKind::DeltaB: return delta_B(x, p);
    case EventKind::X2: return x.x();
    case EventKind::DiskBoundary: return 1.0 - x.squaredNorm();
    }
    return 0.0;
}

} // namespace

std::vector<Event> event_crossings(const Trajectory& traj, const ModelParams& p, double scan_step) {
    std::vector<Event> events;
    if (traj.pieces.empty() || traj.t_end() <= traj.t_begin()) {
        return events;
    }
    std::vector<double> grid;
    for (const ArcPiece& a : traj.pieces) {
        const double len = a.t1 - a.t0;
        const int n = std::max(8, static_cast<int>(std::ceil(len / scan_step)));
        for (int k = grid.empty() ? 0 : 1; k <= n; ++k) {
            grid.push_back(k == n ? a.t1 : a.t0 + len * k / n);
        }
    }
    constexpr double tiny = 1e-13;
    constexpr double time_tol = 1e-10;

    for (EventKind kind : {EventKind::DeltaA, EventKind::DeltaB, EventKind::X2, EventKind::DiskBoundary}) {
        auto f = [&](double t) { return event_value(kind, traj.state_at(t), p); };
        std::vector<double> vals(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            vals[i] = f(grid[i]);
        }
        auto bisect = [&](double lo, double hi, int slo) {
            while (hi - lo > time_tol) {
                const double mid = 0.5 * (lo + hi);
                if (sign_of(f(mid), 0.0) == slo) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return 0.5 * (lo + hi);
        };
        auto emit = [&](double t, bool grazing, int dir) {
            events.push_back({kind, t, traj.state_at(t), grazing, dir});
        };

        int prev = 0;               // last nonzero sign
        std::ptrdiff_t run_start = -1; // first index of the current zero run
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const int s = sign_of(vals[i], tiny);
            if (s == 0) {
                if (run_start < 0) {
                    run_start = static_cast<std::ptrdiff_t>(i);
                }
                continue;
            }
            if (run_start >= 0) {
                const auto rs = static_cast<std::size_t>(run_start);
                const bool interval = i - rs >= 2;
                if (prev != 0) {
                    emit(grid[rs], prev == s, s);
                    if (interval) {
                        emit(grid[i - 1], false, s);
                    }
                } else if (interval || rs > 0) {
                    emit(grid[i - 1], false, s);
                }
                run_start = -1;
            } else if (prev != 0 && s != prev) {
                emit(bisect(grid[i - 1], grid[i], prev), false, s);
            } else if (prev != 0 && i >= 2 && sign_of(vals[i - 1], tiny) == s && sign_of(vals[i - 2], tiny) == s) {
                // Tangency candidate: |f| has a local minimum at i-1.
                const double a = std::abs(vals[i - 2]);
                const double b = std::abs(vals[i - 1]);
                const double c = std::abs(vals[i]);
                if (b < a && b < c) {
                    double lo = grid[i - 2];
                    double hi = grid[i];
                    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
                    while (hi - lo > time_tol) {
                        const double m1 = hi - gr * (hi - lo);
                        const double m2 = lo + gr * (hi - lo);
                        if (s * f(m1) < s * f(m2)) {
                            hi = m2;
                        } else {
                            lo = m1;
                        }
                    }
                    const double tm = 0.5 * (lo + hi);
                    const double fm = f(tm);
                    if (sign_of(fm, 0.0) != s) {
                        emit(bisect(grid[i - 2], tm, s), false, -s);
                        emit(bisect(tm, grid[i], -s), false, s);
                    } else if (std::abs(fm) < 1e-9) {
                        emit(tm, true, s);
                    }
                }
            }
            prev = s;
        }
        if (run_start >= 0 && prev != 0) {
            emit(grid[static_cast<std::size_t>(run_start)], false, 0);
        }
    }
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
    return events;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const ModelParams& p) {
    os << "t,x2,x3,u,deltaA,deltaB\n";
    char buf[256];
    for (const TrajSample& s : traj.samples) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t, s.x.x(), s.x.y(), s.u,
                      delta_A(s.x, p), delta_B(s.x, p));
        os << buf;
    }
}

} // namespace qtoc
