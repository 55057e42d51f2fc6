#include "qtoc/pmp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <ostream>
#include <set>

#include "qtoc/errors.hpp"

namespace qtoc {

double pseudo_hamiltonian(const Vec2& x, const AdjointState& a, double u, const ModelParams& p) {
    return a.vec().dot(controlled_field(x, p, u)) + a.p0;
}

double max_hamiltonian_part(const Vec2& x, const AdjointState& a, const ModelParams& p) {
    return a.vec().dot(drift_field(x, p)) + std::abs(switching_function(x, a));
}

Vec2 adjoint_rhs(const AdjointState& a, double u, const ModelParams& p) {
    return {p.gamma_total * a.p2 - u * a.p3, p.gamma_plus() * a.p3 + u * a.p2};
}

double switching_function(const Vec2& x, const AdjointState& a) { return -a.p2 * x.y() + a.p3 * x.x(); }

double switching_derivative(const Vec2& x, const AdjointState& a, const ModelParams& p) {
    return a.vec().dot(bracket_field(x, p));
}

Vec2 adjoint_flow(const Vec2& p0, const ModelParams& p, double u, double t) {
    // pdot = -A^T p, so p(t) = exp(-A t)^T p(0).
    return transition_matrix(p, u, -t).transpose() * p0;
}

Vec2 singular_adjoint(const Vec2& x, const ModelParams& p, double h) {
    Mat2 m;
    m.row(0) = drift_field(x, p).transpose();
    m.row(1) = control_field(x).transpose();
    if (std::abs(m.determinant()) <= 1e-14) {
        throw NumericalError("singular_adjoint: F and G are parallel (state on C_A)");
    }
    return m.partialPivLu().solve(Vec2{h, 0.0});
}

bool singular_entry_allowed(const Vec2& x, const ModelParams& p, CbLine line) {
    if (line == CbLine::Horizontal) {
        const double phi = singular_feedback(x, p, line);
        if (!(std::abs(phi) <= 1.0 + 1e-9)) {
            return false;
        }
    }
    TurnpikeLabel label = turnpike_at(x, p, line);
    if (label == TurnpikeLabel::Unlabeled && std::abs(delta_A(x, p)) <= 1e-9) {
        // On C_A the label is read just after the start of the singular arc.
        try {
            const Trajectory z = singular_flow(BlochState(x), p, 1e-4, line);
            label = turnpike_at(z.end(), p, line);
        } catch (const std::exception&) {
            return false;
        }
    }
    return label == TurnpikeLabel::Turnpike;
}

namespace {

constexpr double kTimeTol = 1e-12;

struct ArcRecord {
    ArcKind kind;
    std::optional<CbLine> line;
    double t0;
    double duration;
    Vec2 x0;
    Vec2 a0;
};

double phi_scale(const Vec2& x, const Vec2& a) { return a.norm() * x.norm() + 1.0; }

struct BangResult {
    double duration = 0.0;
    bool ended = false;       // ran to t_max
    bool singular = false;    // entered a Z arc
    CbLine line = CbLine::Vertical;
};

// Follows u = sign(Phi) on one bang arc until Phi vanishes.
BangResult follow_bang(const Vec2& x0, const Vec2& a0, double u, double remaining, const ModelParams& p,
                       const ExtremalOptions& opt, bool allow_singular) {
    auto state = [&](double tau) { return flow_const(x0, p, u, tau); };
    auto adj = [&](double tau) { return adjoint_flow(a0, p, u, tau); };
    auto phi = [&](double tau) { return switching_function(state(tau), AdjointState::from(adj(tau))); };
    const double tol = opt.switch_tol * phi_scale(x0, a0);

    auto singular_check = [&](double tau, BangResult& out) {
        if (!allow_singular) {
            return false;
        }
        const Vec2 x = state(tau);
        const Vec2 a = adj(tau);
        const auto line = cb_line_at(x, p, 1e-6);
        if (!line) {
            return false;
        }
        const double dphi = switching_derivative(x, AdjointState::from(a), p);
        if (std::abs(dphi) > 1e-5 * (a.norm() * bracket_field(x, p).norm() + 1.0)) {
            return false;
        }
        if (!singular_entry_allowed(x, p, *line)) {
            return false;
        }
        out.singular = true;
        out.line = *line;
        out.duration = tau;
        return true;
    };

    BangResult out;
    const int n = std::max(4, static_cast<int>(std::ceil(remaining / opt.scan_step)));
    const double h = remaining / n;
    double prev_tau = 0.0;
    double prev_val = phi(0.0);
    double prev2_val = std::numeric_limits<double>::quiet_NaN();
    for (int k = 1; k <= n; ++k) {
        const double tau = k == n ? remaining : h * k;
        const double val = phi(tau);
        if (u * val < -tol) {
            // Sign change: bisection on [prev_tau, tau].
            double lo = prev_tau;
            double hi = tau;
            while (hi - lo > kTimeTol) {
                const double mid = 0.5 * (lo + hi);
                (u * phi(mid) > 0.0 ? lo : hi) = mid;
            }
            const double root = 0.5 * (lo + hi);
            if (root <= kTimeTol && std::abs(prev_val) <= tol) {
                // Phi starts at zero and immediately has the wrong sign.
                out.duration = 0.0;
                return out;
            }
            if (singular_check(root, out)) {
                return out;
            }
            out.duration = root;
            return out;
        }
        if (k >= 2 && std::isfinite(prev2_val)) {
            // Tangency: |Phi| has a local minimum at prev_tau.
            const double a = std::abs(prev2_val);
            const double b = std::abs(prev_val);
            const double c = std::abs(val);
            if (b < a && b < c) {
                double lo = std::max(0.0, prev_tau - h);
                double hi = tau;
                const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
                while (hi - lo > 1e-10) {
                    const double m1 = hi - gr * (hi - lo);
                    const double m2 = lo + gr * (hi - lo);
                    if (u * phi(m1) < u * phi(m2)) {
                        hi = m2;
                    } else {
                        lo = m1;
                    }
                }
                const double tm = 0.5 * (lo + hi);
                const double vm = phi(tm);
                if (u * vm <= tol) {
                    if (singular_check(tm, out)) {
                        return out;
                    }
                    if (u * vm < 0.0) {
                        double l2 = prev_tau - h;
                        double h2 = tm;
                        while (h2 - l2 > kTimeTol) {
                            const double mid = 0.5 * (l2 + h2);
                            (u * phi(mid) > 0.0 ? l2 : h2) = mid;
                        }
                        out.duration = 0.5 * (l2 + h2);
                        return out;
                    }
                }
            }
        }
        prev2_val = prev_val;
        prev_val = val;
        prev_tau = tau;
    }
    out.duration = remaining;
    out.ended = true;
    return out;
}

} // namespace

Extremal propagate_extremal(const BlochState& s0, const Vec2& a0_in, const ModelParams& p, double t_max,
                            const ExtremalOptions& opt) {
    if (a0_in.norm() == 0.0) {
        throw ValidationError("propagate_extremal: initial covector must be nonzero");
    }
    if (!(t_max >= 0.0)) {
        throw ValidationError("propagate_extremal: t_max must be nonnegative");
    }
    Extremal ext;
    const Vec2 x_start = s0.vec();
    Vec2 a = a0_in;
    const double hmax = max_hamiltonian_part(x_start, AdjointState::from(a), p);
    const double htol = 1e-12 * a.norm() * (drift_field(x_start, p).norm() + control_field(x_start).norm() + 1.0);
    double p0 = -1.0;
    if (hmax > htol) {
        a /= hmax;
    } else if (hmax >= -htol) {
        a /= a.norm();
        p0 = 0.0;
        ext.abnormal = true;
        ext.flags.push_back("abnormal");
    } else {
        throw ValidationError("propagate_extremal: H_max < 0, no multiplier p0 <= 0 exists");
    }
    const double h_const = -p0;

    std::vector<ArcRecord> arcs;
    Vec2 x = x_start;
    double t = 0.0;
    int switches = 0;
    int zero_arcs = 0;

    // Control on the first arc.
    std::optional<double> u;
    bool start_singular = false;
    CbLine start_line = CbLine::Vertical;
    {
        const AdjointState as = AdjointState::from(a, p0);
        const double tol = opt.switch_tol * phi_scale(x, a);
        const double phi0 = switching_function(x, as);
        const double dphi0 = switching_derivative(x, as, p);
        if (std::abs(phi0) > tol) {
            u = phi0 > 0 ? 1.0 : -1.0;
        } else if (std::abs(dphi0) > tol) {
            u = dphi0 > 0 ? 1.0 : -1.0;
        } else {
            const auto line = cb_line_at(x, p, 1e-9);
            if (opt.allow_singular && line && singular_entry_allowed(x, p, *line) && !ext.abnormal) {
                start_singular = true;
                start_line = *line;
            } else {
                ext.flags.push_back("theta_boundary");
                for (double cand : {1.0, -1.0}) {
                    const double probe = 1e-4;
                    const Vec2 xp = flow_const(x, p, cand, probe);
                    const Vec2 ap = adjoint_flow(a, p, cand, probe);
                    if (cand * switching_function(xp, AdjointState::from(ap)) > 0) {
                        u = cand;
                        break;
                    }
                }
                if (!u) {
                    u = 1.0;
                }
            }
        }
    }

    bool in_singular = start_singular;
    CbLine line = start_line;
    while (t < t_max - kTimeTol) {
        const double remaining = t_max - t;
        if (in_singular) {
            const double dwell = std::min(opt.singular_dwell.value_or(remaining), remaining);
            Trajectory z = singular_flow(BlochState(x), p, dwell, line);
            double dur = z.t_end();
            // Truncate where the arc stops being turnpike.
            for (std::size_t i = 1; i < z.samples.size(); ++i) {
                if (turnpike_at(z.samples[i].x, p, line) != TurnpikeLabel::Turnpike &&
                    std::abs(delta_A(z.samples[i].x, p)) > 1e-9) {
                    double lo = z.samples[i - 1].t;
                    double hi = z.samples[i].t;
                    for (int it = 0; it < 60; ++it) {
                        const double mid = 0.5 * (lo + hi);
                        (turnpike_at(z.state_at(mid), p, line) == TurnpikeLabel::Turnpike ? lo : hi) = mid;
                    }
                    dur = lo;
                    ext.flags.push_back("singular_arc_left_turnpike");
                    break;
                }
            }
            if (z.termination == Termination::Admissibility) {
                ext.flags.push_back("singular_arc_hit_admissibility_limit");
            }
            const Vec2 a_entry = std::abs(delta_A(x, p)) > 1e-12 ? singular_adjoint(x, p, h_const) : a;
            arcs.push_back({ArcKind::Z, line, t, dur, x, a_entry});
            x = z.state_at(dur);
            t += dur;
            in_singular = false;
            if (t >= t_max - kTimeTol || dur <= 0.0) {
                if (dur <= 0.0) {
                    break;
                }
                continue;
            }
            // Leave with the requested bang; the covector continues from the singular one.
            a = singular_adjoint(x, p, h_const);
            u = static_cast<double>(opt.singular_exit >= 0 ? 1 : -1);
            const double probe = std::min(1e-3, 0.5 * (t_max - t));
            const Vec2 xp = flow_const(x, p, *u, probe);
            const Vec2 ap = adjoint_flow(a, p, *u, probe);
            if (*u * switching_function(xp, AdjointState::from(ap)) <= 0.0) {
                ext.flags.push_back("singular_exit_inconsistent");
                break;
            }
            ++switches;
            continue;
        }

        const BangResult br = follow_bang(x, a, *u, remaining, p, opt, opt.allow_singular && !ext.abnormal);
        const ArcKind kind = *u > 0 ? ArcKind::Y : ArcKind::X;
        if (br.duration > 0.0) {
            arcs.push_back({kind, std::nullopt, t, br.duration, x, a});
        }
        const Vec2 x_next = flow_const(x, p, *u, br.duration);
        a = adjoint_flow(a, p, *u, br.duration);
        x = x_next;
        t += br.duration;
        if (br.ended) {
            break;
        }
        if (br.singular) {
            in_singular = true;
            line = br.line;
            ++switches;
        } else {
            zero_arcs = br.duration <= 0.0 ? zero_arcs + 1 : 0;
            if (zero_arcs >= 2) {
                ext.flags.push_back("stalled");
                break;
            }
            u = -*u;
            if (br.duration > 0.0) {
                ++switches;
                ext.switch_times.push_back(t);
            }
        }
        if (switches > opt.max_switches) {
            throw NumericalError("propagate_extremal: more than " + std::to_string(opt.max_switches) +
                                 " switches (chattering guard)");
        }
    }

    std::vector<Arc> word_arcs;
    for (const ArcRecord& r : arcs) {
        word_arcs.push_back({r.kind, r.duration, r.line});
    }
    ext.word = ControlWord(word_arcs);
    ext.trajectory = propagate_word(s0, p, ext.word, opt.sample_spacing);

    // Adjoint samples from the arc records.
    for (const TrajSample& s : ext.trajectory.samples) {
        std::size_t k = 0;
        while (k + 1 < arcs.size() && s.t > arcs[k].t0 + arcs[k].duration) {
            ++k;
        }
        Vec2 av = a;
        double uu = s.u;
        if (!arcs.empty()) {
            const ArcRecord& r = arcs[k];
            const double tau = s.t - r.t0;
            if (r.kind == ArcKind::Z) {
                av = std::abs(delta_A(s.x, p)) > 1e-12 ? singular_adjoint(s.x, p, h_const) : r.a0;
            } else {
                av = adjoint_flow(r.a0, p, bang_control(r.kind), tau);
                uu = bang_control(r.kind);
            }
        }
        const AdjointState as = AdjointState::from(av, p0);
        ext.samples.push_back({s.t, s.x, as, uu, switching_function(s.x, as)});
    }
    return ext;
}

namespace {

// Transition matrix of vdot = A(u(t)) v along a trajectory.
class VariationalFlow {
public:
    VariationalFlow(const Trajectory& traj, const ModelParams& p) : traj_(traj), p_(p) {
        Mat2 m = Mat2::Identity();
        for (const ArcPiece& piece : traj.pieces) {
            starts_.push_back(m);
            if (piece.feedback) {
                auto rhs = [&piece, this](double t, const Eigen::Vector4d& y) {
                    const Mat2 a = system_matrix(p_, piece.control(std::clamp(t, piece.t0, piece.t1)));
                    const Mat2 mm = Eigen::Map<const Mat2>(y.data());
                    const Mat2 d = a * mm;
                    return Eigen::Vector4d(Eigen::Map<const Eigen::Vector4d>(d.data()));
                };
                DopriOptions opt;
                opt.rtol = 1e-12;
                opt.atol = 1e-12;
                const Eigen::Vector4d y0(Eigen::Map<const Eigen::Vector4d>(Mat2::Identity().eval().data()));
                dense_.push_back(std::make_shared<OdeSolution<4>>(dopri45<4>(rhs, piece.t0, y0, piece.t1, opt)));
                m = relative(piece, dense_.size() - 1, piece.t1) * m;
            } else {
                dense_.push_back(nullptr);
                m = transition_matrix(p_, piece.control(piece.t0), piece.t1 - piece.t0) * m;
            }
        }
    }

    Mat2 at(double t) const {
        const std::size_t i = traj_.piece_index(t);
        const ArcPiece& piece = traj_.pieces[i];
        const double tc = std::clamp(t, piece.t0, piece.t1);
        return relative(piece, i, tc) * starts_[i];
    }

private:
    Mat2 relative(const ArcPiece& piece, std::size_t i, double t) const {
        if (dense_[i]) {
            const Eigen::Vector4d y = dense_[i]->at(t);
            return Eigen::Map<const Mat2>(y.data());
        }
        return transition_matrix(p_, piece.control(piece.t0), t - piece.t0);
    }

    const Trajectory& traj_;
    const ModelParams& p_;
    std::vector<Mat2> starts_;
    std::vector<std::shared_ptr<OdeSolution<4>>> dense_;
};

} // namespace

Vec2 theta_vector(const Trajectory& traj, const ModelParams& p, double t) {
    const VariationalFlow flow(traj, p);
    return flow.at(t).inverse() * control_field(traj.state_at(t));
}

std::vector<ThetaSample> theta_function(const Trajectory& traj, const ModelParams& p) {
    const VariationalFlow flow(traj, p);
    const Vec2 v0 = control_field(traj.start());
    if (v0.norm() < 1e-12) {
        throw NumericalError("theta_function: vtilde(0) vanishes (trajectory starts at the origin)");
    }
    auto eval = [&](double t) {
        const Mat2 minv = flow.at(t).inverse();
        const Vec2 x = traj.state_at(t);
        const Vec2 v = minv * control_field(x);
        const Vec2 vd = minv * bracket_field(x, p);
        const double n2 = v.squaredNorm();
        return std::pair<Vec2, double>{v, n2 > 0 ? cross(v, vd) / n2 : 0.0};
    };
    std::vector<ThetaSample> out;
    auto [v_prev, td0] = eval(traj.t_begin());
    double theta = 0.0;
    out.push_back({traj.t_begin(), 0.0, td0, v_prev});

    auto advance = [&](auto&& self, double ta, double tb, const Vec2& va, int depth) -> void {
        auto [vb, tdb] = eval(tb);
        const double inc = std::atan2(cross(va, vb), va.dot(vb));
        if (std::abs(inc) > std::numbers::pi / 4 && depth < 30) {
            const double tm = 0.5 * (ta + tb);
            self(self, ta, tm, va, depth + 1);
            self(self, tm, tb, out.back().vtilde, depth + 1);
            return;
        }
        theta += inc;
        out.push_back({tb, theta, tdb, vb});
    };
    for (std::size_t i = 1; i < traj.samples.size(); ++i) {
        advance(advance, traj.samples[i - 1].t, traj.samples[i].t, out.back().vtilde, 0);
    }
    return out;
}

bool switch_permitted(const std::vector<ThetaSample>& theta, double t) {
    if (theta.empty()) {
        return false;
    }
    auto it = std::lower_bound(theta.begin(), theta.end(), t,
                               [](const ThetaSample& s, double v) { return s.t < v; });
    double th = 0.0;
    double td = 0.0;
    if (it == theta.end()) {
        th = theta.back().theta;
        td = theta.back().theta_dot;
    } else if (it == theta.begin() || it->t == t) {
        th = it->theta;
        td = it->theta_dot;
    } else {
        const auto& b = *it;
        const auto& a = *(it - 1);
        const double w = (t - a.t) / (b.t - a.t);
        th = (1 - w) * a.theta + w * b.theta;
        td = (1 - w) * a.theta_dot + w * b.theta_dot;
    }
    return (td > 0.0 && th > 0.0) || (td < 0.0 && th < 0.0);
}

namespace {

// Covector making s0 a singular start (Phi = Phi' = 0, H_max = 1), if any.
std::optional<Vec2> singular_start_covector(const Vec2& x, const ModelParams& p) {
    const Vec2 g = control_field(x);
    Mat2 m;
    m.row(0) = drift_field(x, p).transpose();
    m.row(1) = (g.norm() > 1e-12 ? g : bracket_field(x, p)).transpose();
    if (std::abs(m.determinant()) <= 1e-14) {
        return std::nullopt;
    }
    return Vec2(m.partialPivLu().solve(Vec2{1.0, 0.0}));
}

} // namespace

FanResult shoot_extremal_fan(const BlochState& s0, const ModelParams& p, int n_directions, double t_max) {
    if (n_directions < 1) {
        throw ValidationError("shoot_extremal_fan: need at least one direction");
    }
    FanResult fan;
    const Vec2 x0 = s0.vec();
    auto shoot = [&](const Vec2& a0, bool targeted, const ExtremalOptions& opt) {
        FanShot shot;
        shot.angle = std::atan2(a0.y(), a0.x());
        shot.a0 = a0;
        shot.targeted = targeted;
        try {
            const Extremal e = propagate_extremal(s0, a0, p, t_max, opt);
            shot.abnormal = e.abnormal;
            shot.word = e.word;
            shot.endpoint = e.endpoint();
            shot.flags = e.flags;
        } catch (const ValidationError&) {
            ++fan.excluded;
            return;
        } catch (const NumericalError& err) {
            shot.flags.push_back(err.what());
        }
        fan.shots.push_back(std::move(shot));
    };

    const ExtremalOptions plain;
    for (int k = 0; k < n_directions; ++k) {
        const double ang = 2.0 * std::numbers::pi * k / n_directions;
        shoot(Vec2{std::cos(ang), std::sin(ang)}, false, plain);
    }
    // Abnormal directions: p orthogonal to F + u G with u = sign(p . G).
    const Vec2 g0 = control_field(x0);
    for (double u : {1.0, -1.0}) {
        const Vec2 v = controlled_field(x0, p, u);
        if (v.norm() < 1e-14) {
            continue;
        }
        Vec2 a = perp(v).normalized();
        if (u * a.dot(g0) < 0) {
            a = -a;
        }
        if (u * a.dot(g0) > 0) {
            shoot(a, false, plain);
        }
    }

    // Singular entries: at s0 itself, and where the first bang arcs meet turnpike C_B arcs.
    std::vector<Vec2> targets;
    if (const auto line = cb_line_at(x0, p, 1e-9); line && singular_entry_allowed(x0, p, *line)) {
        if (const auto a = singular_start_covector(x0, p)) {
            targets.push_back(*a);
        }
    }
    for (double u : {1.0, -1.0}) {
        const Trajectory arc = propagate_word(s0, p, ControlWord({{u > 0 ? ArcKind::Y : ArcKind::X, t_max, {}}}));
        for (const Event& ev : event_crossings(arc, p)) {
            if (ev.kind != EventKind::DeltaB || ev.t <= 1e-9) {
                continue;
            }
            const auto line = cb_line_at(ev.x, p, 1e-6);
            if (!line || !singular_entry_allowed(ev.x, p, *line) || std::abs(delta_A(ev.x, p)) <= 1e-9) {
                continue;
            }
            targets.push_back(adjoint_flow(singular_adjoint(ev.x, p), p, u, -ev.t));
        }
    }
    for (const Vec2& a : targets) {
        for (double frac : {0.05, 0.15, 0.3, 0.6}) {
            for (int exit : {1, -1}) {
                ExtremalOptions opt;
                opt.singular_dwell = frac * t_max;
                opt.singular_exit = exit;
                shoot(a, true, opt);
            }
        }
        shoot(a, true, plain);
    }

    std::stable_sort(fan.shots.begin(), fan.shots.end(),
                     [](const FanShot& l, const FanShot& r) { return l.angle < r.angle; });
    std::set<std::string> seen;
    for (const FanShot& s : fan.shots) {
        const std::string pat = s.word.pattern();
        if (seen.insert(pat).second) {
            fan.patterns.push_back(pat);
        }
    }
    return fan;
}

void write_extremal_csv(std::ostream& os, const Extremal& e, const ModelParams& p) {
    os << "t,x2,x3,p2,p3,u,Phi,theta\n";
    std::vector<ThetaSample> theta;
    try {
        theta = theta_function(e.trajectory, p);
    } catch (const NumericalError&) {
        theta.clear();
    }
    std::map<double, double> by_time;
    for (const ThetaSample& s : theta) {
        by_time.emplace(s.t, s.theta);
    }
    char buf[320];
    for (const ExtremalPoint& s : e.samples) {
        const auto it = by_time.find(s.t);
        const double th = it == by_time.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t, s.x.x(), s.x.y(),
                      s.a.p2, s.a.p3, s.u, s.phi, th);
        os << buf;
    }
}

} // namespace qtoc
