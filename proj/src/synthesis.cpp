#include "qtoc/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "geometry.hpp"
#include "qtoc/errors.hpp"
#include "qtoc/pmp.hpp"

namespace qtoc {

std::string to_string(CaseClass c) {
    switch (c) {
    case CaseClass::UnitalAperiodic: return "unital_aperiodic";
    case CaseClass::UnitalMixed: return "unital_mixed";
    case CaseClass::AffinePurification: return "affine_purification";
    case CaseClass::AffineGeneral: return "affine_general";
    case CaseClass::Other: return "other";
    }
    return "other";
}

char case_letter(CaseClass c) {
    switch (c) {
    case CaseClass::UnitalAperiodic: return 'a';
    case CaseClass::UnitalMixed: return 'b';
    case CaseClass::AffinePurification: return 'c';
    case CaseClass::AffineGeneral: return 'd';
    case CaseClass::Other: return 'o';
    }
    return 'o';
}

CaseClass classify_case(const ModelParams& p) {
    p.validate();
    constexpr double tol = 1e-12;
    const double gp = p.gamma_plus();
    const double gm = p.gamma_minus();
    const double G = p.gamma_total;
    if (gm == 0.0) {
        if (G > gp + 2.0 + tol) {
            return CaseClass::UnitalAperiodic;
        }
        if (G > gp - 2.0 + tol && G < gp + 2.0 - tol) {
            return CaseClass::UnitalMixed;
        }
        return CaseClass::Other;
    }
    if (gp <= 0.0 || G < gp + 2.0 - tol) {
        return CaseClass::Other;
    }
    const double ratio = gm / gp;
    if (std::abs(ratio + 1.0) <= tol) {
        return CaseClass::AffinePurification;
    }
    if (ratio > -1.0 && ratio < 0.0) {
        return CaseClass::AffineGeneral;
    }
    return CaseClass::Other;
}

// ---------------------------------------------------------------- switch curve

namespace {

constexpr double kFrontSpacing = 2e-3;
constexpr double kLimitReach = 1e-7;

// sin of the angle between G(x1) and the transported G(flow(x1, u, s)).
double transport_sine(const Vec2& x1, const ModelParams& p, double u, double s) {
    const Vec2 w0 = control_field(x1);
    const Vec2 xs = flow_const(x1, p, u, s);
    const Vec2 w = transition_matrix(p, u, -s) * control_field(xs);
    const double n = w0.norm() * w.norm();
    return n > 0.0 ? cross(w0, w) / n : 0.0;
}

double arc_control(const Trajectory& arc) {
    if (arc.pieces.size() != 1 || arc.pieces.front().kind == ArcKind::Z) {
        throw ValidationError("switch_curve: seed arc must be a single bang or free arc");
    }
    return bang_control(arc.pieces.front().kind);
}

ArcKind kind_of(double u) { return u > 0 ? ArcKind::Y : (u < 0 ? ArcKind::X : ArcKind::F0); }

std::optional<Event> first_cb_event(const Trajectory& traj, const ModelParams& p) {
    for (const auto& e : event_crossings(traj, p)) {
        if (e.kind == EventKind::DeltaB && !e.grazing && e.t > 1e-9 && e.x.norm() > 1e-6) {
            return e;
        }
    }
    return std::nullopt;
}

} // namespace

std::optional<double> next_switch_delay(const Vec2& x1, const ModelParams& p, double u, double s_max) {
    if (control_field(x1).norm() == 0.0) {
        throw NumericalError("next_switch_delay: G vanishes at the switch point");
    }
    double s = 1e-7;
    double f0 = transport_sine(x1, p, u, s);
    double step = 1e-7;
    while (f0 == 0.0 && s < s_max) {
        s += step;
        step *= 2.0;
        f0 = transport_sine(x1, p, u, s);
    }
    double prev = s;
    while (s < s_max) {
        step = std::min(step * 1.5, 5e-3);
        s = std::min(s + step, s_max);
        const double f = transport_sine(x1, p, u, s);
        if (f * f0 < 0.0) {
            double lo = prev;
            double hi = s;
            for (int k = 0; k < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++k) {
                const double mid = 0.5 * (lo + hi);
                (transport_sine(x1, p, u, mid) * f0 > 0.0 ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        }
        prev = s;
    }
    return std::nullopt;
}

SwitchCurve switch_curve(const ModelParams& p, const Trajectory& seed_arc) {
    const double sigma = arc_control(seed_arc);
    const auto ev = first_cb_event(seed_arc, p);
    if (!ev) {
        throw ValidationError("switch_curve: seed arc never meets C_B");
    }
    const Vec2 x0 = seed_arc.start();
    const double t0 = seed_arc.t_begin();
    const double s_max = 20.0;

    SwitchCurve c;
    c.seed = ev->x;
    c.seed_time = ev->t - t0;
    c.first = kind_of(sigma);
    c.evaluate = [x0, p, sigma, s_max](double t1) -> std::optional<std::pair<Vec2, double>> {
        const Vec2 x1 = flow_const(x0, p, sigma, t1);
        const auto s = next_switch_delay(x1, p, -sigma, s_max);
        if (!s) {
            return std::nullopt;
        }
        return std::pair<Vec2, double>{flow_const(x1, p, -sigma, *s), *s};
    };

    c.first_switch.push_back(c.seed_time);
    c.delay.push_back(0.0);
    c.points.push_back(c.seed);
    c.residuals.push_back(0.0);

    const double side = c.seed.x() != 0.0 ? std::copysign(1.0, c.seed.x()) : 0.0;
    double t1 = c.seed_time;
    double step = 1e-4;
    double side_now = side;
    bool crossed = false;
    while (t1 > 0.0) {
        const double t_try = std::max(t1 - step, 0.0);
        const auto q = c.evaluate(t_try);
        if (!q) {
            throw NumericalError("switch_curve: theta matching fails to bracket at t1 = " + std::to_string(t_try));
        }
        const double gap = (q->first - c.points.back()).norm();
        if (gap > kFrontSpacing && step > 1e-9) {
            step *= 0.5;
            continue;
        }
        if (!in_disk(q->first, 1e-9)) {
            throw NumericalError("switch_curve: continuation leaves the disk");
        }
        if (side_now == 0.0 && q->first.x() != 0.0) {
            side_now = std::copysign(1.0, q->first.x());
        }
        if (side_now != 0.0 && q->first.x() * side_now < 0.0) {
            double lo = t_try; // other side
            double hi = t1;
            for (int k = 0; k < 100 && hi - lo > 1e-14; ++k) {
                const double mid = 0.5 * (lo + hi);
                const auto m = c.evaluate(mid);
                if (!m) {
                    throw NumericalError("switch_curve: theta matching fails to bracket near the axis");
                }
                (m->first.x() * side_now > 0.0 ? hi : lo) = mid;
            }
            const auto m = *c.evaluate(hi);
            c.axis_crossing_t1 = hi;
            c.axis_crossing = m.first;
            c.first_switch.push_back(hi);
            c.delay.push_back(m.second);
            c.points.push_back(m.first);
            c.residuals.push_back(std::abs(transport_sine(flow_const(x0, p, sigma, hi), p, -sigma, m.second)));
            crossed = true;
            break;
        }
        t1 = t_try;
        c.first_switch.push_back(t1);
        c.delay.push_back(q->second);
        c.points.push_back(q->first);
        c.residuals.push_back(std::abs(transport_sine(flow_const(x0, p, sigma, t1), p, -sigma, q->second)));
        if (gap < 0.25 * kFrontSpacing) {
            step = std::min(step * 2.0, 0.05);
        }
    }
    if (!crossed) {
        throw NumericalError("switch_curve: continuation never reached x2 = 0");
    }
    // Tangent on the seed side of the crossing.
    const double dt = 1e-6;
    const auto a = c.evaluate(c.axis_crossing_t1 + dt);
    if (a) {
        const Vec2 tan = a->first - c.axis_crossing;
        c.angle_at_axis = std::atan2(std::abs(tan.x()), std::abs(tan.y()));
    }
    return c;
}

// ---------------------------------------------------------------- fronts

namespace {

void sample_front(Front& f) {
    struct Node {
        double lam;
        Vec2 x;
    };
    std::vector<Node> nodes;
    const int n0 = 64;
    for (int i = 0; i <= n0; ++i) {
        const double lam = f.lam0 + (f.lam1 - f.lam0) * i / n0;
        if (auto q = f.eval(lam)) {
            nodes.push_back({lam, q->x});
        }
    }
    std::vector<Node> out;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        std::vector<Node> stack{nodes[i + 1]};
        Node cur = nodes[i];
        out.push_back(cur);
        while (!stack.empty()) {
            const Node nxt = stack.back();
            if ((nxt.x - cur.x).norm() > kFrontSpacing && nxt.lam - cur.lam > 1e-12) {
                const double mid = 0.5 * (cur.lam + nxt.lam);
                if (auto q = f.eval(mid)) {
                    stack.push_back({mid, q->x});
                    continue;
                }
            }
            stack.pop_back();
            cur = nxt;
            if (!stack.empty()) {
                out.push_back(cur);
            }
        }
    }
    if (!nodes.empty()) {
        out.push_back(nodes.back());
    }
    f.lams.clear();
    f.pts.clear();
    for (const auto& n : out) {
        f.lams.push_back(n.lam);
        f.pts.push_back(n.x);
    }
}

double time_to_limit(const Vec2& x0, const ModelParams& p, double u, double horizon) {
    const Vec2 lim = controlled_limit_point(p, u);
    double t = 0.0;
    double dt = 0.05;
    while (t < horizon) {
        if ((flow_const(x0, p, u, t) - lim).norm() <= kLimitReach) {
            break;
        }
        t += dt;
    }
    return std::min(t, horizon);
}

ControlWord word_with(const ControlWord& prefix, Arc arc) {
    ControlWord w = prefix;
    if (arc.duration > 1e-12) {
        w.append(arc);
    }
    return w;
}

Front bang_front(const Vec2& s0, const ModelParams& p, double sigma, double horizon) {
    Front f;
    f.name = to_string(kind_of(sigma));
    f.lam1 = time_to_limit(s0, p, sigma, horizon);
    f.final_controls = {-sigma};
    f.eval = [s0, p, sigma](double lam) -> std::optional<FrontPoint> {
        return FrontPoint{flow_const(s0, p, sigma, lam), lam, word_with({}, {kind_of(sigma), lam, std::nullopt})};
    };
    sample_front(f);
    return f;
}

std::optional<Front> singular_front(const Vec2& entry, double t_entry, const ControlWord& prefix, const ModelParams& p,
                                    CbLine line, double horizon) {
    const double remaining = horizon - t_entry;
    if (remaining <= 0.0) {
        return std::nullopt;
    }
    auto z = std::make_shared<Trajectory>(singular_flow(BlochState(entry), p, remaining, line));
    double dur = z->t_end();
    for (std::size_t i = 1; i < z->samples.size(); ++i) {
        if (turnpike_at(z->samples[i].x, p, line) != TurnpikeLabel::Turnpike &&
            std::abs(delta_A(z->samples[i].x, p)) > 1e-9) {
            double lo = z->samples[i - 1].t;
            double hi = z->samples[i].t;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                (turnpike_at(z->state_at(mid), p, line) == TurnpikeLabel::Turnpike ? lo : hi) = mid;
            }
            dur = lo;
            break;
        }
    }
    if (dur <= 1e-9) {
        return std::nullopt;
    }
    // Trim the asymptotic tail.
    const Vec2 tail = z->state_at(dur);
    double lo = 0.0;
    double hi = dur;
    if ((z->state_at(0.0) - tail).norm() > kLimitReach) {
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            ((z->state_at(mid) - tail).norm() > kLimitReach ? lo : hi) = mid;
        }
        dur = hi;
    }
    Front f;
    f.name = prefix.pattern().empty() ? "Z" : prefix.pattern() + "*Z";
    f.lam1 = dur;
    f.final_controls = {1.0, -1.0};
    f.eval = [z, prefix, t_entry, line](double lam) -> std::optional<FrontPoint> {
        return FrontPoint{z->state_at(lam), t_entry + lam, word_with(prefix, {ArcKind::Z, lam, line})};
    };
    sample_front(f);
    return f;
}

Front curve_front(const SwitchCurve& c) {
    const double sigma = bang_control(c.first);
    Front f;
    f.name = to_string(c.first) + "*" + to_string(kind_of(-sigma)) + "*[C]";
    f.lam0 = c.axis_crossing_t1;
    f.lam1 = c.seed_time - 1e-6;
    f.final_controls = {sigma};
    auto evaluate = c.evaluate;
    f.eval = [evaluate, sigma](double lam) -> std::optional<FrontPoint> {
        const auto q = evaluate(lam);
        if (!q) {
            return std::nullopt;
        }
        ControlWord w = word_with({}, {kind_of(sigma), lam, std::nullopt});
        w = word_with(w, {kind_of(-sigma), q->second, std::nullopt});
        return FrontPoint{q->first, lam + q->second, w};
    };
    sample_front(f);
    return f;
}

} // namespace

std::vector<Front> build_fronts(const BlochState& s0_state, const ModelParams& p, double horizon,
                                std::optional<SwitchCurve>* curve_y, std::optional<SwitchCurve>* curve_x) {
    p.validate();
    const Vec2 s0 = s0_state.vec();
    std::vector<Front> fronts;
    if (auto line = cb_line_at(s0, p); line && singular_entry_allowed(s0, p, *line)) {
        if (auto f = singular_front(s0, 0.0, {}, p, *line, horizon)) {
            fronts.push_back(std::move(*f));
        }
    }
    for (double sigma : {1.0, -1.0}) {
        Front bang = bang_front(s0, p, sigma, horizon);
        const double t_arc = bang.lam1;
        fronts.push_back(std::move(bang));
        if (t_arc <= 0.0) {
            continue;
        }
        const Trajectory arc = propagate_word(s0_state, p, ControlWord({{kind_of(sigma), t_arc, std::nullopt}}));
        bool first = true;
        for (const auto& e : event_crossings(arc, p)) {
            if (e.kind != EventKind::DeltaB || e.grazing || e.t <= 1e-9 || e.x.norm() <= 1e-6) {
                continue;
            }
            const auto line = cb_line_at(e.x, p, 1e-6);
            const bool entry = line && singular_entry_allowed(e.x, p, *line);
            if (entry) {
                const ControlWord prefix({{kind_of(sigma), e.t, std::nullopt}});
                if (auto f = singular_front(e.x, e.t, prefix, p, *line, horizon)) {
                    fronts.push_back(std::move(*f));
                }
                break;
            }
            if (first) {
                std::optional<SwitchCurve> sc;
                try {
                    sc = switch_curve(p, arc);
                } catch (const NumericalError&) {
                    sc.reset();
                }
                if (sc) {
                    fronts.push_back(curve_front(*sc));
                    auto* slot = sigma > 0 ? curve_y : curve_x;
                    if (slot) {
                        *slot = std::move(sc);
                    }
                }
            }
            first = false;
        }
    }
    return fronts;
}

// ---------------------------------------------------------------- query

namespace {

struct Candidate {
    const Front* front;
    double v;
};

std::optional<WordTime> refine(const Front& f, double v, const Vec2& target, const ModelParams& p, double lam,
                               double s) {
    auto point = [&](double l) { return f.eval(std::clamp(l, f.lam0, f.lam1)); };
    for (int it = 0; it < 40; ++it) {
        const auto fp = point(lam);
        if (!fp) {
            return std::nullopt;
        }
        const Vec2 end = flow_const(fp->x, p, v, s);
        const Vec2 r = end - target;
        if (r.norm() < 1e-13) {
            break;
        }
        const double h = 1e-7 * std::max(1.0, std::abs(lam));
        const double la = std::max(f.lam0, lam - h);
        const double lb = std::min(f.lam1, lam + h);
        const auto pa = point(la);
        const auto pb = point(lb);
        if (!pa || !pb || lb <= la) {
            return std::nullopt;
        }
        Mat2 J;
        J.col(0) = (flow_const(pb->x, p, v, s) - flow_const(pa->x, p, v, s)) / (lb - la);
        J.col(1) = controlled_field(end, p, v);
        if (std::abs(J.determinant()) < 1e-300) {
            return std::nullopt;
        }
        Vec2 d = J.partialPivLu().solve(-r);
        // Damp steps that leave the front's range.
        double scale = 1.0;
        while (scale > 1e-4 && (lam + scale * d.x() < f.lam0 - 1e-9 || lam + scale * d.x() > f.lam1 + 1e-9 ||
                                s + scale * d.y() < -1e-9)) {
            scale *= 0.5;
        }
        lam = std::clamp(lam + scale * d.x(), f.lam0, f.lam1);
        s = std::max(s + scale * d.y(), 0.0);
    }
    const auto fp = point(lam);
    if (!fp) {
        return std::nullopt;
    }
    const double res = (flow_const(fp->x, p, v, s) - target).norm();
    if (res > 1e-10) {
        return std::nullopt;
    }
    WordTime wt;
    wt.word = word_with(fp->word, {kind_of(v), s, std::nullopt});
    wt.time = fp->time + s;
    wt.candidate = f.name + "*" + to_string(kind_of(v));
    return wt;
}

// Backward arcs use a fixed time step and one precomputed transition matrix.
constexpr double kBackStep = 5e-3;

void candidate_hits(const Front& f, const geom::SegmentIndex& idx, double v, const Vec2& target, const ModelParams& p,
                    double horizon, std::vector<WordTime>& out) {
    const Mat2 M = transition_matrix(p, v, -kBackStep);
    const Vec2 L = controlled_limit_point(p, v);
    std::optional<WordTime> best;
    auto consider = [&](std::size_t i, double alpha, double s_guess) {
        const double lam = f.lams[i] + alpha * (f.lams[i + 1] - f.lams[i]);
        if (auto wt = refine(f, v, target, p, lam, s_guess)) {
            if (!best || wt->time < best->time) {
                best = std::move(wt);
            }
        }
    };
    if (f.pts.size() >= 2) {
        if (auto nb = idx.nearest(target, 1e-6)) {
            consider(nb->first, nb->second, 0.0);
        }
    } else if (f.pts.size() == 1 && (f.pts.front() - target).norm() < 1e-6) {
        consider(0, 0.0, 0.0);
    }
    Vec2 b = target;
    double s = 0.0;
    const int steps = static_cast<int>(std::ceil(horizon / kBackStep));
    for (int k = 0; k < steps; ++k) {
        const Vec2 nb = L + M * (b - L);
        if (f.pts.size() >= 2) {
            idx.intersect(b, nb, [&](std::size_t i, const geom::Crossing& c) {
                consider(i, c.alpha, s + c.beta * kBackStep);
            });
        }
        b = nb;
        s += kBackStep;
        if (b.squaredNorm() > 1.0 + 1e-6) {
            break;
        }
    }
    if (best) {
        out.push_back(std::move(*best));
    }
}

QueryResult run_query(const Vec2& s0, const ModelParams& p, const std::vector<Front>& fronts,
                      const FrontIndex& index, const Vec2& target, double horizon, const QueryOptions& opt) {
    QueryResult q;
    if ((target - s0).norm() <= 1e-12) {
        return q;
    }
    for (std::size_t i = 0; i < fronts.size(); ++i) {
        for (double v : fronts[i].final_controls) {
            candidate_hits(fronts[i], index.segments[i], v, target, p, horizon, q.alternatives);
        }
    }
    if (q.alternatives.empty()) {
        throw InfeasibleQueryError("min_time_query: no candidate word reaches the target");
    }
    std::stable_sort(q.alternatives.begin(), q.alternatives.end(),
                     [](const WordTime& a, const WordTime& b) { return a.time < b.time; });
    q.word = q.alternatives.front().word;
    q.time = q.alternatives.front().time;
    for (std::size_t i = 1; i < q.alternatives.size(); ++i) {
        const auto& alt = q.alternatives[i];
        if (alt.time - q.time > opt.tie_tol) {
            break;
        }
        if (alt.word.pattern() == q.word.pattern()) {
            continue;
        }
        const bool seen = std::any_of(q.ties.begin(), q.ties.end(),
                                      [&](const ControlWord& w) { return w.pattern() == alt.word.pattern(); });
        if (!seen) {
            q.ties.push_back(alt.word);
        }
    }
    return q;
}

} // namespace

std::shared_ptr<const FrontIndex> index_fronts(const std::vector<Front>& fronts) {
    auto idx = std::make_shared<FrontIndex>();
    idx->segments.reserve(fronts.size());
    for (const auto& f : fronts) {
        idx->segments.emplace_back(f.pts);
    }
    return idx;
}

QueryResult min_time_query(const BlochState& s0, const ModelParams& p, const std::vector<Front>& fronts,
                           const BlochState& target, double horizon, const QueryOptions& opt) {
    return run_query(s0.vec(), p, fronts, *index_fronts(fronts), target.vec(), horizon, opt);
}

QueryResult min_time_query(const SynthesisChart& chart, const BlochState& target, const QueryOptions& opt) {
    const Vec2 x = target.vec();
    if ((x - chart.s0).norm() <= 1e-12) {
        return {};
    }
    if (chart.reach.distance_to_asymptotic(x) < opt.asymptotic_eps) {
        throw InfeasibleQueryError("min_time_query: target on an asymptotic part of the boundary (infinite time)");
    }
    if (!chart.reach.contains(x, 1e-9)) {
        throw InfeasibleQueryError("min_time_query: target outside the reachable set");
    }
    auto idx = chart.index && chart.index->segments.size() == chart.fronts.size() ? chart.index
                                                                                   : index_fronts(chart.fronts);
    return run_query(chart.s0, chart.params, chart.fronts, *idx, x, chart.horizon, opt);
}

StokesReport verify_query(const BlochState& s0, const ModelParams& p, const QueryResult& q, std::string* method) {
    const WordTime* rival = nullptr;
    for (const auto& alt : q.alternatives) {
        if (alt.word.pattern() != q.word.pattern()) {
            rival = &alt;
            break;
        }
    }
    auto set_method = [&](const std::string& m) {
        if (method) {
            *method = m;
        }
    };
    if (!rival) {
        StokesReport r;
        r.t1 = q.time;
        r.t2 = q.time;
        r.winner = "path1";
        set_method("single candidate");
        return r;
    }
    const Trajectory a = propagate_word(s0, p, q.word);
    const Trajectory b = propagate_word(s0, p, rival->word);
    try {
        StokesReport r = stokes_compare(a, b, p);
        set_method("clock form");
        return r;
    } catch (const ClockFormSingularError&) {
    } catch (const NumericalError&) {
    }
    set_method("direct");
    return direct_compare(a, b);
}

} // namespace qtoc
