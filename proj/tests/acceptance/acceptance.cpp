// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qtoc/clockform.hpp"
#include "qtoc/errors.hpp"
#include "qtoc/flows.hpp"
#include "qtoc/pmp.hpp"
#include "qtoc/synthesis.hpp"

using namespace qtoc;

namespace {

constexpr char kCases[] = {'a', 'b', 'c', 'd'};

// Collects failures of one criterion.
struct Verdict {
    std::vector<std::string> failures;
    std::ostringstream info;

    void expect(bool ok, const std::string& what) {
        if (!ok) {
            failures.push_back(what);
        }
    }
};

Vec2 disk_sample(std::mt19937_64& rng, double r) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double rho = r * std::sqrt(u(rng));
    const double ang = 2.0 * std::numbers::pi * u(rng);
    return {rho * std::cos(ang), rho * std::sin(ang)};
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// Durations of a two-arc bang word from x0 to target, by Newton with a
// finite-difference Jacobian.
std::optional<Vec2> shoot_two_arc(const Vec2& x0, const Vec2& target, double u1, double u2, const ModelParams& p,
                                  Vec2 t) {
    auto end = [&](const Vec2& d) { return flow_const(flow_const(x0, p, u1, d.x()), p, u2, d.y()); };
    for (int it = 0; it < 100; ++it) {
        const Vec2 r = end(t) - target;
        if (r.norm() < 1e-13) {
            return t;
        }
        Mat2 j;
        const double h = 1e-7;
        j.col(0) = (end(t + Vec2{h, 0}) - end(t - Vec2{h, 0})) / (2 * h);
        j.col(1) = (end(t + Vec2{0, h}) - end(t - Vec2{0, h})) / (2 * h);
        const Vec2 step = j.fullPivLu().solve(r);
        double lam = 1.0;
        while (lam > 1e-4 && (t - lam * step).minCoeff() < 0) {
            lam *= 0.5;
        }
        t -= lam * step;
    }
    return (end(t) - target).norm() < 1e-11 ? std::optional<Vec2>(t) : std::nullopt;
}

std::vector<Extremal> random_extremals(char tag, int count, double t_max, unsigned seed) {
    const ModelParams p = table_case(tag);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
    std::vector<Extremal> out;
    for (int guard = 0; static_cast<int>(out.size()) < count && guard < 50 * count; ++guard) {
        Vec2 s0 = table_initial_state(tag);
        if (s0.norm() < 1e-9) {
            s0 = disk_sample(rng, 0.9); // theta is degenerate at the origin
        }
        const double a = ang(rng);
        try {
            Extremal e = propagate_extremal(BlochState(s0), {std::cos(a), std::sin(a)}, p, t_max);
            if (!e.abnormal && !e.word.empty()) {
                out.push_back(std::move(e));
            }
        } catch (const ValidationError&) {
        } catch (const NumericalError&) {
        }
    }
    return out;
}

double theta_at(const std::vector<ThetaSample>& th, const Trajectory& traj, const ModelParams& p, double t) {
    const auto it = std::min_element(th.begin(), th.end(), [t](const ThetaSample& a, const ThetaSample& b) {
        return std::abs(a.t - t) < std::abs(b.t - t);
    });
    const Vec2 v = theta_vector(traj, p, t);
    return it->theta + std::atan2(cross(it->vtilde, v), it->vtilde.dot(v));
}

// Shared per-case artifacts for criteria 5, 6 and 9.
struct CaseData {
    SynthesisChart chart;
    std::unique_ptr<BruteForceOracle> oracle;
};

std::map<char, CaseData>& case_data() {
    static std::map<char, CaseData> data;
    return data;
}

CaseData& data_for(char tag) {
    auto& d = case_data()[tag];
    if (d.chart.grid.empty()) {
        const BlochState s0(table_initial_state(tag));
        d.chart = build_synthesis(s0, table_case(tag), 30.0, 101);
        OracleOptions opt;
        opt.grid = 101;
        opt.dt = 1e-3;
        d.oracle = std::make_unique<BruteForceOracle>(s0, table_case(tag), opt);
    }
    return d;
}

// ---------------------------------------------------------------- criteria

Verdict criterion1() {
    Verdict v;
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> ut(0.0, 5.0);
    double worst = 0.0;
    for (char tag : kCases) {
        const ModelParams p = table_case(tag);
        for (int eps : {-1, 1}) {
            for (int i = 0; i < 100; ++i) {
                const BlochState s0(disk_sample(rng, 1.0));
                const double t = ut(rng);
                const Vec2 x = bang_flow(s0, p, eps, t).vec();
                const Vec2 rk =
                    rk_oracle(s0, p, [eps](double) { return static_cast<double>(eps); }, t, 1e-10).end();
                worst = std::max(worst, (x - rk).cwiseAbs().maxCoeff());
            }
        }
        v.info << tag << ":" << to_string(discriminant(p).kind) << " ";
    }
    v.expect(worst < 1e-8, "max deviation " + fmt(worst));
    v.info << "max |bang_flow - RK| = " << fmt(worst);
    return v;
}

Verdict criterion2() {
    Verdict v;
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> dur(0.05, 1.0);
    std::bernoulli_distribution coin(0.5);
    double worst = 0.0;
    long checked = 0;
    for (char tag : kCases) {
        const ModelParams p = table_case(tag);
        for (int w = 0; w < 50; ++w) {
            std::vector<Arc> arcs;
            const int n = 2 + static_cast<int>(rng() % 4);
            for (int k = 0; k < n; ++k) {
                arcs.push_back({coin(rng) ? ArcKind::Y : ArcKind::X, dur(rng), std::nullopt});
            }
            const Trajectory tr = propagate_word(BlochState(disk_sample(rng, 1.0)), p, ControlWord(arcs));
            for (const auto& piece : tr.pieces) {
                const double h = 1e-5;
                for (int k = 1; k < 40; ++k) {
                    const double t = piece.t0 + (piece.t1 - piece.t0) * k / 40.0;
                    if (t - h <= piece.t0 || t + h >= piece.t1) {
                        continue;
                    }
                    const Vec2 x = piece.state(t);
                    const double da =
                        -p.gamma_total * x.x() * x.x() + p.gamma_minus() * x.y() - p.gamma_plus() * x.y() * x.y();
                    if (std::abs(da) <= 1e-4) {
                        continue;
                    }
                    // d Tr(rho^2)/dt with Tr(rho^2) = (1 + x2^2 + x3^2) / 2.
                    const double rate =
                        0.5 * (piece.state(t + h).squaredNorm() - piece.state(t - h).squaredNorm()) / (2.0 * h);
                    worst = std::max(worst, std::abs(rate - da));
                    v.expect(std::abs(delta_A(x, p) - da) < 1e-12, "delta_A disagrees with the hand formula");
                    ++checked;
                }
            }
        }
    }
    v.expect(worst < 1e-5, "max deviation " + fmt(worst));
    v.info << checked << " samples, max |d Tr(rho^2)/dt - delta_A| = " << fmt(worst);
    return v;
}

Verdict criterion3() {
    Verdict v;
    std::mt19937_64 rng(303);
    double worst_id = 0.0;
    for (char tag : kCases) {
        const ModelParams p = table_case(tag);
        int used = 0;
        while (used < 1000) {
            const Vec2 x = disk_sample(rng, 1.0);
            if (std::abs(delta_A(x, p)) < 1e-3) {
                continue;
            }
            ++used;
            const Vec2 a = alpha_at(x, p);
            worst_id = std::max({worst_id, std::abs(a.dot(drift_field(x, p)) - 1.0), std::abs(a.dot(control_field(x)))});
        }
    }
    v.expect(worst_id < 1e-12, "alpha(F), alpha(G) off by " + fmt(worst_id));

    // Line integrals along arcs that keep clear of C_A.
    std::uniform_real_distribution<double> ut(0.1, 3.0);
    double worst_line = 0.0;
    int arcs = 0;
    for (int guard = 0; arcs < 20 && guard < 10000; ++guard) {
        const char tag = kCases[guard % 4];
        const ModelParams p = table_case(tag);
        const Vec2 x0 = disk_sample(rng, 1.0);
        const double t = ut(rng);
        const ArcKind k = guard % 2 == 0 ? ArcKind::Y : ArcKind::X;
        const Trajectory tr = propagate_word(BlochState(x0), p, ControlWord({{k, t, {}}}), 1e-3);
        bool clear = true;
        for (const auto& s : tr.samples) {
            clear = clear && std::abs(delta_A(s.x, p)) > 1e-2;
        }
        if (!clear) {
            continue;
        }
        ++arcs;
        worst_line = std::max(worst_line, std::abs(time_via_alpha(tr, p) - t) / (1.0 + t));
    }
    v.expect(arcs == 20, "only " + std::to_string(arcs) + " arcs clear of C_A");
    v.expect(worst_line < 1e-6, "line integral off by " + fmt(worst_line) + " (1 + T)");

    // Nested Y*X / X*Y pairs inside one quadrant of case (b) and case (d).
    double worst_stokes = 0.0;
    int pairs = 0;
    const std::vector<std::pair<char, Vec2>> starts{{'b', {-0.5, 0.7}}, {'d', {-0.5, 0.7}}, {'b', {0.5, 0.6}}};
    for (const auto& [tag, x0] : starts) {
        const ModelParams p = table_case(tag);
        for (double t1 : {0.05, 0.08, 0.1, 0.12}) {
            for (double t2 : {0.03, 0.05}) {
                if (pairs == 10) {
                    break;
                }
                const Trajectory yx = propagate_word(BlochState(x0), p, ControlWord({{ArcKind::Y, t1, {}}, {ArcKind::X, t2, {}}}));
                const auto s = shoot_two_arc(x0, yx.end(), -1.0, 1.0, p, {0.5 * t2, t1});
                if (!s) {
                    continue;
                }
                const Trajectory xy = propagate_word(BlochState(x0), p, ControlWord({{ArcKind::X, s->x(), {}}, {ArcKind::Y, s->y(), {}}}));
                try {
                    const StokesReport r = stokes_compare(yx, xy, p);
                    if (!r.surface_difference) {
                        continue;
                    }
                    worst_stokes = std::max(worst_stokes, std::abs(*r.surface_difference - r.line_difference));
                    worst_stokes = std::max(worst_stokes, std::abs(r.line_difference - (t1 + t2 - s->x() - s->y())));
                    ++pairs;
                } catch (const ClockFormSingularError&) {
                }
            }
        }
    }
    v.expect(pairs == 10, "only " + std::to_string(pairs) + " Stokes pairs");
    v.expect(worst_stokes < 1e-5, "Stokes routes differ by " + fmt(worst_stokes));
    v.info << "identities " << fmt(worst_id) << ", line " << fmt(worst_line) << " over " << arcs
           << " arcs, Stokes " << fmt(worst_stokes) << " over " << pairs << " pairs";
    return v;
}

Verdict criterion4() {
    Verdict v;
    int sign_samples = 0;
    int gaps = 0;
    double worst_gap = 0.0;
    for (char tag : kCases) {
        const ModelParams p = table_case(tag);
        const auto extremals = random_extremals(tag, 20, 3.0, 400 + tag);
        v.expect(extremals.size() == 20, std::string("case ") + tag + ": fewer than 20 extremals");
        for (const Extremal& e : extremals) {
            const auto th = theta_function(e.trajectory, p);
            v.expect(th.front().theta == 0.0, "theta(0) != 0");
            for (const ThetaSample& s : th) {
                const double db = delta_B(e.trajectory.state_at(s.t), p);
                if (std::abs(db) > 1e-6 && std::abs(s.theta_dot) > 1e-6) {
                    ++sign_samples;
                    v.expect((s.theta_dot > 0) == (db > 0), std::string("case ") + tag + ": sign(theta_dot) != sign(delta_B)");
                }
            }
            if (e.word.has_singular()) {
                continue;
            }
            for (std::size_t k = 0; k + 1 < e.switch_times.size(); ++k) {
                const double d = theta_at(th, e.trajectory, p, e.switch_times[k + 1]) -
                                 theta_at(th, e.trajectory, p, e.switch_times[k]);
                worst_gap = std::max(worst_gap, std::abs(std::remainder(d, std::numbers::pi)));
                ++gaps;
            }
        }
    }
    v.expect(gaps > 0, "no consecutive switches");
    v.expect(worst_gap < 1e-6, "theta variation off a multiple of pi by " + fmt(worst_gap));
    const ModelParams a = table_case('a');
    const Trajectory y = propagate_word(BlochState(0, 1), a, ControlWord({{ArcKind::Y, 3.0, {}}}));
    const auto th = theta_function(y, a);
    bool decreasing = true;
    for (std::size_t i = 1; i < th.size(); ++i) {
        decreasing = decreasing && th[i].theta < th[i - 1].theta;
    }
    v.expect(decreasing, "case (a): theta not decreasing on the initial Y arc");
    v.info << sign_samples << " sign samples, " << gaps << " switch gaps (max " << fmt(worst_gap)
           << " off k*pi), case (a) Y arc decreasing: " << (decreasing ? "yes" : "no");
    return v;
}

Verdict criterion5() {
    Verdict v;
    // (a)
    {
        const SynthesisChart& ch = data_for('a').chart;
        int worst_switches = 0;
        for (const auto& g : ch.grid) {
            if (g.time) {
                worst_switches = std::max(worst_switches, static_cast<int>(std::count(g.word.begin(), g.word.end(), '*')));
            }
        }
        v.expect(worst_switches <= 1, "case (a): a word with " + std::to_string(worst_switches) + " switches");
        double worst_tie = 0.0;
        int k_points = 0;
        for (const auto& c : ch.curves) {
            if (c.kind != "K") {
                continue;
            }
            for (std::size_t i = 0; i < c.points.size(); i += 8) {
                const Vec2 x = c.points[i];
                v.expect(x.x() == 0.0, "case (a): K leaves x2 = 0");
                const QueryResult q = min_time_query(ch, BlochState(x));
                v.expect(q.ties.size() == 1 && q.ties[0].pattern() == reverse_pattern(q.word.pattern()),
                         "case (a): K point without a mirrored tie");
                if (!q.ties.empty()) {
                    worst_tie = std::max(worst_tie, std::abs(q.ties[0].total_time() - q.time));
                }
                ++k_points;
            }
        }
        v.expect(k_points > 5, "case (a): K missing");
        v.expect(worst_tie <= 1e-8, "case (a): K tie gap " + fmt(worst_tie));
        v.info << "(a) max switches " << worst_switches << ", K tie " << fmt(worst_tie) << "; ";
    }
    // (b)
    {
        const SynthesisChart& ch = data_for('b').chart;
        const std::set<std::string> list{"Y*Z", "X*Z", "Y*Z*X", "Y*Z*Y", "X*Z*X", "X*Z*Y"};
        int n = 0;
        for (double x3 = -0.0025; x3 > -0.1; x3 -= 0.0025) {
            for (double x2 = -0.1; x2 <= 0.1; x2 += 0.005) {
                const Vec2 x{x2, x3};
                if (x.norm() > 0.1 || !ch.reach.contains(x) || ch.reach.distance_to_boundary(x) < 1e-3) {
                    continue;
                }
                const QueryResult q = min_time_query(ch, BlochState(x));
                v.expect(list.count(q.word.pattern()) == 1, "case (b): " + q.word.pattern() + " below x3 = 0");
                ++n;
            }
        }
        v.expect(n >= 10, "case (b): too few targets below x3 = 0");
        v.info << "(b) " << n << " targets below x3 = 0; ";
    }
    // (c)
    {
        const SynthesisChart& ch = data_for('c').chart;
        const ModelParams& p = ch.params;
        const double xs = p.gamma_minus() / p.gamma_plus();
        double worst = 0.0;
        for (int k = 1; k <= 19; ++k) {
            const double x3 = -0.05 * k;
            const QueryResult q = min_time_query(ch, BlochState(0, x3));
            v.expect(q.word.pattern() == "Z", "case (c): " + q.word.pattern() + " on x2 = 0");
            // u = 0 on x2 = 0: x3 - xs decays like exp(-gamma_plus t).
            const double exact = std::log((0.0 - xs) / (x3 - xs)) / p.gamma_plus();
            worst = std::max(worst, std::abs(q.time - exact));
        }
        v.expect(worst <= 1e-8, "case (c): decay time off by " + fmt(worst));
        v.info << "(c) decay time error " << fmt(worst) << "; ";
    }
    // (d)
    {
        const SynthesisChart& ch = data_for('d').chart;
        int horizontal = 0;
        for (const auto& g : ch.grid) {
            if (!g.time || g.word.find('Z') == std::string::npos) {
                continue;
            }
            for (const auto& a : min_time_query(ch, BlochState(g.x)).word.arcs()) {
                horizontal += (a.kind == ArcKind::Z && a.line == CbLine::Horizontal) ? 1 : 0;
            }
        }
        v.expect(horizontal == 0, "case (d): horizontal singular arcs in " + std::to_string(horizontal) + " cells");
        double concur = 1.0;
        if (ch.switch_curve_y) {
            const Vec2 o = ch.switch_curve_y->axis_crossing;
            concur = std::max({o.norm(), std::abs(delta_A(o, ch.params)), std::abs(o.x())});
        }
        v.expect(concur < 1e-4, "case (d): C, C_A, C_B do not concur at the origin (" + fmt(concur) + ")");
        v.info << "(d) horizontal Z cells " << horizontal << ", C at origin within " << fmt(concur);
        if (ch.switch_curve_y) {
            v.info << ", angle " << fmt(ch.switch_curve_y->angle_at_axis) << " rad";
        }
    }
    return v;
}

Verdict criterion6() {
    Verdict v;
    const double dt = 1e-3;
    double worst = 0.0;
    for (char tag : kCases) {
        CaseData& d = data_for(tag);
        const BruteForceOracle& orc = *d.oracle;
        const double h = orc.spacing();
        const double tol = 5.0 * (dt + h);
        const BlochState s0(table_initial_state(tag));

        // Oracle validation before any chart time is used.
        v.expect(orc.query(s0.vec()).reached && orc.query(s0.vec()).time == 0.0, std::string("oracle: s0 time != 0, case ") + tag);
        // Any explicit word bounds the oracle time from above.
        int probes = 0;
        for (double u : {1.0, -1.0}) {
            for (double t1 : {0.3, 0.6}) {
                for (double t2 : {0.2, 0.4}) {
                    const Vec2 x = flow_const(flow_const(s0.vec(), table_case(tag), u, t1), table_case(tag), -u, t2);
                    if (!d.chart.reach.contains(x) || d.chart.reach.distance_to_boundary(x) < 2 * h) {
                        continue;
                    }
                    const OracleResult r = orc.query(x);
                    v.expect(r.reached && r.time <= t1 + t2 + tol, std::string("oracle: two-arc endpoint late, case ") + tag);
                    ++probes;
                }
            }
        }
        v.expect(probes > 0, std::string("oracle: no interior probes, case ") + tag);

        // Well-conditioned cells: 2h inside R, time differences to neighbours at most 5h.
        const SynthesisChart& ch = d.chart;
        const int n = ch.resolution;
        std::vector<int> pool;
        for (int j = 1; j + 1 < n; ++j) {
            for (int i = 1; i + 1 < n; ++i) {
                const GridCell& g = ch.cell(i, j);
                if (!g.time || g.word.empty() || !ch.reach.contains(g.x) ||
                    ch.reach.distance_to_boundary(g.x) < 2 * h) {
                    continue;
                }
                bool smooth = true;
                for (const auto& [di, dj] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
                    const GridCell& nb = ch.cell(i + di, j + dj);
                    smooth = smooth && nb.time && std::abs(*nb.time - *g.time) <= 5 * h;
                }
                if (smooth) {
                    pool.push_back(j * n + i);
                }
            }
        }
        std::mt19937_64 rng(600 + tag);
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(std::min<std::size_t>(pool.size(), 25));
        v.expect(pool.size() == 25, std::string("case ") + tag + ": fewer than 25 well-conditioned cells");
        double case_worst = 0.0;
        for (int c : pool) {
            const GridCell& g = ch.grid[static_cast<std::size_t>(c)];
            const OracleResult r = orc.query(g.x);
            v.expect(r.reached, std::string("case ") + tag + ": oracle missed a target");
            if (r.reached) {
                case_worst = std::max(case_worst, std::abs(*g.time - r.time));
            }
        }
        v.expect(case_worst <= tol, std::string("case ") + tag + ": gap " + fmt(case_worst) + " > " + fmt(tol));
        worst = std::max(worst, case_worst);
        v.info << tag << ":" << fmt(case_worst) << " ";
    }
    v.info << "(max gap " << fmt(worst) << ", tolerance " << fmt(5.0 * (dt + 0.02)) << ")";
    return v;
}

Verdict criterion7() {
    Verdict v;
    const std::map<char, int> expected{{'a', 4}, {'b', 4}, {'c', 6}, {'d', 6}};
    for (char tag : kCases) {
        const int dim = accessibility_dimension(table_case(tag));
        v.expect(dim == expected.at(tag), std::string("case ") + tag + ": dimension " + std::to_string(dim));
        v.info << tag << "=" << dim << " ";
    }
    return v;
}

Verdict criterion8() {
    Verdict v;
    double worst_x1 = 0.0;
    double worst_proj = 0.0;
    const auto u1 = [](double t) { return 0.8 * std::sin(2.0 * t) + 0.2; };
    const auto u2 = [](double) { return 0.0; };
    for (char tag : kCases) {
        const ModelParams p = table_case(tag);
        for (double x10 : {0.0, 0.3}) {
            const OdeSolution<3> sol = rk_oracle_3d({x10, 0.2, 0.5}, p, u1, u2, 3.0, 1e-12);
            for (std::size_t i = 0; i < sol.t.size(); ++i) {
                worst_x1 = std::max(worst_x1, std::abs(sol.x[i][0] - x10 * std::exp(-p.gamma_total * sol.t[i])));
            }
            const Trajectory planar = rk_oracle(BlochState(0.2, 0.5), p, std::function<double(double)>(u1), 3.0, 1e-12);
            const auto f = sol.final_state();
            worst_proj = std::max(worst_proj, (planar.end() - Vec2(f[1], f[2])).cwiseAbs().maxCoeff());
        }
    }
    v.expect(worst_x1 < 1e-8, "x1 decay off by " + fmt(worst_x1));
    v.expect(worst_proj < 1e-9, "projection off by " + fmt(worst_proj));
    v.info << "x1 decay " << fmt(worst_x1) << ", projection " << fmt(worst_proj);
    return v;
}

Verdict criterion9() {
    Verdict v;
    const double margin = 0.06;
    for (char tag : kCases) {
        CaseData& d = data_for(tag);
        const ReachableSet& r = d.chart.reach;
        std::vector<Vec2> inside;
        std::vector<Vec2> outside;
        const std::size_t m = r.polygon.size();
        for (int k = 0; k < 97 && (inside.size() < 10 || outside.size() < 5); ++k) {
            const std::size_t i = (k * m) / 97;
            const Vec2 a = r.polygon[(i + m - 1) % m];
            const Vec2 b = r.polygon[(i + 1) % m];
            const Vec2 tangent = (b - a).normalized();
            const Vec2 normal{-tangent.y(), tangent.x()};
            for (double s : {1.0, -1.0}) {
                const Vec2 x = r.polygon[i] + s * margin * normal;
                if (x.norm() > 0.97 || r.distance_to_boundary(x) < 0.75 * margin) {
                    continue;
                }
                if (r.contains(x) && r.distance_to_asymptotic(x) >= margin && inside.size() < 10) {
                    inside.push_back(x);
                } else if (!r.contains(x) && outside.size() < 5) {
                    outside.push_back(x);
                }
            }
        }
        v.expect(inside.size() == 10 && outside.size() == 5, std::string("case ") + tag + ": point selection fell short");
        int hit_in = 0;
        int hit_out = 0;
        for (const auto& x : inside) {
            hit_in += d.oracle->query(x).reached ? 1 : 0;
        }
        for (const auto& x : outside) {
            hit_out += d.oracle->query(x).reached ? 1 : 0;
        }
        v.expect(hit_in == static_cast<int>(inside.size()), std::string("case ") + tag + ": interior point not attained");
        v.expect(hit_out == 0, std::string("case ") + tag + ": exterior point attained");
        v.info << tag << ": " << hit_in << "/" << inside.size() << " in, " << hit_out << "/" << outside.size()
               << " out  ";
    }
    return v;
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"flow oracle agreement", criterion1},
        {"purity law", criterion2},
        {"clock-form identities", criterion3},
        {"theta machinery", criterion4},
        {"structural synthesis checks", criterion5},
        {"brute-force minimum-time cross-check", criterion6},
        {"accessibility dimensions", criterion7},
        {"three-dimensional reduction", criterion8},
        {"reachable-set membership", criterion9},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[k].second();
        } catch (const std::exception& e) {
            v.failures.push_back(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool ok = v.failures.empty();
        failed += ok ? 0 : 1;
        std::printf("criterion %zu: %s  %s [%.1fs]  %s\n", k + 1, ok ? "PASS" : "FAIL", criteria[k].first.c_str(), secs,
                    v.info.str().c_str());
        for (std::size_t i = 0; i < std::min<std::size_t>(v.failures.size(), 5); ++i) {
            std::printf("    %s\n", v.failures[i].c_str());
        }
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
