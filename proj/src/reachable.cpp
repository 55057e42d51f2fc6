#include <algorithm>
#include <cmath>
#include <limits>

#include "geometry.hpp"
#include "qtoc/errors.hpp"
#include "qtoc/synthesis.hpp"

namespace qtoc {

namespace {

constexpr double kArcSpacing = 1e-3;
constexpr double kLimitReach = 1e-7;
constexpr double kEndSkip = 1e-4;

struct SampledArc {
    std::vector<Vec2> pts;
    std::vector<double> ts;
};

// Samples the bang/free arc with control u from x0 at roughly kArcSpacing
// until the horizon or until it settles at its limit point.
SampledArc sample_arc(const Vec2& x0, const ModelParams& p, double u, double horizon) {
    const Vec2 lim = controlled_limit_point(p, u);
    SampledArc out;
    out.pts.push_back(x0);
    out.ts.push_back(0.0);
    Vec2 x = x0;
    double t = 0.0;
    while (t < horizon && (x - lim).norm() > kLimitReach) {
        const double speed = std::max(controlled_field(x, p, u).norm(), 1e-12);
        const double dt = std::min({0.05, kArcSpacing / speed, horizon - t});
        x = flow_const(x0, p, u, t + dt);
        t += dt;
        out.pts.push_back(x);
        out.ts.push_back(t);
        if (out.pts.size() > 2'000'000) {
            throw NumericalError("reachable_set: arc sampling did not settle");
        }
    }
    return out;
}

// First transversal delta_A sign change along the arc, away from its start and its limit.
std::optional<std::pair<std::size_t, double>> first_ca_crossing(const SampledArc& arc, const ModelParams& p, double u) {
    const Vec2 lim = controlled_limit_point(p, u);
    const Vec2 x0 = arc.pts.front();
    for (std::size_t i = 0; i + 1 < arc.pts.size(); ++i) {
        const Vec2& a = arc.pts[i];
        const Vec2& b = arc.pts[i + 1];
        if ((a - x0).norm() < 1e-6 || (b - lim).norm() < kEndSkip || a.norm() < 1e-6) {
            continue;
        }
        const double fa = delta_A(a, p);
        const double fb = delta_A(b, p);
        if (fa == 0.0 || fa * fb >= 0.0) {
            continue;
        }
        double lo = arc.ts[i];
        double hi = arc.ts[i + 1];
        for (int k = 0; k < 80 && hi - lo > 1e-14; ++k) {
            const double mid = 0.5 * (lo + hi);
            const double fm = delta_A(flow_const(x0, p, u, mid), p);
            (fm * fa > 0.0 ? lo : hi) = mid;
        }
        return std::pair<std::size_t, double>{i, 0.5 * (lo + hi)};
    }
    return std::nullopt;
}

std::string kind_name(double u) { return u > 0 ? "Y" : (u < 0 ? "X" : "F0"); }

struct Chain {
    std::vector<BoundaryArc> arcs;
    double last_u = 0.0;
};

Chain build_chain(const Vec2& s0, const ModelParams& p, double u, double horizon) {
    Chain c;
    SampledArc first = sample_arc(s0, p, u, horizon);
    auto cross = first_ca_crossing(first, p, u);
    BoundaryArc a1;
    a1.word = kind_name(u);
    a1.origin = "initial";
    if (!cross) {
        a1.points = std::move(first.pts);
        c.arcs.push_back(std::move(a1));
        c.last_u = u;
        return c;
    }
    const auto [idx, tc] = *cross;
    a1.points.assign(first.pts.begin(), first.pts.begin() + static_cast<std::ptrdiff_t>(idx) + 1);
    const Vec2 pc = flow_const(s0, p, u, tc);
    a1.points.push_back(pc);
    c.arcs.push_back(std::move(a1));
    SampledArc second = sample_arc(pc, p, -u, std::max(horizon - tc, 0.0));
    BoundaryArc a2;
    a2.word = kind_name(u) + "*" + kind_name(-u);
    a2.origin = "C_A crossing";
    a2.points = std::move(second.pts);
    c.arcs.push_back(std::move(a2));
    c.last_u = -u;
    return c;
}

std::vector<Vec2> flatten(const std::vector<BoundaryArc>& arcs,
                          std::vector<std::pair<std::size_t, std::size_t>>* where = nullptr) {
    std::vector<Vec2> out;
    for (std::size_t k = 0; k < arcs.size(); ++k) {
        const auto& pts = arcs[k].points;
        for (std::size_t m = 0; m < pts.size(); ++m) {
            if (!out.empty() && out.back() == pts[m]) {
                if (where) {
                    where->back() = {k, m};
                }
                continue;
            }
            out.push_back(pts[m]);
            if (where) {
                where->push_back({k, m});
            }
        }
    }
    return out;
}

// Ends the chain at q, reached inside flattened segment j.
void cut_chain(Chain& ch, const std::vector<std::pair<std::size_t, std::size_t>>& where, std::size_t j, const Vec2& q) {
    const auto [k, m] = where[j];
    ch.arcs.resize(k + 1);
    ch.arcs[k].points.resize(m + 1);
    ch.arcs[k].points.push_back(q);
    ch.last_u = ch.arcs[k].word.back() == 'Y' ? 1.0 : -1.0;
}

// Cuts both chains at their first mutual crossing away from the shared start and the ends.
bool truncate_at_intersection(Chain& cy, Chain& cx, const Vec2& s0) {
    std::vector<std::pair<std::size_t, std::size_t>> wy, wx;
    const std::vector<Vec2> py = flatten(cy.arcs, &wy);
    const std::vector<Vec2> px = flatten(cx.arcs, &wx);
    if (py.size() < 2 || px.size() < 2) {
        return false;
    }
    const Vec2 ey = py.back();
    const Vec2 ex = px.back();
    geom::SegmentIndex ix(px);
    for (std::size_t j = 0; j + 1 < py.size(); ++j) {
        std::optional<std::pair<std::size_t, geom::Crossing>> hit;
        ix.intersect(py[j], py[j + 1], [&](std::size_t i, const geom::Crossing& c) {
            const Vec2 q = px[i] + c.alpha * (px[i + 1] - px[i]);
            if ((q - s0).norm() < kEndSkip || (q - ey).norm() < kEndSkip || (q - ex).norm() < kEndSkip) {
                return;
            }
            if (!hit || c.beta < hit->second.beta) {
                hit = std::pair<std::size_t, geom::Crossing>{i, c};
            }
        });
        if (!hit) {
            continue;
        }
        const auto [i, c] = *hit;
        const Vec2 q = px[i] + c.alpha * (px[i + 1] - px[i]);
        cut_chain(cy, wy, j, q);
        cut_chain(cx, wx, i, q);
        return true;
    }
    return false;
}

} // namespace

ReachableSet reachable_set(const BlochState& s0_state, const ModelParams& p, double horizon) {
    p.validate();
    if (!(horizon > 0.0)) {
        throw ValidationError("reachable_set: horizon must be positive");
    }
    ReachableSet r;
    const Vec2 s0 = s0_state.vec();
    r.s0 = s0;
    if (classify_case(p) == CaseClass::Other) {
        r.warnings.push_back("parameter regime outside cases (a)-(d); boundary is best effort");
    }

    Chain cy = build_chain(s0, p, +1.0, horizon);
    Chain cx = build_chain(s0, p, -1.0, horizon);
    const bool met = truncate_at_intersection(cy, cx, s0);

    auto add_limit = [&](const Vec2& v) {
        for (const auto& q : r.limit_points) {
            if ((q - v).norm() < 1e-12) {
                return;
            }
        }
        r.limit_points.push_back(v);
    };

    r.arcs = cy.arcs;
    const Vec2 ey = cy.arcs.back().points.back();
    const Vec2 ex = cx.arcs.back().points.back();
    if (!met) {
        if ((ey - controlled_limit_point(p, cy.last_u)).norm() < 10 * kLimitReach) {
            add_limit(controlled_limit_point(p, cy.last_u));
        }
        if ((ex - controlled_limit_point(p, cx.last_u)).norm() < 10 * kLimitReach) {
            add_limit(controlled_limit_point(p, cx.last_u));
        }
    }
    if (p.gamma_minus() == 0.0) {
        add_limit(Vec2::Zero()); // common zero of F and G
    }
    if (!met && (ey - ex).norm() > 1e-6) {
        std::optional<Vec2> xs;
        if (p.gamma_plus() > 0.0) {
            xs = free_fixed_point(p).vec();
        }
        const bool close_ok = xs && (ey - controlled_limit_point(p, cy.last_u)).norm() < 1e-5 &&
                              (ex - controlled_limit_point(p, cx.last_u)).norm() < 1e-5;
        if (close_ok) {
            BoundaryArc back;
            back.word = kind_name(cy.last_u);
            back.origin = "free fixed point";
            back.attained = false;
            back.points = sample_arc(*xs, p, cy.last_u, 1e6).pts;
            std::reverse(back.points.begin(), back.points.end());
            BoundaryArc fwd;
            fwd.word = kind_name(cx.last_u);
            fwd.origin = "free fixed point";
            fwd.attained = false;
            fwd.points = sample_arc(*xs, p, cx.last_u, 1e6).pts;
            r.arcs.push_back(std::move(back));
            r.arcs.push_back(std::move(fwd));
            add_limit(*xs);
        } else {
            r.warnings.push_back("boundary chains end apart; closed with a straight chord");
        }
    }
    for (auto it = cx.arcs.rbegin(); it != cx.arcs.rend(); ++it) {
        BoundaryArc a = *it;
        std::reverse(a.points.begin(), a.points.end());
        r.arcs.push_back(std::move(a));
    }
    r.polygon = flatten(r.arcs);
    if (r.polygon.size() > 1 && (r.polygon.front() - r.polygon.back()).norm() == 0.0) {
        r.polygon.pop_back();
    }
    return r;
}

double ReachableSet::distance_to_asymptotic(const Vec2& x) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& q : limit_points) {
        d = std::min(d, (q - x).norm());
    }
    for (const auto& a : arcs) {
        if (!a.attained) {
            d = std::min(d, geom::polyline_distance(x, a.points));
        }
    }
    return d;
}

double ReachableSet::distance_to_boundary(const Vec2& x) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& a : arcs) {
        d = std::min(d, geom::polyline_distance(x, a.points));
    }
    return d;
}

bool ReachableSet::contains(const Vec2& x, double tol) const {
    if (!in_disk(x)) {
        return false;
    }
    if ((x - s0).norm() <= tol) {
        return true;
    }
    if (distance_to_asymptotic(x) <= tol) {
        return false;
    }
    for (const auto& a : arcs) {
        if (a.attained && geom::polyline_distance(x, a.points) <= tol) {
            return true;
        }
    }
    if (polygon.size() < 3) {
        return false;
    }
    return std::abs(geom::winding_number(polygon, x)) > 0.5;
}

} // namespace qtoc
