#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>

#include "geometry.hpp"
#include "qtoc/errors.hpp"
#include "qtoc/synthesis.hpp"

namespace qtoc {

namespace {

constexpr const char* kUnresolved = "unresolved";

using Vertex = std::pair<int, int>;

// Boundary loops of a set of grid cells, traced along cell edges (counter-clockwise).
std::vector<std::vector<Vec2>> trace_loops(const std::vector<int>& cells, int n, double h) {
    std::set<int> in(cells.begin(), cells.end());
    auto has = [&](int i, int j) { return i >= 0 && j >= 0 && i < n && j < n && in.count(j * n + i) > 0; };
    std::multimap<Vertex, Vertex> edges;
    for (int c : cells) {
        const int i = c % n;
        const int j = c / n;
        if (!has(i, j - 1)) edges.insert({{i, j}, {i + 1, j}});
        if (!has(i + 1, j)) edges.insert({{i + 1, j}, {i + 1, j + 1}});
        if (!has(i, j + 1)) edges.insert({{i + 1, j + 1}, {i, j + 1}});
        if (!has(i - 1, j)) edges.insert({{i, j + 1}, {i, j}});
    }
    auto coord = [&](const Vertex& v) { return Vec2{-1.0 + (v.first - 0.5) * h, -1.0 + (v.second - 0.5) * h}; };
    std::vector<std::vector<Vec2>> loops;
    while (!edges.empty()) {
        auto it = edges.begin();
        const Vertex start = it->first;
        std::vector<Vertex> loop{start};
        Vertex cur = it->second;
        edges.erase(it);
        while (cur != start) {
            loop.push_back(cur);
            auto nx = edges.find(cur);
            if (nx == edges.end()) {
                break;
            }
            cur = nx->second;
            edges.erase(nx);
        }
        // Drop collinear vertices.
        std::vector<Vec2> pts;
        const std::size_t m = loop.size();
        for (std::size_t k = 0; k < m; ++k) {
            const Vertex& a = loop[(k + m - 1) % m];
            const Vertex& b = loop[k];
            const Vertex& c = loop[(k + 1) % m];
            const int cr = (b.first - a.first) * (c.second - b.second) - (b.second - a.second) * (c.first - b.first);
            if (cr != 0) {
                pts.push_back(coord(b));
            }
        }
        if (!pts.empty()) {
            loops.push_back(std::move(pts));
        }
    }
    return loops;
}

std::vector<ChartCurve> overlap_curve(const SynthesisChart& chart) {
    std::vector<ChartCurve> out;
    ChartCurve cur{"K", "mirror tie", {}};
    const int m = 2 * chart.resolution;
    for (int k = 0; k <= m; ++k) {
        const double x3 = 1.0 - 2.0 * k / m;
        const Vec2 x{0.0, x3};
        bool tie = false;
        if ((x - chart.s0).norm() > 1e-9 && chart.reach.contains(x)) {
            try {
                const QueryResult q = min_time_query(chart, BlochState(x));
                tie = !q.ties.empty() && !q.word.has_singular();
            } catch (const InfeasibleQueryError&) {
            }
        }
        if (tie) {
            cur.points.push_back(x);
        } else if (!cur.points.empty()) {
            out.push_back(cur);
            cur.points.clear();
        }
    }
    if (!cur.points.empty()) {
        out.push_back(cur);
    }
    return out;
}

std::string fmt(double v, const char* format = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

nlohmann::json points_json(const std::vector<Vec2>& pts) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& x : pts) {
        a.push_back({x.x(), x.y()});
    }
    return a;
}

} // namespace

SynthesisChart build_synthesis(const BlochState& s0, const ModelParams& p, double horizon, int resolution) {
    p.validate();
    SynthesisChart chart;
    chart.case_class = classify_case(p);
    if (chart.case_class == CaseClass::Other) {
        throw ValidationError("build_synthesis: parameter regime outside cases (a)-(d)");
    }
    if (resolution < 3 || !(horizon > 0.0)) {
        throw ValidationError("build_synthesis: need resolution >= 3 and a positive horizon");
    }
    chart.params = p;
    chart.s0 = s0.vec();
    chart.horizon = horizon;
    chart.resolution = resolution;
    chart.reach = reachable_set(s0, p, horizon);
    chart.flags = chart.reach.warnings;
    chart.fronts = build_fronts(s0, p, horizon, &chart.switch_curve_y, &chart.switch_curve_x);
    chart.index = index_fronts(chart.fronts);

    const int n = resolution;
    const double h = 2.0 / (n - 1);
    chart.grid.resize(static_cast<std::size_t>(n * n));
    int unresolved = 0;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            GridCell& g = chart.grid[static_cast<std::size_t>(j * n + i)];
            g.x = {-1.0 + i * h, -1.0 + j * h};
            if (!in_disk(g.x) || !chart.reach.contains(g.x) ||
                chart.reach.distance_to_asymptotic(g.x) < QueryOptions{}.asymptotic_eps) {
                continue;
            }
            g.inside = true;
            try {
                const QueryResult q = min_time_query(chart, BlochState(g.x));
                g.time = q.time;
                g.word = q.word.pattern();
            } catch (const InfeasibleQueryError&) {
                g.word = kUnresolved;
                g.ambiguous = true;
                ++unresolved;
            }
        }
    }
    if (unresolved > 0) {
        chart.flags.push_back("unresolved cells: " + std::to_string(unresolved));
    }

    // Regions: 4-connected components of equal labels.
    std::vector<int> comp(chart.grid.size(), -1);
    for (int start = 0; start < n * n; ++start) {
        const GridCell& g0 = chart.grid[static_cast<std::size_t>(start)];
        if (!g0.inside || comp[static_cast<std::size_t>(start)] >= 0) {
            continue;
        }
        const int id = static_cast<int>(chart.regions.size());
        std::vector<int> cells{start};
        comp[static_cast<std::size_t>(start)] = id;
        for (std::size_t k = 0; k < cells.size(); ++k) {
            const int c = cells[k];
            const int i = c % n;
            const int j = c / n;
            const int nb[4][2] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
            for (const auto& q : nb) {
                if (q[0] < 0 || q[1] < 0 || q[0] >= n || q[1] >= n) {
                    continue;
                }
                const int d = q[1] * n + q[0];
                const GridCell& gd = chart.grid[static_cast<std::size_t>(d)];
                if (gd.inside && comp[static_cast<std::size_t>(d)] < 0 && gd.word == g0.word) {
                    comp[static_cast<std::size_t>(d)] = id;
                    cells.push_back(d);
                }
            }
        }
        ChartRegion r;
        r.word = g0.word.empty() ? "initial" : g0.word; // the cell holding s0
        r.ambiguous = g0.ambiguous;
        r.cells = static_cast<int>(cells.size());
        r.loops = trace_loops(cells, n, h);
        if (r.ambiguous) {
            r.verification = "no candidate word reaches these cells";
        } else {
            // Check the label on the region's middle cell.
            std::vector<int> sorted = cells;
            std::sort(sorted.begin(), sorted.end());
            const GridCell& mid = chart.grid[static_cast<std::size_t>(sorted[sorted.size() / 2])];
            try {
                const QueryResult q = min_time_query(chart, BlochState(mid.x));
                std::string method;
                const StokesReport rep = verify_query(s0, p, q, &method);
                r.verification = method;
                if (rep.winner == "path2") {
                    r.verification += ": rival word shorter";
                    chart.flags.push_back("region " + r.word + " failed verification");
                }
            } catch (const std::exception& e) {
                r.verification = std::string("verification error: ") + e.what();
            }
        }
        chart.regions.push_back(std::move(r));
    }

    // Special curves.
    const Loci lc = loci(p);
    if (!lc.ca_is_point) {
        for (const auto& arc : lc.ca_arcs) {
            chart.curves.push_back({"CA", "C_A", arc});
        }
    } else {
        chart.curves.push_back({"CA", "C_A", {Vec2::Zero()}});
    }
    for (const auto& tp : classify_turnpike(p)) {
        chart.curves.push_back({"CB", to_string(tp.line) + " " + to_string(tp.label), {tp.segment.from, tp.segment.to}});
    }
    for (const auto& f : chart.fronts) {
        if (f.name.find('Z') != std::string::npos) {
            chart.curves.push_back({"S", f.name, f.pts});
        }
    }
    for (const auto* sc : {&chart.switch_curve_y, &chart.switch_curve_x}) {
        if (*sc) {
            chart.curves.push_back({"C", std::string("seeded on ") + to_string((*sc)->first), (*sc)->points});
        }
    }
    for (auto& k : overlap_curve(chart)) {
        chart.curves.push_back(std::move(k));
    }
    for (const auto& a : chart.reach.arcs) {
        chart.curves.push_back({"boundary", a.word + (a.attained ? " attained" : " asymptotic"), a.points});
    }
    return chart;
}

std::vector<std::string> check_chart(const SynthesisChart& chart) {
    std::vector<std::string> fail;
    const int n = chart.resolution;
    int max_switch = 0;
    std::set<std::string> words;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const GridCell& g = chart.cell(i, j);
            if (!g.time) {
                continue;
            }
            if (!chart.reach.contains(g.x)) {
                fail.push_back("finite time outside the reachable set at " + fmt(g.x.x()) + "," + fmt(g.x.y()));
            }
            if (!g.word.empty()) {
                words.insert(g.word);
            }
            max_switch = std::max(max_switch, static_cast<int>(std::count(g.word.begin(), g.word.end(), '*')));
            if (chart.s0.x() == 0.0) {
                const GridCell& m = chart.cell(n - 1 - i, j);
                if (m.time && std::abs(*m.time - *g.time) > 1e-8) {
                    fail.push_back("mirror times differ at " + fmt(g.x.x()) + "," + fmt(g.x.y()));
                }
            }
        }
    }
    auto allowed = [&](std::initializer_list<const char*> list) {
        for (const auto& w : words) {
            if (std::find_if(list.begin(), list.end(), [&](const char* a) { return w == a; }) == list.end()) {
                fail.push_back("word " + w + " outside the expected alphabet");
            }
        }
    };
    switch (chart.case_class) {
    case CaseClass::UnitalAperiodic:
        if (max_switch > 1) {
            fail.push_back("an optimal word has more than one switch");
        }
        break;
    case CaseClass::UnitalMixed:
        allowed({"Y", "X", "Y*X", "X*Y", "Y*Z", "X*Z", "Y*Z*X", "Y*Z*Y", "X*Z*X", "X*Z*Y"});
        break;
    case CaseClass::AffinePurification:
        allowed({"Y", "X", "Z", "Z*X", "Z*Y"});
        break;
    case CaseClass::AffineGeneral:
        for (const auto& g : chart.grid) {
            if (!g.time) {
                continue;
            }
            const QueryResult q = min_time_query(chart, BlochState(g.x));
            for (const auto& a : q.word.arcs()) {
                if (a.kind == ArcKind::Z && a.line == CbLine::Horizontal) {
                    fail.push_back("horizontal singular arc labeled optimal");
                    break;
                }
            }
        }
        for (const auto* sc : {&chart.switch_curve_y, &chart.switch_curve_x}) {
            if (*sc && (*sc)->axis_crossing.norm() > 1e-4) {
                fail.push_back("switch curve meets x2 = 0 away from the origin");
            }
        }
        break;
    case CaseClass::Other: break;
    }
    for (const auto& f : chart.flags) {
        if (f.find("failed verification") != std::string::npos) {
            fail.push_back(f);
        }
    }
    return fail;
}

nlohmann::json chart_to_json(const SynthesisChart& chart) {
    nlohmann::json j;
    j["params"] = chart.params;
    j["s0"] = {chart.s0.x(), chart.s0.y()};
    j["case"] = std::string(1, case_letter(chart.case_class));
    j["case_class"] = to_string(chart.case_class);
    j["horizon"] = chart.horizon;
    j["resolution"] = chart.resolution;
    nlohmann::json regions = nlohmann::json::array();
    for (const auto& r : chart.regions) {
        nlohmann::json loops = nlohmann::json::array();
        for (const auto& l : r.loops) {
            loops.push_back(points_json(l));
        }
        regions.push_back({{"word", r.word},
                           {"cells", r.cells},
                           {"ambiguous", r.ambiguous},
                           {"verification", r.verification},
                           {"polygons", loops}});
    }
    j["regions"] = regions;
    nlohmann::json curves = nlohmann::json::array();
    for (const auto& c : chart.curves) {
        curves.push_back({{"kind", c.kind}, {"label", c.label}, {"points", points_json(c.points)}});
    }
    j["curves"] = curves;
    nlohmann::json sc = nlohmann::json::array();
    for (const auto* c : {&chart.switch_curve_y, &chart.switch_curve_x}) {
        if (*c) {
            const double res = (*c)->residuals.empty()
                                   ? 0.0
                                   : *std::max_element((*c)->residuals.begin(), (*c)->residuals.end());
            sc.push_back({{"first", to_string((*c)->first)},
                          {"seed", {(*c)->seed.x(), (*c)->seed.y()}},
                          {"seed_time", (*c)->seed_time},
                          {"axis_crossing", {(*c)->axis_crossing.x(), (*c)->axis_crossing.y()}},
                          {"angle_at_axis", (*c)->angle_at_axis},
                          {"max_residual", res}});
        }
    }
    j["switch_curves"] = sc;
    j["reachable_set"] = reachable_to_json(chart.reach);
    j["flags"] = chart.flags;
    return j;
}

void write_grid_csv(std::ostream& os, const SynthesisChart& chart) {
    os << "x2,x3,time,word\n";
    for (const auto& g : chart.grid) {
        if (!g.inside) {
            continue;
        }
        os << fmt(g.x.x(), "%.17g") << ',' << fmt(g.x.y(), "%.17g") << ',';
        if (g.time) {
            os << fmt(*g.time, "%.17g");
        }
        os << ',' << g.word << '\n';
    }
}

void write_chart_svg(std::ostream& os, const SynthesisChart& chart) {
    const double size = 600.0;
    auto px = [&](const Vec2& x) { return fmt((x.x() + 1.05) / 2.1 * size, "%.2f") + "," + fmt((1.05 - x.y()) / 2.1 * size, "%.2f"); };
    static const char* palette[] = {"#d9e7f5", "#f6dcc5", "#d7ecd3", "#eadcf0", "#f4f0c4",
                                    "#cfe9ea", "#f2d4dc", "#e2e2e2", "#dde6c8", "#e8d8c8"};
    std::map<std::string, std::string> color;
    {
        std::set<std::string> words;
        for (const auto& r : chart.regions) {
            words.insert(r.word);
        }
        std::size_t k = 0;
        for (const auto& w : words) {
            color[w] = w == kUnresolved ? "#ff8080" : palette[k++ % (sizeof palette / sizeof *palette)];
        }
    }
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
       << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<circle cx=\"" << fmt(size / 2, "%.2f") << "\" cy=\"" << fmt(size / 2, "%.2f") << "\" r=\""
       << fmt(size / 2.1, "%.2f") << "\" fill=\"none\" stroke=\"#999\"/>\n";
    for (const auto& r : chart.regions) {
        os << "<path fill=\"" << color[r.word] << "\" fill-rule=\"evenodd\" stroke=\"none\" d=\"";
        for (const auto& l : r.loops) {
            for (std::size_t k = 0; k < l.size(); ++k) {
                os << (k == 0 ? "M" : "L") << px(l[k]) << ' ';
            }
            os << "Z ";
        }
        os << "\"><title>" << r.word << "</title></path>\n";
    }
    for (const auto& c : chart.curves) {
        std::string style = "stroke=\"black\" stroke-width=\"1\"";
        if (c.kind == "CB") {
            style = "stroke=\"black\" stroke-width=\"1\" stroke-dasharray=\"6,4\"";
        } else if (c.kind == "S") {
            style = "stroke=\"#c00000\" stroke-width=\"2.5\"";
        } else if (c.kind == "C") {
            style = "stroke=\"#0040c0\" stroke-width=\"2\" stroke-dasharray=\"8,3,2,3\"";
        } else if (c.kind == "K") {
            style = "stroke=\"#008040\" stroke-width=\"2.5\"";
        } else if (c.kind == "boundary") {
            style = c.label.find("asymptotic") != std::string::npos
                        ? "stroke=\"#555\" stroke-width=\"1.5\" stroke-dasharray=\"2,3\""
                        : "stroke=\"#555\" stroke-width=\"1.5\"";
        }
        if (c.points.size() == 1) {
            os << "<circle cx=\"" << px(c.points[0]).substr(0, px(c.points[0]).find(',')) << "\" cy=\""
               << px(c.points[0]).substr(px(c.points[0]).find(',') + 1) << "\" r=\"3\" fill=\"black\"/>\n";
            continue;
        }
        os << "<polyline fill=\"none\" " << style << " points=\"";
        const std::size_t stride = std::max<std::size_t>(1, c.points.size() / 2000);
        for (std::size_t k = 0; k < c.points.size(); k += stride) {
            os << px(c.points[k]) << ' ';
        }
        os << px(c.points.back()) << "\"><title>" << c.kind << ": " << c.label << "</title></polyline>\n";
    }
    os << "<circle cx=\"" << px(chart.s0).substr(0, px(chart.s0).find(',')) << "\" cy=\""
       << px(chart.s0).substr(px(chart.s0).find(',') + 1) << "\" r=\"4\" fill=\"#c00000\"/>\n";
    os << "</svg>\n";
}

nlohmann::json reachable_to_json(const ReachableSet& r) {
    nlohmann::json arcs = nlohmann::json::array();
    for (const auto& a : r.arcs) {
        arcs.push_back({{"word", a.word}, {"origin", a.origin}, {"attained", a.attained}, {"points", points_json(a.points)}});
    }
    return {{"s0", {r.s0.x(), r.s0.y()}},
            {"arcs", arcs},
            {"limit_points", points_json(r.limit_points)},
            {"warnings", r.warnings}};
}

void write_membership_csv(std::ostream& os, const ReachableSet& r, int resolution) {
    if (resolution < 2) {
        throw ValidationError("write_membership_csv: resolution must be at least 2");
    }
    os << "x2,x3,inside\n";
    const double h = 2.0 / (resolution - 1);
    for (int j = 0; j < resolution; ++j) {
        for (int i = 0; i < resolution; ++i) {
            const Vec2 x{-1.0 + i * h, -1.0 + j * h};
            if (!in_disk(x)) {
                continue;
            }
            os << fmt(x.x(), "%.17g") << ',' << fmt(x.y(), "%.17g") << ',' << (r.contains(x) ? 1 : 0) << '\n';
        }
    }
}

void write_trajectory_svg(std::ostream& os, const Trajectory& traj, const ModelParams& p) {
    const double size = 600.0;
    auto px = [&](const Vec2& x) { return fmt((x.x() + 1.05) / 2.1 * size, "%.2f") + "," + fmt((1.05 - x.y()) / 2.1 * size, "%.2f"); };
    auto polyline = [&](const std::vector<Vec2>& pts, const char* style) {
        os << "<polyline fill=\"none\" " << style << " points=\"";
        for (const auto& x : pts) {
            os << px(x) << ' ';
        }
        os << "\"/>\n";
    };
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
       << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<circle cx=\"" << fmt(size / 2, "%.2f") << "\" cy=\"" << fmt(size / 2, "%.2f") << "\" r=\""
       << fmt(size / 2.1, "%.2f") << "\" fill=\"none\" stroke=\"#999\"/>\n";
    const Loci l = loci(p);
    for (const auto& arc : l.ca_arcs) {
        polyline(arc, "stroke=\"black\" stroke-width=\"1\"");
    }
    for (const auto& c : l.cb) {
        polyline({c.segment.from, c.segment.to}, "stroke=\"black\" stroke-width=\"1\" stroke-dasharray=\"6,4\"");
    }
    std::vector<Vec2> pts;
    for (const auto& s : traj.samples) {
        pts.push_back(s.x);
    }
    polyline(pts, "stroke=\"#c00000\" stroke-width=\"2\"");
    os << "</svg>\n";
}

} // namespace qtoc
