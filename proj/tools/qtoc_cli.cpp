// qtoc: command-line front end.
//
// Exit codes: 0 success, 1 configuration error, 2 numerical-invariant failure,
// 3 infeasible query.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qtoc/clockform.hpp"
#include "qtoc/errors.hpp"
#include "qtoc/flows.hpp"
#include "qtoc/selfcheck.hpp"
#include "qtoc/synthesis.hpp"

namespace {

using namespace qtoc;
namespace fs = std::filesystem;

enum Exit { kOk = 0, kConfig = 1, kInvariant = 2, kInfeasible = 3 };

// A configuration problem detected after parsing.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string case_tag;
    std::optional<double> gamma_total, gamma12, gamma21;
    std::string from;
    std::string word;
    std::string word2;
    std::string target;
    std::string point;
    std::string method = "auto";
    std::string out;
    double horizon = 30.0;
    int grid = 101;
    double tol = 1e-6;
    double dt = 1e-3;
    int levels = 1;
    bool mirror = false;
    bool svg = false;
};

Vec2 parse_pair(const std::string& text, const char* flag) {
    std::istringstream in(text);
    double a = 0.0;
    double b = 0.0;
    char comma = 0;
    if (!(in >> a >> comma >> b) || comma != ',' || !(in >> std::ws).eof()) {
        throw ConfigError(std::string(flag) + ": expected x2,x3, got '" + text + "'");
    }
    return {a, b};
}

bool has_explicit_params(const RunConfig& c) { return c.gamma_total || c.gamma12 || c.gamma21; }

// Parameters from a case tag or the three explicit rates.
std::pair<ModelParams, std::string> resolve_params(const RunConfig& c) {
    if (!c.case_tag.empty() && has_explicit_params(c)) {
        throw ConfigError("give either --case or --Gamma/--gamma12/--gamma21, not both");
    }
    if (!c.case_tag.empty()) {
        return {table_case(c.case_tag[0]), c.case_tag};
    }
    if (!(c.gamma_total && c.gamma12 && c.gamma21)) {
        throw ConfigError("need --case or all of --Gamma, --gamma12, --gamma21");
    }
    return {ModelParams::make(*c.gamma_total, *c.gamma12, *c.gamma21), "custom"};
}

BlochState resolve_from(const RunConfig& c) {
    if (!c.from.empty()) {
        return BlochState(parse_pair(c.from, "--from"));
    }
    if (!c.case_tag.empty()) {
        return BlochState(table_initial_state(c.case_tag[0]));
    }
    return BlochState(0.0, 1.0);
}

void check_ranges(const RunConfig& c) {
    if (!(c.tol > 0.0 && c.tol <= 1e-2)) {
        throw ConfigError("--tol must lie in (0, 1e-2]");
    }
    if (!(c.horizon > 0.0 && c.horizon <= 1e3)) {
        throw ConfigError("--horizon must lie in (0, 1000]");
    }
    if (c.grid < 11 || c.grid > 1001) {
        throw ConfigError("--grid must lie in [11, 1001]");
    }
    if (!(c.dt >= 1e-5 && c.dt <= 1e-1)) {
        throw ConfigError("--dt must lie in [1e-5, 0.1]");
    }
}

fs::path out_dir(const RunConfig& c) {
    const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
    fs::create_directories(dir);
    return dir;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path);
    if (!f) {
        throw ConfigError("cannot write " + path.string());
    }
    return f;
}

int cmd_traj(const RunConfig& c) {
    const auto [p, tag] = resolve_params(c);
    const BlochState s0 = resolve_from(c);
    if (c.word.empty()) {
        throw ConfigError("traj: --word is required");
    }
    const Trajectory traj = propagate_word(s0, p, ControlWord::parse(c.word));
    if (traj.termination != Termination::None) {
        std::cerr << "traj: propagation stopped early ("
                  << (traj.termination == Termination::LeftDisk ? "left the disk" : "singular control inadmissible")
                  << ")\n";
    }
    if (c.out.empty()) {
        write_trajectory_csv(std::cout, traj, p);
        return kOk;
    }
    const fs::path dir = out_dir(c);
    auto csv = open_out(dir / "trajectory.csv");
    write_trajectory_csv(csv, traj, p);
    if (c.svg) {
        auto svg = open_out(dir / "trajectory.svg");
        write_trajectory_svg(svg, traj, p);
    }
    return kOk;
}

int cmd_synthesis(const RunConfig& c) {
    const auto [p, tag] = resolve_params(c);
    const BlochState s0 = resolve_from(c);
    const SynthesisChart chart = build_synthesis(s0, p, c.horizon, c.grid);
    const fs::path dir = out_dir(c);
    {
        auto f = open_out(dir / "chart.json");
        f << chart_to_json(chart).dump(1) << '\n';
    }
    {
        auto f = open_out(dir / "chart.svg");
        write_chart_svg(f, chart);
    }
    {
        auto f = open_out(dir / "grid.csv");
        write_grid_csv(f, chart);
    }
    std::cout << "case " << tag << " (" << to_string(chart.case_class) << "), " << chart.regions.size()
              << " regions\n";
    for (const auto& r : chart.regions) {
        std::cout << "  " << r.word << ": " << r.cells << " cells, " << r.verification << '\n';
    }
    for (const auto& f : chart.flags) {
        std::cout << "flag: " << f << '\n';
    }
    const auto failures = check_chart(chart);
    for (const auto& f : failures) {
        std::cout << "FAIL: " << f << '\n';
    }
    return failures.empty() ? kOk : kInvariant;
}

int cmd_reachable(const RunConfig& c) {
    const auto [p, tag] = resolve_params(c);
    const BlochState s0 = resolve_from(c);
    const ReachableSet r = reachable_set(s0, p, c.horizon);
    if (!c.point.empty()) {
        const BlochState x(parse_pair(c.point, "--point"));
        const bool inside = r.contains(x.vec());
        nlohmann::json j{{"point", {x.x2(), x.x3()}},
                         {"inside", inside},
                         {"asymptotic", r.distance_to_asymptotic(x.vec()) <= 1e-9}};
        std::cout << j.dump() << '\n';
        return kOk;
    }
    const fs::path dir = out_dir(c);
    {
        auto f = open_out(dir / "reachable.json");
        f << reachable_to_json(r).dump(1) << '\n';
    }
    {
        auto f = open_out(dir / "membership.csv");
        write_membership_csv(f, r, c.grid);
    }
    for (const auto& w : r.warnings) {
        std::cout << "warning: " << w << '\n';
    }
    return kOk;
}

int cmd_compare(const RunConfig& c) {
    const auto [p, tag] = resolve_params(c);
    const BlochState s0 = resolve_from(c);
    if (c.word.empty() || c.word2.empty()) {
        throw ConfigError("compare: --word and --word2 are required");
    }
    const Trajectory t1 = propagate_word(s0, p, ControlWord::parse(c.word));
    Trajectory t2;
    if (c.mirror) {
        // word2 is propagated from the mirrored start and reflected back.
        t2 = mirror_x2(propagate_word(BlochState(-s0.x2(), s0.x3()), p, ControlWord::parse(c.word2)));
    } else {
        t2 = propagate_word(s0, p, ControlWord::parse(c.word2));
    }
    if ((t1.end() - t2.end()).norm() > c.tol) {
        throw ConfigError("compare: paths end " + std::to_string((t1.end() - t2.end()).norm()) + " apart");
    }
    StokesReport rep;
    std::string method = c.method;
    if (method == "direct") {
        rep = direct_compare(t1, t2);
    } else if (method == "stokes") {
        rep = stokes_compare(t1, t2, p);
    } else {
        method = "stokes";
        try {
            rep = stokes_compare(t1, t2, p);
        } catch (const ClockFormSingularError&) {
            method = "direct";
            rep = direct_compare(t1, t2);
        }
    }
    nlohmann::json j = to_json(rep);
    j["method"] = method;
    std::cout << j.dump(1) << '\n';
    return kOk;
}

int cmd_oracle(const RunConfig& c) {
    const auto [p, tag] = resolve_params(c);
    const BlochState s0 = resolve_from(c);
    if (c.target.empty()) {
        throw ConfigError("oracle: --target is required");
    }
    const BlochState target(parse_pair(c.target, "--target"));
    OracleOptions opt;
    opt.grid = c.grid;
    opt.dt = c.dt;
    opt.levels = c.levels;
    opt.horizon = c.horizon;
    const BruteForceOracle orc(s0, p, opt);
    const OracleResult o = orc.query(target.vec());
    const double tol = 5.0 * (c.dt + orc.spacing());

    nlohmann::json j;
    j["target"] = {target.x2(), target.x3()};
    j["oracle"] = {{"reached", o.reached}, {"time", o.reached ? nlohmann::json(o.time) : nlohmann::json()}};
    j["tolerance"] = tol;
    std::optional<QueryResult> q;
    try {
        const auto fronts = build_fronts(s0, p, c.horizon);
        q = min_time_query(s0, p, fronts, target, c.horizon);
        j["chart"] = {{"word", q->word.pattern()}, {"time", q->time}};
    } catch (const InfeasibleQueryError& e) {
        j["chart"] = {{"infeasible", e.what()}};
    }
    int rc = kOk;
    if (q && o.reached) {
        j["gap"] = std::abs(q->time - o.time);
        rc = std::abs(q->time - o.time) <= tol ? kOk : kInvariant;
    } else if (!q && !o.reached) {
        rc = kInfeasible;
    } else {
        rc = kInvariant; // feasibility disagrees
    }
    j["agree"] = rc != kInvariant;
    std::cout << j.dump(1) << '\n';
    return rc;
}

int cmd_selfcheck(const RunConfig& c) {
    SelfCheckReport r;
    if (c.case_tag.empty() && !has_explicit_params(c)) {
        r = selfcheck_reference();
    } else {
        const auto [p, tag] = resolve_params(c);
        r = selfcheck(p, resolve_from(c).vec(), tag);
    }
    for (const auto& k : r.checks) {
        std::cout << (k.passed ? "PASS" : "FAIL") << "  [" << k.target << "] " << k.name << ": " << k.value;
        if (k.tolerance > 0.0) {
            std::cout << " (tol " << k.tolerance << ")";
        }
        if (!k.detail.empty()) {
            std::cout << "  " << k.detail;
        }
        std::cout << '\n';
    }
    return r.passed() ? kOk : kInvariant;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-optimal control of a dissipative two-level system on the Bloch disk"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto add_common = [&](CLI::App* sub) {
        auto* ct = sub->add_option("--case", cfg.case_tag, "Reference parameter set")
                       ->check(CLI::IsMember({"a", "b", "c", "d"}));
        auto* g = sub->add_option("--Gamma", cfg.gamma_total, "Total dephasing rate");
        auto* g12 = sub->add_option("--gamma12", cfg.gamma12, "Relaxation rate 1 -> 2");
        auto* g21 = sub->add_option("--gamma21", cfg.gamma21, "Relaxation rate 2 -> 1");
        ct->excludes(g)->excludes(g12)->excludes(g21);
        sub->add_option("--from", cfg.from, "Initial state x2,x3");
        sub->add_option("--horizon", cfg.horizon, "Time horizon");
        sub->add_option("--tol", cfg.tol, "Tolerance");
        sub->add_option("--out", cfg.out, "Output directory");
    };

    auto* traj = app.add_subcommand("traj", "Propagate a control word");
    add_common(traj);
    traj->add_option("--word", cfg.word, "Chronological word, e.g. Y:2.0,X:0.5");
    traj->add_flag("--svg", cfg.svg, "Also write trajectory.svg");

    auto* syn = app.add_subcommand("synthesis", "Build the optimal synthesis chart");
    add_common(syn);
    syn->add_option("--grid", cfg.grid, "Grid nodes per axis");

    auto* reach = app.add_subcommand("reachable", "Reachable-set boundary and membership grid");
    add_common(reach);
    reach->add_option("--grid", cfg.grid, "Grid nodes per axis");
    reach->add_option("--point", cfg.point, "Report membership of one point x2,x3");

    auto* cmp = app.add_subcommand("compare", "Compare two words with common endpoints");
    add_common(cmp);
    cmp->add_option("--word", cfg.word, "First word");
    cmp->add_option("--word2", cfg.word2, "Second word");
    cmp->add_flag("--mirror", cfg.mirror, "Propagate the second word from the mirrored start and reflect it");
    cmp->add_option("--method", cfg.method, "auto, stokes or direct")
        ->check(CLI::IsMember({"auto", "stokes", "direct"}));

    auto* orc = app.add_subcommand("oracle", "Brute-force minimum time against the chart tournament");
    add_common(orc);
    orc->add_option("--target", cfg.target, "Target x2,x3");
    orc->add_option("--grid", cfg.grid, "Oracle grid nodes per axis");
    orc->add_option("--dt", cfg.dt, "Oracle RK4 step");
    orc->add_option("--levels", cfg.levels, "Control levels: 1 for {-1,0,1}, 2 adds +-1/2")
        ->check(CLI::IsMember({1, 2}));

    auto* sc = app.add_subcommand("selfcheck", "Run the invariant suite");
    add_common(sc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfig;
    }

    try {
        check_ranges(cfg);
        if (traj->parsed()) {
            return cmd_traj(cfg);
        }
        if (syn->parsed()) {
            return cmd_synthesis(cfg);
        }
        if (reach->parsed()) {
            return cmd_reachable(cfg);
        }
        if (cmp->parsed()) {
            return cmd_compare(cfg);
        }
        if (orc->parsed()) {
            return cmd_oracle(cfg);
        }
        return cmd_selfcheck(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kConfig;
    } catch (const InadmissibleSingularError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kConfig;
    } catch (const InfeasibleQueryError& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return kInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kInvariant;
    }
}
