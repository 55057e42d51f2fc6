#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtoc/clockform.hpp"
#include "qtoc/flows.hpp"

namespace qtoc {

enum class CaseClass { UnitalAperiodic, UnitalMixed, AffinePurification, AffineGeneral, Other };

std::string to_string(CaseClass c);
// 'a'..'d', or 'o' for Other.
char case_letter(CaseClass c);

CaseClass classify_case(const ModelParams& p);

// ---------------------------------------------------------------- reachable set

struct BoundaryArc {
    std::string word;    // generating control, chronological ("Y", "Y*X", ...)
    std::string origin;  // "initial", "C_A crossing" or "free fixed point"
    bool attained = true;
    std::vector<Vec2> points; // in chain order
};

struct ReachableSet {
    Vec2 s0 = Vec2::Zero();
    std::vector<BoundaryArc> arcs; // closed chain, in order
    std::vector<Vec2> polygon;     // concatenated arc points
    std::vector<Vec2> limit_points; // reached only as t -> infinity
    std::vector<std::string> warnings;

    // Winding test. Points on attained arcs count as inside, points on
    // asymptotic arcs or at limit points do not.
    bool contains(const Vec2& x, double tol = 1e-9) const;
    // Distance to the nearest asymptotic arc or limit point (infinity if none).
    double distance_to_asymptotic(const Vec2& x) const;
    double distance_to_boundary(const Vec2& x) const;
};

ReachableSet reachable_set(const BlochState& s0, const ModelParams& p, double horizon = 30.0);

nlohmann::json reachable_to_json(const ReachableSet& r);
// Header x2,x3,inside over a resolution x resolution grid, disk points only.
void write_membership_csv(std::ostream& os, const ReachableSet& r, int resolution);

// Trajectory over the disk with C_A (solid) and C_B (dashed).
void write_trajectory_svg(std::ostream& os, const Trajectory& traj, const ModelParams& p);

// ---------------------------------------------------------------- switch curve

struct SwitchCurve {
    Vec2 seed = Vec2::Zero();        // first C_B crossing of the seed arc
    double seed_time = 0.0;
    ArcKind first = ArcKind::Y;      // control of the seed arc
    std::vector<double> first_switch; // t1 along the seed arc
    std::vector<double> delay;       // duration of the middle arc
    std::vector<Vec2> points;        // second switch points, from the seed towards x2 = 0
    std::vector<double> residuals;   // |cross(w0, w)| / (|w0||w|) at each point
    Vec2 axis_crossing = Vec2::Zero(); // where C meets x2 = 0
    double axis_crossing_t1 = 0.0;
    double angle_at_axis = 0.0;      // angle between C and the line x2 = 0 there, radians

    // Second switch point for a first switch at t1 (t1 in the curve's range).
    std::function<std::optional<std::pair<Vec2, double>>(double)> evaluate;
};

// Duration s > 0 of a bang arc with control u from x1 until G, transported
// back to x1, is again parallel to G(x1). Nullopt if none within s_max.
std::optional<double> next_switch_delay(const Vec2& x1, const ModelParams& p, double u, double s_max);

// seed_arc is a single bang arc. Throws ValidationError if it never meets C_B
// and NumericalError if the continuation fails to bracket.
SwitchCurve switch_curve(const ModelParams& p, const Trajectory& seed_arc);

// ---------------------------------------------------------------- candidate fronts

struct FrontPoint {
    Vec2 x = Vec2::Zero();
    double time = 0.0;
    ControlWord word; // chronological word reaching x
};

// A one-parameter family of points reachable from s0 at known times. Candidate
// words are a front followed by one final bang arc.
struct Front {
    std::string name;     // e.g. "Y", "Y*Z", "Y*X*[C]"
    double lam0 = 0.0;
    double lam1 = 0.0;
    std::vector<double> final_controls;
    std::function<std::optional<FrontPoint>(double)> eval;
    std::vector<double> lams; // polyline samples
    std::vector<Vec2> pts;
};

struct QueryOptions {
    double tie_tol = 1e-8;
    double asymptotic_eps = 1e-4;
};

struct WordTime {
    ControlWord word;
    double time = 0.0;
    std::string candidate; // front name plus final arc
};

struct QueryResult {
    ControlWord word;
    double time = 0.0;
    std::vector<WordTime> alternatives; // every candidate that reached the target, sorted by time
    std::vector<ControlWord> ties;      // other words within tie_tol of the optimum
};

// ---------------------------------------------------------------- chart

// Segment lookup tables for a list of fronts (opaque).
struct FrontIndex;
std::shared_ptr<const FrontIndex> index_fronts(const std::vector<Front>& fronts);

struct ChartCurve {
    std::string kind; // CA, CB, S, C, K, boundary
    std::string label;
    std::vector<Vec2> points;
};

struct ChartRegion {
    std::string word;   // chronological pattern, "unresolved", or "initial" for the cell of s0
    std::vector<std::vector<Vec2>> loops;
    int cells = 0;
    bool ambiguous = false;
    std::string verification; // "clock form", "direct", "single candidate" or a failure note
};

struct GridCell {
    Vec2 x = Vec2::Zero();
    bool inside = false;
    std::optional<double> time;
    std::string word; // pattern
    bool ambiguous = false;
};

struct SynthesisChart {
    ModelParams params;
    Vec2 s0 = Vec2::Zero();
    CaseClass case_class = CaseClass::Other;
    double horizon = 0.0;
    int resolution = 0;
    ReachableSet reach;
    std::vector<Front> fronts;
    std::optional<SwitchCurve> switch_curve_y; // seeded on the initial Y arc
    std::optional<SwitchCurve> switch_curve_x;
    std::vector<GridCell> grid; // row-major, x3 outer
    std::vector<ChartRegion> regions;
    std::vector<ChartCurve> curves;
    std::vector<std::string> flags;
    std::shared_ptr<const FrontIndex> index; // built with the fronts

    const GridCell& cell(int i2, int i3) const { return grid[static_cast<std::size_t>(i3 * resolution + i2)]; }
};

// Candidate fronts for s0: initial bang arcs, singular arcs entered on turnpike
// C_B segments and the switch curve seeded where an initial arc first meets a
// non-singular part of C_B.
std::vector<Front> build_fronts(const BlochState& s0, const ModelParams& p, double horizon,
                                std::optional<SwitchCurve>* curve_y = nullptr,
                                std::optional<SwitchCurve>* curve_x = nullptr);

// Throws ValidationError for regime Other.
SynthesisChart build_synthesis(const BlochState& s0, const ModelParams& p, double horizon = 30.0,
                               int resolution = 201);

// Tournament over the chart's candidate words. Throws InfeasibleQueryError for
// targets outside the reachable set, on asymptotic arcs, or reached by no candidate.
QueryResult min_time_query(const SynthesisChart& chart, const BlochState& target, const QueryOptions& opt = {});

// Same tournament without a chart.
QueryResult min_time_query(const BlochState& s0, const ModelParams& p, const std::vector<Front>& fronts,
                           const BlochState& target, double horizon, const QueryOptions& opt = {});

// Compares the winner with its best rival of a different word: stokes_compare
// when the clock form is defined along both paths, direct durations otherwise.
StokesReport verify_query(const BlochState& s0, const ModelParams& p, const QueryResult& q, std::string* method);

// Invariant checks on a built chart; returns one message per failure.
std::vector<std::string> check_chart(const SynthesisChart& chart);

nlohmann::json chart_to_json(const SynthesisChart& chart);
void write_chart_svg(std::ostream& os, const SynthesisChart& chart);
// Header x2,x3,time,word; cells outside the reachable set are omitted.
void write_grid_csv(std::ostream& os, const SynthesisChart& chart);

// ---------------------------------------------------------------- brute-force oracle

struct OracleOptions {
    int grid = 101;          // nodes per axis over [-1, 1]
    double dt = 1e-3;        // RK4 step
    int levels = 1;          // 1: u in {-1, 0, 1}; 2 adds +-1/2
    double horizon = 30.0;
    double target_radius = 0.0; // 0 selects half the grid spacing
};

struct OracleResult {
    bool reached = false;
    double time = 0.0;
};

// Label-setting dynamic programming over grid cells. Each cell keeps a few
// non-dominated continuous states, each expanded by integrating every control
// with RK4 until the state changes cell.
class BruteForceOracle {
public:
    BruteForceOracle(const BlochState& s0, const ModelParams& p, const OracleOptions& opt = {});

    // Time of closest approach over expansions passing within the target radius.
    OracleResult query(const Vec2& target) const;
    // Whether the cell containing x was reached.
    bool cell_reached(const Vec2& x) const;
    double spacing() const { return h_; }
    const OracleOptions& options() const { return opt_; }

private:
    struct Segment {
        Vec2 a, b;
        double ta, tb;
    };
    int index(const Vec2& x) const;

    OracleOptions opt_;
    int n_ = 0;
    double h_ = 0.0;
    std::vector<double> best_;
    std::vector<std::vector<Segment>> paths_; // expansion segments bucketed by cell
};

OracleResult brute_force_oracle(const BlochState& s0, const ModelParams& p, const BlochState& target, double dt,
                                int levels, int grid = 101);

} // namespace qtoc
