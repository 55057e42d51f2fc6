#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qtoc/clockform.hpp"
#include "qtoc/flows.hpp"

namespace qtoc {

// Covector (p2, p3) with the abnormal multiplier p0 (-1 normal, 0 abnormal).
struct AdjointState {
    double p2 = 0.0;
    double p3 = 0.0;
    double p0 = -1.0;

    Vec2 vec() const { return {p2, p3}; }
    static AdjointState from(const Vec2& v, double p0 = -1.0) { return {v.x(), v.y(), p0}; }
};

// p . (F + u G) + p0
double pseudo_hamiltonian(const Vec2& x, const AdjointState& a, double u, const ModelParams& p);
// max over |u| <= 1 of p . (F + u G)
double max_hamiltonian_part(const Vec2& x, const AdjointState& a, const ModelParams& p);
// (Gamma p2 - u p3, gamma_plus p3 + u p2)
Vec2 adjoint_rhs(const AdjointState& a, double u, const ModelParams& p);
// p . G = -p2 x3 + p3 x2
double switching_function(const Vec2& x, const AdjointState& a);
// d/dt (p . G) = p . [F, G]; does not depend on u.
double switching_derivative(const Vec2& x, const AdjointState& a, const ModelParams& p);

// Adjoint transported over time t under constant control u.
Vec2 adjoint_flow(const Vec2& p0, const ModelParams& p, double u, double t);

// Adjoint of a singular arc: p . F = h, p . G = 0.
Vec2 singular_adjoint(const Vec2& x, const ModelParams& p, double h = 1.0);
// Whether a singular arc may start at x on the given C_B line: admissible feedback
// and a turnpike label (read just past x when x lies on C_A).
bool singular_entry_allowed(const Vec2& x, const ModelParams& p, CbLine line);

struct ExtremalPoint {
    double t = 0.0;
    Vec2 x = Vec2::Zero();
    AdjointState a;
    double u = 0.0;
    double phi = 0.0;
};

struct ExtremalOptions {
    double switch_tol = 1e-11;   // relative, scaled by |p| |x| + 1
    int max_switches = 50;
    double scan_step = 2e-3;
    double sample_spacing = kSampleSpacing;
    bool allow_singular = true;
    // Time spent on a singular arc before leaving with `singular_exit` (+1 or -1).
    std::optional<double> singular_dwell;
    int singular_exit = 1;
};

struct Extremal {
    std::vector<ExtremalPoint> samples;
    ControlWord word;
    Trajectory trajectory;
    std::vector<double> switch_times;
    bool abnormal = false;
    std::vector<std::string> flags;

    Vec2 endpoint() const { return trajectory.end(); }
};

// Normal extremals are scaled so that H_max = 1; directions with H_max = 0 give
// abnormal extremals. Throws ValidationError for a0 = 0 or H_max < 0, and
// NumericalError when more than max_switches switches occur.
Extremal propagate_extremal(const BlochState& s0, const Vec2& a0, const ModelParams& p, double t_max,
                            const ExtremalOptions& opt = {});

struct ThetaSample {
    double t = 0.0;
    double theta = 0.0;
    double theta_dot = 0.0;
    Vec2 vtilde = Vec2::Zero();
};

// theta(t) = arg(vtilde(0), vtilde(t)), unwrapped, at the trajectory sample times
// (refined so consecutive increments stay below pi/4).
std::vector<ThetaSample> theta_function(const Trajectory& traj, const ModelParams& p);

// vtilde at an arbitrary time.
Vec2 theta_vector(const Trajectory& traj, const ModelParams& p, double t);

// (theta_dot > 0 and theta > 0) or (theta_dot < 0 and theta < 0) at t.
bool switch_permitted(const std::vector<ThetaSample>& theta, double t);

struct FanShot {
    double angle = 0.0; // direction of the initial covector
    Vec2 a0 = Vec2::Zero();
    bool abnormal = false;
    bool targeted = false; // aimed at a singular entry
    ControlWord word;
    Vec2 endpoint = Vec2::Zero();
    std::vector<std::string> flags;
};

struct FanResult {
    std::vector<FanShot> shots; // ordered by angle, then by construction
    std::vector<std::string> patterns; // distinct chronological patterns
    int excluded = 0; // directions with H_max < 0
};

// Sweeps n unit covectors, the two abnormal directions and covectors aimed at
// singular entries on turnpike C_B arcs (several dwell times, both exits).
FanResult shoot_extremal_fan(const BlochState& s0, const ModelParams& p, int n_directions, double t_max);

// Header t,x2,x3,p2,p3,u,Phi,theta.
void write_extremal_csv(std::ostream& os, const Extremal& e, const ModelParams& p);

} // namespace qtoc
