#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qtoc/dopri.hpp"
#include "qtoc/model.hpp"
#include "qtoc/word.hpp"

namespace qtoc {

enum class Damping { Aperiodic, Critical, PseudoPeriodic };

std::string to_string(Damping d);

struct DiscriminantClass {
    double delta = 0.0; // (Gamma - gamma_plus)^2 - 4
    Damping kind = Damping::Aperiodic;
};

DiscriminantClass discriminant(const ModelParams& p);

// Linear part of F + u G.
Mat2 system_matrix(const ModelParams& p, double u);

// exp(A(u) t), with the series branch when the eigenvalues nearly coincide.
Mat2 transition_matrix(const ModelParams& p, double u, double t);

// Constant-control flow for any real u and signed t; requires Gamma gamma_plus + u^2 != 0.
Vec2 flow_const(const Vec2& x0, const ModelParams& p, double u, double t);

// u = eps in {-1, +1}, t >= 0.
BlochState bang_flow(const BlochState& s0, const ModelParams& p, int eps, double t);
BlochState free_flow(const BlochState& s0, const ModelParams& p, double t);

struct SingularControl {
    double phi = 0.0;
    CbLine line = CbLine::Vertical;
    bool admissible = true;
};

inline constexpr double kOnLineTolerance = 1e-9;

// Which C_B line holds x, or nothing. The vertical line wins at the corner point.
std::optional<CbLine> cb_line_at(const Vec2& x, const ModelParams& p, double tol = kOnLineTolerance);

// phi on a given line; no admissibility check. Infinite at x2 = 0 on the horizontal line.
double singular_feedback(const Vec2& x, const ModelParams& p, CbLine line);

// Constant c of phi = c / x2 on the horizontal line.
double horizontal_singular_constant(const ModelParams& p);

// Throws ValidationError off C_B and InadmissibleSingularError when |phi| > 1.
SingularControl singular_control(const BlochState& s, const ModelParams& p);

struct TrajSample {
    double t = 0.0;
    Vec2 x = Vec2::Zero();
    double u = 0.0;
};

// One arc with an exact (or dense) evaluator over [t0, t1].
struct ArcPiece {
    ArcKind kind = ArcKind::Y;
    std::optional<CbLine> line;
    double t0 = 0.0;
    double t1 = 0.0;
    std::function<Vec2(double)> state;   // absolute time
    std::function<double(double)> control;
    bool feedback = false; // control varies along the piece
};

enum class Termination { None, Admissibility, LeftDisk };

class Trajectory {
public:
    std::vector<TrajSample> samples;
    std::vector<ArcPiece> pieces;
    ControlWord word;
    Termination termination = Termination::None;

    double t_begin() const { return samples.empty() ? 0.0 : samples.front().t; }
    double t_end() const { return samples.empty() ? 0.0 : samples.back().t; }
    Vec2 start() const { return samples.front().x; }
    Vec2 end() const { return samples.back().x; }

    Vec2 state_at(double t) const;
    double control_at(double t) const;
    // Index of the piece active at t (the later one at a junction).
    std::size_t piece_index(double t) const;

    // Appends another trajectory starting where this one ends, shifting its time.
    void extend(const Trajectory& next);
};

// Maximum sample spacing for exported trajectories.
inline constexpr double kSampleSpacing = 1e-2;

// Distance within which singular_flow snaps a start state onto a C_B line.
inline constexpr double kSnapTolerance = 1e-5;

// Closed-form singular arc. Stops early at the admissibility threshold or the disk boundary.
Trajectory singular_flow(const BlochState& s0, const ModelParams& p, double t,
                         std::optional<CbLine> line = std::nullopt);

// Propagates a chronological word. Z arcs resolve their line from the start state.
Trajectory propagate_word(const BlochState& s0, const ModelParams& p, const ControlWord& word,
                          double sample_spacing = kSampleSpacing);

using FeedbackFn = std::function<double(double, const Vec2&)>;

// Adaptive DP45 integration of the planar system with control u(t, x).
Trajectory rk_oracle(const BlochState& s0, const ModelParams& p, const FeedbackFn& u, double t, double tol);
Trajectory rk_oracle(const BlochState& s0, const ModelParams& p, const std::function<double(double)>& u,
                     double t, double tol);

// Three-dimensional system with controls u1(t), u2(t).
OdeSolution<3> rk_oracle_3d(const Bloch3State& s0, const ModelParams& p, const std::function<double(double)>& u1,
                            const std::function<double(double)>& u2, double t, double tol);

enum class EventKind { DeltaA, DeltaB, X2, DiskBoundary };

std::string to_string(EventKind k);

struct Event {
    EventKind kind = EventKind::X2;
    double t = 0.0;
    Vec2 x = Vec2::Zero();
    bool grazing = false; // touches zero without a sign change
    int direction = 0;    // sign of the function after the event
};

// Zeros of delta_A, delta_B, x2 and 1 - |x|^2 along the trajectory, refined to 1e-10 in time.
std::vector<Event> event_crossings(const Trajectory& traj, const ModelParams& p, double scan_step = 2e-3);

// Header t,x2,x3,u,deltaA,deltaB with 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const ModelParams& p);

} // namespace qtoc
