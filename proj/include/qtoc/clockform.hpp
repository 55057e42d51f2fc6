#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtoc/flows.hpp"

namespace qtoc {

// alpha is undefined where |delta_A| <= kAlphaSingular.
inline constexpr double kAlphaSingular = 1e-9;
// Paths used in line and surface integrals must keep |delta_A| above this band.
inline constexpr double kClockGuard = 1e-6;

struct ClockSample {
    Vec2 x = Vec2::Zero();
    double alpha2 = 0.0;
    double alpha3 = 0.0;
    double g = 0.0;
};

// Clock form with alpha(F) = 1 and alpha(G) = 0.
Vec2 alpha_at(const Vec2& x, const ModelParams& p);
// d alpha = g dx2 ^ dx3, with g = delta_B / delta_A^2.
double g_density(const Vec2& x, const ModelParams& p);
ClockSample clock_sample(const Vec2& x, const ModelParams& p);

// Line integral of alpha along the path; equals its duration off C_A.
double time_via_alpha(const Trajectory& traj, const ModelParams& p);

struct StokesReport {
    double t1 = 0.0;
    double t2 = 0.0;
    double line_difference = 0.0;                 // int alpha over path1 minus path2
    std::optional<double> surface_difference;     // integral of g over the enclosed region
    bool spans_quadrants = false;                 // g changes sign inside the region
    std::string winner;                           // path1 | path2 | tie
};

// Compares two paths with common endpoints. Throws ClockFormSingularError when
// either path or the swept region enters the C_A guard band.
StokesReport stokes_compare(const Trajectory& path1, const Trajectory& path2, const ModelParams& p,
                            double tie_tol = 1e-8);

// Duration-only comparison, used when the clock form is unavailable.
StokesReport direct_compare(const Trajectory& path1, const Trajectory& path2, double tie_tol = 1e-8);

nlohmann::json to_json(const StokesReport& r);

// Image under (x2, u) -> (-x2, -u).
Trajectory mirror_x2(const Trajectory& traj);

enum class TurnpikeLabel { Turnpike, AntiTurnpike, Unlabeled };

std::string to_string(TurnpikeLabel l);

// Label of a single point of a C_B line.
TurnpikeLabel turnpike_at(const Vec2& x, const ModelParams& p, CbLine line);

struct TurnpikeArc {
    CbLine line = CbLine::Vertical;
    Segment segment;
    TurnpikeLabel label = TurnpikeLabel::Unlabeled;
};

// Splits every C_B line inside the disk into maximal labeled segments.
std::vector<TurnpikeArc> classify_turnpike(const ModelParams& p, int resolution = 4001);

} // namespace qtoc
