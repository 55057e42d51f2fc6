#pragma once

// Coherence-vector model of a resonantly driven two-level system with
// Lindblad dissipation, restricted to the (x2, x3) Bloch disk.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtoc/linalg.hpp"

namespace qtoc {

inline constexpr double kDiskTolerance = 1e-9;

// Dissipation rates. Construct through make() to get the Lindblad checks.
struct ModelParams {
    double gamma_total = 0.0; // total dephasing rate
    double gamma12 = 0.0;     // population relaxation 1 -> 2
    double gamma21 = 0.0;     // population relaxation 2 -> 1

    static ModelParams make(double gamma_total, double gamma12, double gamma21);

    // Throws ValidationError naming the violated constraint.
    void validate() const;

    double gamma_plus() const { return gamma12 + gamma21; }
    double gamma_minus() const { return gamma12 - gamma21; }
    double pure_dephasing() const { return gamma_total - 0.5 * gamma_plus(); }

    bool unital() const { return gamma_minus() == 0.0; }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

void to_json(nlohmann::json& j, const ModelParams& p);
void from_json(const nlohmann::json& j, ModelParams& p);

// Reference parameter sets (a)-(d).
ModelParams table_case(char tag);

// Initial state used with each reference parameter set.
Vec2 table_initial_state(char tag);

// Point of the closed Bloch disk.
class BlochState {
public:
    BlochState() = default;
    // Throws ValidationError when x2^2 + x3^2 > 1 + kDiskTolerance.
    BlochState(double x2, double x3);
    explicit BlochState(const Vec2& v) : BlochState(v.x(), v.y()) {}

    double x2() const { return x2_; }
    double x3() const { return x3_; }
    Vec2 vec() const { return {x2_, x3_}; }
    double purity() const { return x2_ * x2_ + x3_ * x3_; }

private:
    double x2_ = 0.0;
    double x3_ = 0.0;
};

bool in_disk(const Vec2& v, double tol = kDiskTolerance);

struct Bloch3State {
    double x1 = 0.0;
    double x2 = 0.0;
    double x3 = 0.0;

    static Bloch3State make(double x1, double x2, double x3);
};

// Vector fields of xdot = F + u G.
Vec2 drift_field(const Vec2& x, const ModelParams& p);
Vec2 control_field(const Vec2& x);
Vec2 controlled_field(const Vec2& x, const ModelParams& p, double u);
// [F, G] = DG.F - DF.G
Vec2 bracket_field(const Vec2& x, const ModelParams& p);

inline Vec2 drift_field(const BlochState& s, const ModelParams& p) { return drift_field(s.vec(), p); }
inline Vec2 control_field(const BlochState& s) { return control_field(s.vec()); }

// Det(F, G); zero set is C_A.
double delta_A(const Vec2& x, const ModelParams& p);
// Det(G, [F, G]); zero set is C_B.
double delta_B(const Vec2& x, const ModelParams& p);
// d Tr[rho^2]/dt, where Tr[rho^2] = (1 + x2^2 + x3^2)/2. Does not depend on u.
double purity_rate(const Vec2& x, const ModelParams& p);

inline double delta_A(const BlochState& s, const ModelParams& p) { return delta_A(s.vec(), p); }
inline double delta_B(const BlochState& s, const ModelParams& p) { return delta_B(s.vec(), p); }
inline double purity_rate(const BlochState& s, const ModelParams& p) { return purity_rate(s.vec(), p); }

// One of the two straight lines forming C_B.
enum class CbLine { Vertical, Horizontal };

std::string to_string(CbLine line);

// Level of the horizontal C_B line, absent when Gamma == gamma_plus.
std::optional<double> cb_horizontal_level(const ModelParams& p);

struct Segment {
    Vec2 from;
    Vec2 to;
};

struct CbSegment {
    CbLine line;
    Segment segment;
};

struct Loci {
    std::vector<std::vector<Vec2>> ca_arcs; // polylines on delta_A == 0
    std::vector<CbSegment> cb;
    bool ca_is_point = false;      // gamma_minus == 0: C_A is the origin
    bool cb_single_line = false;   // Gamma == gamma_plus
    bool cb_horizontal_outside = false; // horizontal level with |x3| > 1
};

// C_A is the ellipse Gamma x2^2 + gamma_plus x3^2 - gamma_minus x3 = 0, sampled
// as two arcs (x2 <= 0 and x2 >= 0) with `resolution` points each.
Loci loci(const ModelParams& p, int resolution = 401);

// Fixed point of u = 0. Throws NoFixedPointError when gamma_plus == 0.
BlochState free_fixed_point(const ModelParams& p);

// Equilibrium of F + u G, solved as a 2x2 linear system.
// Throws ValidationError when Gamma gamma_plus + u^2 == 0.
Vec2 controlled_limit_point(const ModelParams& p, double u);

// Full coherence-vector dynamics with complex control u1 + i u2.
std::array<double, 3> rhs_3d(const Bloch3State& s, const ModelParams& p, double u1, double u2);

// 3x3 generators acting on (1, x2, x3).
Eigen::Matrix3d drift_generator(const ModelParams& p);
Eigen::Matrix3d control_generator();

struct AccessibilityResult {
    int dimension = 0;
    int generations = 0;
    bool degenerate = false; // Gamma == gamma_plus
};

// Dimension of the matrix Lie algebra spanned by the two generators,
// by bracket closure with Gram-matrix rank deflation.
AccessibilityResult accessibility(const ModelParams& p);
int accessibility_dimension(const ModelParams& p);

} // namespace qtoc
