#include "qtoc/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "qtoc/errors.hpp"

namespace qtoc {

ModelParams ModelParams::make(double gamma_total, double gamma12, double gamma21) {
    ModelParams p{gamma_total, gamma12, gamma21};
    p.validate();
    return p;
}

void ModelParams::validate() const {
    if (!std::isfinite(gamma_total) || !std::isfinite(gamma12) || !std::isfinite(gamma21)) {
        throw ValidationError("dissipation rates must be finite");
    }
    if (gamma12 < 0.0) {
        throw ValidationError("Lindblad constraint violated: gamma12 >= 0");
    }
    if (gamma21 < 0.0) {
        throw ValidationError("Lindblad constraint violated: gamma21 >= 0");
    }
    if (pure_dephasing() < 0.0) {
        std::ostringstream msg;
        msg << "Lindblad constraint violated: Gamma >= (gamma12 + gamma21)/2 (pure dephasing "
            << pure_dephasing() << " < 0)";
        throw ValidationError(msg.str());
    }
}

void to_json(nlohmann::json& j, const ModelParams& p) {
    j = nlohmann::json{{"Gamma", p.gamma_total}, {"gamma12", p.gamma12}, {"gamma21", p.gamma21}};
}

void from_json(const nlohmann::json& j, ModelParams& p) {
    for (const char* key : {"Gamma", "gamma12", "gamma21"}) {
        if (!j.contains(key) || !j.at(key).is_number()) {
            throw ValidationError(std::string("ModelParams JSON: missing numeric field '") + key + "'");
        }
    }
    p = ModelParams::make(j.at("Gamma").get<double>(), j.at("gamma12").get<double>(),
                          j.at("gamma21").get<double>());
}

ModelParams table_case(char tag) {
    switch (tag) {
    case 'a': return ModelParams::make(3.0, 0.3, 0.3);
    case 'b': return ModelParams::make(1.5, 0.3, 0.3);
    case 'c': return ModelParams::make(3.0, 0.0, 1.0);
    case 'd': return ModelParams::make(3.0, 0.1, 0.3);
    default: throw ValidationError(std::string("unknown case tag '") + tag + "' (expected a, b, c or d)");
    }
}

Vec2 table_initial_state(char tag) {
    switch (tag) {
    case 'a':
    case 'b':
    case 'd': return {0.0, 1.0};
    case 'c': return {0.0, 0.0};
    default: throw ValidationError(std::string("unknown case tag '") + tag + "'");
    }
}

bool in_disk(const Vec2& v, double tol) { return v.squaredNorm() <= 1.0 + tol; }

BlochState::BlochState(double x2, double x3) : x2_(x2), x3_(x3) {
    if (!std::isfinite(x2) || !std::isfinite(x3)) {
        throw ValidationError("Bloch state must be finite");
    }
    if (x2 * x2 + x3 * x3 > 1.0 + kDiskTolerance) {
        std::ostringstream msg;
        msg << "state (" << x2 << ", " << x3 << ") lies outside the Bloch disk";
        throw ValidationError(msg.str());
    }
}

Bloch3State Bloch3State::make(double x1, double x2, double x3) {
    if (x1 * x1 + x2 * x2 + x3 * x3 > 1.0 + kDiskTolerance) {
        throw ValidationError("state lies outside the Bloch ball");
    }
    return {x1, x2, x3};
}

Vec2 drift_field(const Vec2& x, const ModelParams& p) {
    return {-p.gamma_total * x.x(), p.gamma_minus() - p.gamma_plus() * x.y()};
}

Vec2 control_field(const Vec2& x) { return {-x.y(), x.x()}; }

Vec2 controlled_field(const Vec2& x, const ModelParams& p, double u) {
    return drift_field(x, p) + u * control_field(x);
}

Vec2 bracket_field(const Vec2& x, const ModelParams& p) {
    const double g = p.gamma_total;
    const double gp = p.gamma_plus();
    return {-p.gamma_minus() + (gp - g) * x.y(), (gp - g) * x.x()};
}

double delta_A(const Vec2& x, const ModelParams& p) {
    const double x2 = x.x();
    const double x3 = x.y();
    return -p.gamma_total * x2 * x2 + p.gamma_minus() * x3 - p.gamma_plus() * x3 * x3;
}

double delta_B(const Vec2& x, const ModelParams& p) {
    const double x2 = x.x();
    const double x3 = x.y();
    return 2.0 * p.gamma_total * x2 * x3 - 2.0 * p.gamma_plus() * x2 * x3 + p.gamma_minus() * x2;
}

double purity_rate(const Vec2& x, const ModelParams& p) {
    const double x2 = x.x();
    const double x3 = x.y();
    return -p.gamma_total * x2 * x2 + p.gamma_minus() * x3 - p.gamma_plus() * x3 * x3;
}

std::string to_string(CbLine line) { return line == CbLine::Vertical ? "vertical" : "horizontal"; }

std::optional<double> cb_horizontal_level(const ModelParams& p) {
    const double denom = 2.0 * (p.gamma_total - p.gamma_plus());
    if (denom == 0.0) {
        return std::nullopt;
    }
    return -p.gamma_minus() / denom;
}

Loci loci(const ModelParams& p, int resolution) {
    if (p.gamma_plus() < 0.0) {
        throw ValidationError("loci: gamma_plus must be nonnegative");
    }
    resolution = std::max(resolution, 3);
    Loci out;
    out.cb.push_back({CbLine::Vertical, {{0.0, -1.0}, {0.0, 1.0}}});
    if (const auto level = cb_horizontal_level(p)) {
        if (std::abs(*level) <= 1.0) {
            const double half = std::sqrt(1.0 - *level * *level);
            out.cb.push_back({CbLine::Horizontal, {{-half, *level}, {half, *level}}});
        } else {
            out.cb_horizontal_outside = true;
        }
    } else {
        out.cb_single_line = true;
    }

    const double gm = p.gamma_minus();
    if (gm == 0.0) {
        out.ca_is_point = true;
        out.ca_arcs.push_back({Vec2{0.0, 0.0}});
        return out;
    }
    // Ellipse Gamma x2^2 + gamma_plus (x3 - c)^2 = gm^2 / (4 gamma_plus).
    const double gp = p.gamma_plus();
    const double center = gm / (2.0 * gp);
    const double semi3 = std::abs(gm) / (2.0 * gp);
    const double semi2 = std::abs(gm) / (2.0 * std::sqrt(p.gamma_total * gp));
    constexpr double pi = std::numbers::pi;
    for (const double start : {0.5 * pi, -0.5 * pi}) {
        std::vector<Vec2> arc;
        arc.reserve(resolution);
        for (int i = 0; i < resolution; ++i) {
            const double phi = start + pi * static_cast<double>(i) / (resolution - 1);
            arc.emplace_back(semi2 * std::cos(phi), center + semi3 * std::sin(phi));
        }
        out.ca_arcs.push_back(std::move(arc));
    }
    return out;
}

BlochState free_fixed_point(const ModelParams& p) {
    if (p.gamma_plus() <= 0.0) {
        if (p.gamma_total > 0.0) {
            throw NoFixedPointError(
                "free dynamics has no isolated fixed point: gamma_plus = 0, every point of x2 = 0 is an "
                "equilibrium");
        }
        throw NoFixedPointError("free dynamics is trivial: every state is an equilibrium");
    }
    return BlochState(0.0, p.gamma_minus() / p.gamma_plus());
}

Vec2 controlled_limit_point(const ModelParams& p, double u) {
    Mat2 a;
    a << -p.gamma_total, -u, u, -p.gamma_plus();
    if (a.determinant() == 0.0) {
        throw ValidationError("controlled_limit_point: Gamma*gamma_plus + u^2 must be nonzero");
    }
    return a.partialPivLu().solve(Vec2{0.0, -p.gamma_minus()});
}

std::array<double, 3> rhs_3d(const Bloch3State& s, const ModelParams& p, double u1, double u2) {
    return {-p.gamma_total * s.x1 + u2 * s.x3, -p.gamma_total * s.x2 - u1 * s.x3,
            p.gamma_minus() - p.gamma_plus() * s.x3 + u1 * s.x2 - u2 * s.x1};
}

Eigen::Matrix3d drift_generator(const ModelParams& p) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    m(1, 1) = -p.gamma_total;
    m(2, 0) = p.gamma_minus();
    m(2, 2) = -p.gamma_plus();
    return m;
}

Eigen::Matrix3d control_generator() {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    m(1, 2) = -1.0;
    m(2, 1) = 1.0;
    return m;
}

namespace {

int gram_rank(const std::vector<Eigen::Matrix3d>& mats) {
    const auto n = static_cast<Eigen::Index>(mats.size());
    Eigen::MatrixXd gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            gram(i, j) = gram(j, i) = (mats[i].array() * mats[j].array()).sum();
        }
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd values = eig.eigenvalues();
    const double largest = values.cwiseAbs().maxCoeff();
    if (largest == 0.0) {
        return 0;
    }
    return static_cast<int>((values.array() > 1e-10 * largest).count());
}

} // namespace

AccessibilityResult accessibility(const ModelParams& p) {
    constexpr int kMaxGenerations = 20;
    AccessibilityResult result;
    result.degenerate = p.gamma_total == p.gamma_plus();

    std::vector<Eigen::Matrix3d> basis;
    auto try_add = [&basis](Eigen::Matrix3d m) {
        const double norm = m.norm();
        if (norm < 1e-14) {
            return false;
        }
        m /= norm;
        const int before = static_cast<int>(basis.size());
        basis.push_back(m);
        if (gram_rank(basis) > before) {
            return true;
        }
        basis.pop_back();
        return false;
    };
    try_add(drift_generator(p));
    try_add(control_generator());

    std::size_t fresh_from = 0;
    for (int gen = 1; gen <= kMaxGenerations; ++gen) {
        const std::size_t size = basis.size();
        bool added = false;
        for (std::size_t i = fresh_from; i < size; ++i) {
            for (std::size_t j = 0; j < size; ++j) {
                if (j >= fresh_from && j >= i) {
                    continue;
                }
                const Eigen::Matrix3d br = basis[i] * basis[j] - basis[j] * basis[i];
                added = try_add(br) || added;
            }
        }
        result.generations = gen;
        if (!added) {
            result.dimension = static_cast<int>(basis.size());
            return result;
        }
        fresh_from = size;
    }
    throw NumericalError("accessibility: Lie closure did not converge within 20 bracket generations");
}

int accessibility_dimension(const ModelParams& p) { return accessibility(p).dimension; }

} // namespace qtoc
