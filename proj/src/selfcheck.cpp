#include "qtoc/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "qtoc/clockform.hpp"
#include "qtoc/errors.hpp"
#include "qtoc/flows.hpp"
#include "qtoc/pmp.hpp"

namespace qtoc {

namespace {

Vec2 disk_sample(std::mt19937_64& rng, double r) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double rho = r * std::sqrt(u(rng));
    const double ang = 2.0 * std::numbers::pi * u(rng);
    return {rho * std::cos(ang), rho * std::sin(ang)};
}

CheckResult make(const std::string& name, const std::string& target, double value, double tol, bool ok,
                 std::string detail = {}) {
    return {name, target, ok, value, tol, std::move(detail)};
}

CheckResult check_flows(const ModelParams& p, const std::string& target, std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> ut(0.0, 5.0);
    double worst = 0.0;
    for (int eps : {-1, 1}) {
        for (int i = 0; i < n; ++i) {
            const BlochState s0(disk_sample(rng, 1.0));
            const double t = ut(rng);
            const Vec2 x = bang_flow(s0, p, eps, t).vec();
            const Vec2 rk = rk_oracle(s0, p, [eps](double) { return static_cast<double>(eps); }, t, 1e-10).end();
            worst = std::max(worst, (x - rk).cwiseAbs().maxCoeff());
        }
    }
    return make("flow oracle agreement", target, worst, 1e-8, worst < 1e-8);
}

CheckResult check_purity(const ModelParams& p, const std::string& target, std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> dur(0.05, 1.0);
    std::bernoulli_distribution coin(0.5);
    double worst = 0.0;
    for (int w = 0; w < n; ++w) {
        std::vector<Arc> arcs;
        for (int k = 0; k < 4; ++k) {
            arcs.push_back({coin(rng) ? ArcKind::Y : ArcKind::X, dur(rng), std::nullopt});
        }
        const Trajectory traj = propagate_word(BlochState(disk_sample(rng, 1.0)), p, ControlWord(arcs));
        for (const auto& piece : traj.pieces) {
            const double h = 1e-5;
            for (int k = 1; k < 20; ++k) {
                const double t = piece.t0 + (piece.t1 - piece.t0) * k / 20.0;
                if (t - h <= piece.t0 || t + h >= piece.t1) {
                    continue;
                }
                const Vec2 x = piece.state(t);
                const double da = delta_A(x, p);
                if (std::abs(da) <= 1e-4) {
                    continue;
                }
                const double rate =
                    (piece.state(t + h).squaredNorm() - piece.state(t - h).squaredNorm()) / (2.0 * h);
                worst = std::max(worst, std::abs(rate - 2.0 * da));
            }
        }
    }
    return make("purity law", target, worst, 1e-5, worst < 1e-5, "d|x|^2/dt = 2 delta_A");
}

CheckResult check_theta(const ModelParams& p, const Vec2& s0_in, const std::string& target, std::mt19937_64& rng,
                        int n) {
    std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
    int violations = 0;
    int samples = 0;
    int made = 0;
    bool zero_start = true;
    for (int guard = 0; made < n && guard < 50 * n; ++guard) {
        Vec2 s0 = s0_in;
        if (s0.norm() < 1e-9) {
            s0 = disk_sample(rng, 0.9);
        }
        const double a = ang(rng);
        Extremal e;
        try {
            e = propagate_extremal(BlochState(s0), {std::cos(a), std::sin(a)}, p, 1.5);
        } catch (const ValidationError&) {
            continue;
        } catch (const NumericalError&) {
            continue;
        }
        if (e.abnormal || e.word.empty()) {
            continue;
        }
        ++made;
        const auto th = theta_function(e.trajectory, p);
        zero_start = zero_start && th.front().theta == 0.0;
        for (const auto& s : th) {
            const double db = delta_B(e.trajectory.state_at(s.t), p);
            if (std::abs(db) > 1e-6 && std::abs(s.theta_dot) > 1e-6) {
                ++samples;
                violations += ((s.theta_dot > 0) != (db > 0)) ? 1 : 0;
            }
        }
    }
    std::ostringstream d;
    d << made << " extremals, " << samples << " samples";
    return make("theta sign law", target, violations, 0.0, zero_start && violations == 0 && made > 0, d.str());
}

CheckResult check_clock(const ModelParams& p, const std::string& target, std::mt19937_64& rng, int n) {
    double worst = 0.0;
    int used = 0;
    while (used < n) {
        const Vec2 x = disk_sample(rng, 1.0);
        if (std::abs(delta_A(x, p)) < 1e-3) {
            continue;
        }
        ++used;
        const Vec2 a = alpha_at(x, p);
        worst = std::max({worst, std::abs(a.dot(drift_field(x, p)) - 1.0), std::abs(a.dot(control_field(x)))});
    }
    return make("clock form identities", target, worst, 1e-12, worst < 1e-12, "alpha(F) = 1, alpha(G) = 0");
}

CheckResult check_lie(const ModelParams& p, const std::string& target) {
    const AccessibilityResult r = accessibility(p);
    if (r.degenerate) {
        return make("Lie algebra dimension", target, r.dimension, 0.0, true, "Gamma == gamma_plus, not compared");
    }
    const int expected = p.unital() ? 4 : 6;
    return make("Lie algebra dimension", target, r.dimension, 0.0, r.dimension == expected,
                "expected " + std::to_string(expected));
}

} // namespace

bool SelfCheckReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

SelfCheckReport selfcheck(const ModelParams& p, const Vec2& s0, const std::string& target,
                          const SelfCheckOptions& opt) {
    p.validate();
    std::mt19937_64 rng(opt.seed);
    SelfCheckReport r;
    r.checks.push_back(check_flows(p, target, rng, opt.flow_states));
    r.checks.push_back(check_purity(p, target, rng, opt.purity_words));
    r.checks.push_back(check_theta(p, s0, target, rng, opt.extremals));
    r.checks.push_back(check_clock(p, target, rng, opt.clock_states));
    r.checks.push_back(check_lie(p, target));
    return r;
}

SelfCheckReport selfcheck_reference(const SelfCheckOptions& opt) {
    SelfCheckReport all;
    for (char tag : {'a', 'b', 'c', 'd'}) {
        const SelfCheckReport r = selfcheck(table_case(tag), table_initial_state(tag), std::string(1, tag), opt);
        all.checks.insert(all.checks.end(), r.checks.begin(), r.checks.end());
    }
    return all;
}

nlohmann::json to_json(const SelfCheckReport& r) {
    nlohmann::json j;
    j["passed"] = r.passed();
    j["checks"] = nlohmann::json::array();
    for (const auto& c : r.checks) {
        j["checks"].push_back({{"name", c.name},
                               {"target", c.target},
                               {"passed", c.passed},
                               {"value", c.value},
                               {"tolerance", c.tolerance},
                               {"detail", c.detail}});
    }
    return j;
}

} // namespace qtoc
