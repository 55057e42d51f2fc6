#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "qtoc/errors.hpp"
#include "qtoc/flows.hpp"
#include "support.hpp"

using namespace qtoc;
using qtoc::testing::random_disk_state;

namespace {

double max_abs_diff(const Vec2& a, const Vec2& b) { return (a - b).cwiseAbs().maxCoeff(); }

// Eigen-decomposition oracle for exp(A t) x0 around the stationary point.
Vec2 eig_flow(const Vec2& x0, const ModelParams& p, double u, double t) {
    Mat2 a;
    a << -p.gamma_total, -u, u, -p.gamma_plus();
    const Vec2 xs = a.fullPivLu().solve(Vec2{0.0, -p.gamma_minus()});
    Eigen::ComplexEigenSolver<Eigen::Matrix2cd> es(a.cast<std::complex<double>>());
    const Eigen::Matrix2cd v = es.eigenvectors();
    Eigen::Matrix2cd d = Eigen::Matrix2cd::Zero();
    d(0, 0) = std::exp(es.eigenvalues()[0] * t);
    d(1, 1) = std::exp(es.eigenvalues()[1] * t);
    const Eigen::Vector2cd y = v * d * v.inverse() * (x0 - xs).cast<std::complex<double>>();
    return xs + y.real();
}

} // namespace

TEST_CASE("discriminant classes") {
    CHECK(discriminant(table_case('a')).delta == doctest::Approx(1.76));
    CHECK(discriminant(table_case('a')).kind == Damping::Aperiodic);
    CHECK(discriminant(table_case('b')).delta == doctest::Approx(-3.19));
    CHECK(discriminant(table_case('b')).kind == Damping::PseudoPeriodic);
    CHECK(discriminant(table_case('c')).kind == Damping::Critical);
    CHECK(discriminant(ModelParams::make(2.6, 0.3, 0.3)).kind == Damping::Critical);
    CHECK(discriminant(table_case('d')).delta == doctest::Approx(2.76));
}

TEST_CASE("bang flow identities") {
    for (char tag : {'a', 'b', 'c', 'd'}) {
        const ModelParams p = table_case(tag);
        const BlochState s0(0.3, -0.4);
        for (int eps : {-1, 1}) {
            CHECK(max_abs_diff(bang_flow(s0, p, eps, 0.0).vec(), s0.vec()) == 0.0);
            const Vec2 xs = controlled_limit_point(p, eps);
            CHECK(max_abs_diff(bang_flow(BlochState(xs), p, eps, 3.7).vec(), xs) < 1e-15);
            // Semigroup law.
            const BlochState mid = bang_flow(s0, p, eps, 0.8);
            CHECK(max_abs_diff(bang_flow(mid, p, eps, 1.3).vec(), bang_flow(s0, p, eps, 2.1).vec()) < 1e-10);
        }
    }
    CHECK_THROWS_AS(bang_flow(BlochState(0, 1), table_case('a'), 1, -1.0), ValidationError);
    CHECK_THROWS_AS(bang_flow(BlochState(0, 1), table_case('a'), 0, 1.0), ValidationError);
}

TEST_CASE("bang flow against eigen-decomposition and RK oracles") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ut(0.0, 5.0);
    for (char tag : {'a', 'b', 'c', 'd'}) {
        const ModelParams p = table_case(tag);
        for (int eps : {-1, 1}) {
            for (int i = 0; i < 20; ++i) {
                const BlochState s0(random_disk_state(rng));
                const double t = ut(rng);
                const Vec2 x = bang_flow(s0, p, eps, t).vec();
                const Vec2 rk =
                    rk_oracle(s0, p, [eps](double) { return static_cast<double>(eps); }, t, 1e-10).end();
                CHECK(max_abs_diff(x, rk) < 1e-8);
                if (tag != 'c') {
                    CHECK(max_abs_diff(x, eig_flow(s0.vec(), p, eps, t)) < 1e-12);
                }
            }
        }
    }
}

TEST_CASE("near-critical branch is continuous") {
    // Gamma - gamma_plus = 2 + d for tiny d straddles the series switch.
    const BlochState s0(0.2, 0.7);
    const Vec2 ref = bang_flow(s0, ModelParams::make(2.6, 0.3, 0.3), 1, 2.0).vec();
    for (double d : {-1e-7, -1e-10, 1e-10, 1e-7}) {
        const Vec2 x = bang_flow(s0, ModelParams::make(2.6 + d, 0.3, 0.3), 1, 2.0).vec();
        CHECK(max_abs_diff(x, ref) < 1e-6);
    }
}

TEST_CASE("free flow") {
    const ModelParams d = table_case('d');
    const Vec2 far = free_flow(BlochState(0, 1), d, 50.0).vec();
    CHECK(max_abs_diff(far, Vec2{0, -0.5}) < 1e-6);
    const Vec2 x = free_flow(BlochState(0.5, 0.5), table_case('a'), 1.0).vec();
    CHECK(x.x() == doctest::Approx(0.5 * std::exp(-3.0)));
    CHECK(x.y() == doctest::Approx(0.5 * std::exp(-0.6)));
    std::mt19937_64 rng(12);
    for (char tag : {'a', 'b', 'c', 'd'}) {
        const ModelParams p = table_case(tag);
        for (int i = 0; i < 10; ++i) {
            const BlochState s0(random_disk_state(rng));
            const Vec2 rk = rk_oracle(s0, p, [](double) { return 0.0; }, 2.5, 1e-10).end();
            CHECK(max_abs_diff(free_flow(s0, p, 2.5).vec(), rk) < 1e-9);
            CHECK(max_abs_diff(free_flow(s0, p, 2.5).vec(), flow_const(s0.vec(), p, 0.0, 2.5)) < 1e-14);
        }
    }
}

TEST_CASE("singular control values") {
    const ModelParams d = table_case('d');
    const double h = 0.2 / 5.2;
    CHECK(singular_control(BlochState(0, 0.3), d).phi == 0.0);
    const SingularControl sc = singular_control(BlochState(0.5, h), d);
    CHECK(sc.line == CbLine::Horizontal);
    CHECK(sc.phi == doctest::Approx((-0.2) * (0.4 - 6.0) / (2 * 2.6 * 0.5)));
    CHECK(sc.phi == doctest::Approx(0.43077).epsilon(1e-4));
    CHECK_THROWS_AS(singular_control(BlochState(0.1, h), d), InadmissibleSingularError);
    try {
        singular_control(BlochState(0.1, h), d);
    } catch (const InadmissibleSingularError& e) {
        CHECK(e.phi() == doctest::Approx(2.1538).epsilon(1e-4));
    }
    CHECK_THROWS_AS(singular_control(BlochState(0.3, 0.3), d), ValidationError);
}

TEST_CASE("singular flow") {
    SUBCASE("vertical line is free decay") {
        const ModelParams c = table_case('c');
        const Trajectory z = singular_flow(BlochState(0, 0), c, 2.0);
        CHECK(z.termination == Termination::None);
        CHECK(z.end().x() == 0.0);
        CHECK(z.end().y() == doctest::Approx(free_flow(BlochState(0, 0), c, 2.0).x3()));
    }
    SUBCASE("unital horizontal line is decay along x3 = 0") {
        const ModelParams b = table_case('b');
        const Trajectory z = singular_flow(BlochState(0.6, 0.0), b, 1.0);
        for (const TrajSample& s : z.samples) {
            CHECK(s.x.y() == 0.0);
            CHECK(s.u == 0.0);
            CHECK(s.x.x() == doctest::Approx(0.6 * std::exp(-1.5 * s.t)));
        }
    }
    SUBCASE("case (d) horizontal line ends at the admissibility threshold") {
        const ModelParams d = table_case('d');
        const Trajectory z = singular_flow(BlochState(0.5, 0.03846), d, 5.0);
        CHECK(z.termination == Termination::Admissibility);
        CHECK(std::abs(z.end().x()) == doctest::Approx(1.12 / 5.2).epsilon(1e-6));
        for (const TrajSample& s : z.samples) {
            CHECK(std::abs(delta_B(s.x, d)) < 1e-7);
            CHECK(std::abs(s.u) <= 1.0 + 1e-12);
        }
        // Closed form against RK with the feedback law.
        const double h = *cb_horizontal_level(d);
        const BlochState start(0.5, h);
        const double tz = 0.8 * z.t_end();
        const Trajectory rk = rk_oracle(
            start, d, FeedbackFn([&](double, const Vec2& x) { return singular_feedback(x, d, CbLine::Horizontal); }),
            tz, 1e-11);
        CHECK(max_abs_diff(rk.end(), z.state_at(tz)) < 1e-8);
    }
    CHECK_THROWS_AS(singular_flow(BlochState(0.1, 0.2 / 5.2), table_case('d'), 1.0), InadmissibleSingularError);
    CHECK_THROWS_AS(singular_flow(BlochState(0.4, 0.4), table_case('d'), 1.0), ValidationError);
}

TEST_CASE("purity law sign and disk invariance along random words") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> dur(0.05, 1.0);
    std::uniform_int_distribution<int> kind(0, 2);
    for (char tag : {'a', 'b', 'c', 'd'}) {
        const ModelParams p = table_case(tag);
        for (int w = 0; w < 10; ++w) {
            std::vector<Arc> arcs;
            for (int k = 0; k < 4; ++k) {
                const ArcKind ak = kind(rng) == 0 ? ArcKind::X : (kind(rng) == 1 ? ArcKind::Y : ArcKind::F0);
                arcs.push_back({ak, dur(rng), std::nullopt});
            }
            const Trajectory traj = propagate_word(BlochState(random_disk_state(rng)), p, ControlWord(arcs));
            for (std::size_t i = 0; i < traj.samples.size(); ++i) {
                const auto& s = traj.samples[i];
                CHECK(in_disk(s.x));
                const double da = delta_A(s.x, p);
                if (std::abs(da) > 1e-6) {
                    const double hstep = 1e-6;
                    const double t0 = std::max(traj.t_begin(), s.t - hstep);
                    const double t1 = std::min(traj.t_end(), s.t + hstep);
                    const double r0 = traj.state_at(t0).squaredNorm();
                    const double r1 = traj.state_at(t1).squaredNorm();
                    CHECK((r1 - r0 > 0) == (da > 0));
                }
            }
        }
    }
}

TEST_CASE("pseudo-periodic winding about the stationary point") {
    auto swept = [](char tag, double t_total) {
        const ModelParams p = table_case(tag);
        const Vec2 xs = controlled_limit_point(p, 1.0);
        double total = 0.0;
        Vec2 prev = Vec2{0, 1} - xs;
        for (int k = 1; k <= 4000; ++k) {
            const Vec2 cur = bang_flow(BlochState(0, 1), p, 1, t_total * k / 4000).vec() - xs;
            total += std::atan2(cross(prev, cur), prev.dot(cur));
            prev = cur;
        }
        return std::abs(total);
    };
    CHECK(swept('b', 12.0) > 2 * std::numbers::pi);
    CHECK(swept('a', 12.0) < std::numbers::pi);
}

TEST_CASE("event crossings") {
    SUBCASE("case (a) Y arc from the north pole stays above x3 = 0") {
        const ModelParams a = table_case('a');
        const Trajectory y = propagate_word(BlochState(0, 1), a, ControlWord::parse("Y:5"));
        int db = 0;
        for (const Event& e : event_crossings(y, a)) {
            if (e.kind == EventKind::DeltaB) {
                ++db;
            }
        }
        CHECK(db == 0);
    }
    SUBCASE("case (b) Y arc spirals across x3 = 0 then x2 = 0") {
        const ModelParams b = table_case('b');
        const Trajectory y = propagate_word(BlochState(0, 1), b, ControlWord::parse("Y:3.6"));
        const auto events = event_crossings(y, b);
        std::vector<Event> db;
        for (const Event& e : events) {
            if (e.kind == EventKind::DeltaB) {
                db.push_back(e);
            }
        }
        REQUIRE(db.size() == 2);
        CHECK(std::abs(db[0].x.y()) < 1e-8);
        CHECK(db[0].x.x() < 0.0);
        CHECK(std::abs(db[1].x.x()) < 1e-8);
        CHECK(db[1].x.y() < 0.0);
        // Refined time against a direct bisection on the closed form.
        double lo = 2.0;
        double hi = 2.5;
        for (int i = 0; i < 80; ++i) {
            const double m = 0.5 * (lo + hi);
            (bang_flow(BlochState(0, 1), b, 1, m).x3() > 0 ? lo : hi) = m;
        }
        CHECK(db[0].t == doctest::Approx(lo).epsilon(1e-9));
    }
    SUBCASE("free arc on x2 = 0 never changes x2 sign") {
        const ModelParams d = table_case('d');
        const Trajectory f = propagate_word(BlochState(0, 0.9), d, ControlWord::parse("F0:4"));
        for (const Event& e : event_crossings(f, d)) {
            CHECK(e.kind != EventKind::X2);
        }
    }
    SUBCASE("arc inside one quadrant has no delta_B events") {
        const ModelParams d = table_case('d');
        const Trajectory f = propagate_word(BlochState(0.5, 0.5), d, ControlWord::parse("X:0.05"));
        for (const Event& e : event_crossings(f, d)) {
            CHECK(e.kind != EventKind::DeltaB);
        }
    }
}

TEST_CASE("three-dimensional reduction") {
    for (char tag : {'a', 'b', 'c', 'd'}) {
        const ModelParams p = table_case(tag);
        for (double x10 : {0.0, 0.3}) {
            auto u1 = [](double t) { return t < 1.0 ? 1.0 : -1.0; };
            auto u2 = [](double) { return 0.0; };
            const OdeSolution<3> sol = rk_oracle_3d({x10, 0.2, 0.5}, p, u1, u2, 2.0, 1e-12);
            for (std::size_t i = 0; i < sol.t.size(); ++i) {
                CHECK(std::abs(sol.x[i][0] - x10 * std::exp(-p.gamma_total * sol.t[i])) < 1e-8);
            }
            const Vec2 planar =
                propagate_word(BlochState(0.2, 0.5), p, ControlWord::parse("Y:1,X:1")).end();
            CHECK(max_abs_diff(planar, Vec2(sol.final_state()[1], sol.final_state()[2])) < 1e-9);
        }
    }
}

TEST_CASE("control words") {
    const ControlWord w = ControlWord::parse("Y:2.0,X:0.5");
    CHECK(w.size() == 2);
    CHECK(w.total_time() == doctest::Approx(2.5));
    CHECK(w.pattern() == "Y*X");
    CHECK(w.composition() == "X*Y");
    CHECK(ControlWord::parse("Y:0").empty());
    CHECK(ControlWord::parse("Y:1,Y:2").size() == 1);
    CHECK_THROWS_AS(ControlWord::parse("Q:1"), ValidationError);
    CHECK_THROWS_AS(ControlWord::parse("Y:abc"), ValidationError);
    CHECK_THROWS_AS(ControlWord::parse("Y:-1"), ValidationError);
    const nlohmann::json j = w;
    CHECK(j.at("arcs").size() == 2);
    CHECK(j.at("arcs")[0].at("kind") == "Y");
    CHECK(j.at("total_time") == 2.5);
    CHECK(j.get<ControlWord>() == w);
}

TEST_CASE("trajectory CSV") {
    const ModelParams a = table_case('a');
    const Trajectory y = propagate_word(BlochState(0, 1), a, ControlWord::parse("Y:0.05"));
    std::ostringstream os;
    write_trajectory_csv(os, y, a);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,x2,x3,u,deltaA,deltaB");
    int rows = 0;
    double last_t = -1.0;
    while (std::getline(in, line)) {
        ++rows;
        const double t = std::stod(line.substr(0, line.find(',')));
        CHECK(t > last_t);
        last_t = t;
    }
    CHECK(rows == static_cast<int>(y.samples.size()));
    const Trajectory zero = propagate_word(BlochState(0, 1), a, ControlWord::parse("Y:0"));
    CHECK(zero.samples.size() == 1);
}
