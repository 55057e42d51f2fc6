#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>

#include "geometry.hpp"
#include "qtoc/errors.hpp"
#include "qtoc/synthesis.hpp"

namespace qtoc {

namespace {

Vec2 rk4_step(const Vec2& x, const ModelParams& p, double u, double dt) {
    const Vec2 k1 = controlled_field(x, p, u);
    const Vec2 k2 = controlled_field(x + 0.5 * dt * k1, p, u);
    const Vec2 k3 = controlled_field(x + 0.5 * dt * k2, p, u);
    const Vec2 k4 = controlled_field(x + dt * k3, p, u);
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Longest time an expansion may stay inside one cell.
constexpr double kMaxDwell = 2.0;
// States per cell, and the radius (in grid spacings) within which an earlier state dominates.
constexpr int kMaxStates = 8;
constexpr double kDominanceRadius = 0.25;

} // namespace

int BruteForceOracle::index(const Vec2& x) const {
    const int i = static_cast<int>(std::lround((x.x() + 1.0) / h_));
    const int j = static_cast<int>(std::lround((x.y() + 1.0) / h_));
    if (i < 0 || j < 0 || i >= n_ || j >= n_) {
        return -1;
    }
    return j * n_ + i;
}

BruteForceOracle::BruteForceOracle(const BlochState& s0_state, const ModelParams& p, const OracleOptions& opt)
    : opt_(opt) {
    p.validate();
    if (opt_.grid < 3 || !(opt_.dt > 0.0) || (opt_.levels != 1 && opt_.levels != 2) || !(opt_.horizon > 0.0)) {
        throw ValidationError("BruteForceOracle: need grid >= 3, dt > 0, levels in {1, 2}, horizon > 0");
    }
    n_ = opt_.grid;
    h_ = 2.0 / (n_ - 1);
    if (opt_.target_radius <= 0.0) {
        opt_.target_radius = 0.5 * h_;
    }
    best_.assign(static_cast<std::size_t>(n_ * n_), std::numeric_limits<double>::infinity());
    paths_.assign(best_.size(), {});

    struct Rep {
        Vec2 x;
        double t;
    };
    std::vector<std::vector<Rep>> reps(best_.size());
    const double near = kDominanceRadius * h_;
    // Keeps (x, t) unless an earlier state of the cell lies within `near`.
    auto admit = [&](int c, const Vec2& x, double t) -> int {
        auto& rs = reps[static_cast<std::size_t>(c)];
        for (const auto& r : rs) {
            if (r.t <= t && (r.x - x).norm() <= near) {
                return -1;
            }
        }
        if (static_cast<int>(rs.size()) < kMaxStates) {
            rs.push_back({x, t});
            best_[static_cast<std::size_t>(c)] = std::min(best_[static_cast<std::size_t>(c)], t);
            return static_cast<int>(rs.size()) - 1;
        }
        auto worst = std::max_element(rs.begin(), rs.end(), [](const Rep& a, const Rep& b) { return a.t < b.t; });
        if (worst->t <= t) {
            return -1;
        }
        *worst = {x, t};
        best_[static_cast<std::size_t>(c)] = std::min(best_[static_cast<std::size_t>(c)], t);
        return static_cast<int>(worst - rs.begin());
    };

    std::vector<double> controls{-1.0, 0.0, 1.0};
    if (opt_.levels == 2) {
        controls = {-1.0, -0.5, 0.0, 0.5, 1.0};
    }

    const Vec2 s0 = s0_state.vec();
    const int c0 = index(s0);
    paths_[static_cast<std::size_t>(c0)].push_back({s0, s0, 0.0, 0.0});

    struct Item {
        double t;
        int cell;
        int slot;
        bool operator>(const Item& o) const { return t > o.t || (t == o.t && (cell > o.cell || (cell == o.cell && slot > o.slot))); }
    };
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    queue.push({0.0, c0, admit(c0, s0, 0.0)});
    const double emit_len = h_ / 8.0;
    const int max_steps = static_cast<int>(std::ceil(kMaxDwell / opt_.dt));

    while (!queue.empty()) {
        const Item it = queue.top();
        queue.pop();
        const Rep rep = reps[static_cast<std::size_t>(it.cell)][static_cast<std::size_t>(it.slot)];
        if (rep.t != it.t) {
            continue; // replaced
        }
        const int c = it.cell;
        for (double u : controls) {
            Vec2 x = rep.x;
            double t = rep.t;
            Vec2 seg_a = x;
            double seg_t = t;
            for (int k = 0; k < max_steps && t < opt_.horizon; ++k) {
                const Vec2 nx = rk4_step(x, p, u, opt_.dt);
                const double nt = t + opt_.dt;
                if (nx.squaredNorm() > 1.0 + 1e-9) {
                    break;
                }
                const int nc = index(nx);
                const bool left = nc != c;
                if (left || (nx - seg_a).norm() >= emit_len) {
                    paths_[static_cast<std::size_t>(index(seg_a))].push_back({seg_a, nx, seg_t, nt});
                    seg_a = nx;
                    seg_t = nt;
                }
                x = nx;
                t = nt;
                if (left) {
                    const int slot = admit(nc, x, t);
                    if (slot >= 0) {
                        queue.push({t, nc, slot});
                    }
                    break;
                }
            }
        }
    }
}

OracleResult BruteForceOracle::query(const Vec2& target) const {
    OracleResult r;
    const double rad = opt_.target_radius;
    const int c = index(target);
    if (c < 0) {
        return r;
    }
    const int ci = c % n_;
    const int cj = c / n_;
    // Segments are bucketed by their start cell and are shorter than about h/8 + dt * speed.
    const int reach = 1 + static_cast<int>(std::ceil(rad / h_));
    double best = std::numeric_limits<double>::infinity();
    for (int dj = -reach; dj <= reach; ++dj) {
        for (int di = -reach; di <= reach; ++di) {
            const int i = ci + di;
            const int j = cj + dj;
            if (i < 0 || j < 0 || i >= n_ || j >= n_) {
                continue;
            }
            for (const auto& s : paths_[static_cast<std::size_t>(j * n_ + i)]) {
                if (s.ta >= best) {
                    continue;
                }
                double w = 0.0;
                if (geom::point_segment_distance(target, s.a, s.b, &w) <= rad) {
                    best = std::min(best, s.ta + w * (s.tb - s.ta));
                }
            }
        }
    }
    if (std::isfinite(best)) {
        r.reached = true;
        r.time = best;
    }
    return r;
}

bool BruteForceOracle::cell_reached(const Vec2& x) const {
    const int c = index(x);
    return c >= 0 && std::isfinite(best_[static_cast<std::size_t>(c)]);
}

OracleResult brute_force_oracle(const BlochState& s0, const ModelParams& p, const BlochState& target, double dt,
                                int levels, int grid) {
    OracleOptions opt;
    opt.dt = dt;
    opt.levels = levels;
    opt.grid = grid;
    return BruteForceOracle(s0, p, opt).query(target.vec());
}

} // namespace qtoc
