#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "qtoc/linalg.hpp"

namespace qtoc::geom {

inline double point_segment_distance(const Vec2& q, const Vec2& a, const Vec2& b, double* frac = nullptr) {
    const Vec2 d = b - a;
    const double l2 = d.squaredNorm();
    double w = l2 > 0.0 ? std::clamp((q - a).dot(d) / l2, 0.0, 1.0) : 0.0;
    if (frac) {
        *frac = w;
    }
    return (a + w * d - q).norm();
}

inline double polyline_distance(const Vec2& q, const std::vector<Vec2>& pts) {
    if (pts.size() == 1) {
        return (pts.front() - q).norm();
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        best = std::min(best, point_segment_distance(q, pts[i], pts[i + 1]));
    }
    return best;
}

struct Crossing {
    double alpha = 0.0; // fraction along the first segment
    double beta = 0.0;  // fraction along the second
};

// Proper or touching intersection of [a0,a1] and [b0,b1]; parallel overlaps are ignored.
inline std::optional<Crossing> segment_intersection(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1) {
    const Vec2 r = a1 - a0;
    const Vec2 s = b1 - b0;
    const double den = cross(r, s);
    if (den == 0.0) {
        return std::nullopt;
    }
    const Vec2 q = b0 - a0;
    const double alpha = cross(q, s) / den;
    const double beta = cross(q, r) / den;
    constexpr double slack = 1e-12;
    if (alpha < -slack || alpha > 1 + slack || beta < -slack || beta > 1 + slack) {
        return std::nullopt;
    }
    return Crossing{std::clamp(alpha, 0.0, 1.0), std::clamp(beta, 0.0, 1.0)};
}

inline double winding_number(const std::vector<Vec2>& loop, const Vec2& q) {
    double total = 0.0;
    for (std::size_t i = 0; i < loop.size(); ++i) {
        const Vec2 a = loop[i] - q;
        const Vec2 b = loop[(i + 1) % loop.size()] - q;
        total += std::atan2(cross(a, b), a.dot(b));
    }
    return total / (2.0 * std::numbers::pi);
}

// Uniform bucket grid over the square [-1.05, 1.05]^2 for polyline segments.
class SegmentIndex {
public:
    explicit SegmentIndex(const std::vector<Vec2>& pts, int cells = 96) : pts_(pts), n_(cells) {
        buckets_.resize(static_cast<std::size_t>(n_ * n_));
        for (std::size_t i = 0; i + 1 < pts_.size(); ++i) {
            visit_box(pts_[i], pts_[i + 1], [&](std::size_t b) { buckets_[b].push_back(static_cast<std::uint32_t>(i)); });
        }
        stamp_.assign(pts_.size(), 0);
    }

    // Calls f(i, crossing) for every polyline segment i crossing [b0, b1].
    template <class F>
    void intersect(const Vec2& b0, const Vec2& b1, F&& f) const {
        ++epoch_;
        visit_box(b0, b1, [&](std::size_t b) {
            for (std::uint32_t i : buckets_[b]) {
                if (stamp_[i] == epoch_) {
                    continue;
                }
                stamp_[i] = epoch_;
                if (auto c = segment_intersection(pts_[i], pts_[i + 1], b0, b1)) {
                    f(static_cast<std::size_t>(i), *c);
                }
            }
        });
    }

    // Nearest segment within radius r (index, fraction, distance).
    std::optional<std::pair<std::size_t, double>> nearest(const Vec2& q, double r) const {
        std::optional<std::pair<std::size_t, double>> best;
        double bd = r;
        ++epoch_;
        visit_box(q - Vec2{r, r}, q + Vec2{r, r}, [&](std::size_t b) {
            for (std::uint32_t i : buckets_[b]) {
                if (stamp_[i] == epoch_) {
                    continue;
                }
                stamp_[i] = epoch_;
                double w = 0.0;
                const double d = point_segment_distance(q, pts_[i], pts_[i + 1], &w);
                if (d <= bd) {
                    bd = d;
                    best = std::pair<std::size_t, double>{i, w};
                }
            }
        });
        return best;
    }

private:
    int cell(double v) const {
        const int c = static_cast<int>(std::floor((v + kExtent) / (2 * kExtent) * n_));
        return std::clamp(c, 0, n_ - 1);
    }

    template <class F>
    void visit_box(const Vec2& a, const Vec2& b, F&& f) const {
        const int i0 = cell(std::min(a.x(), b.x()));
        const int i1 = cell(std::max(a.x(), b.x()));
        const int j0 = cell(std::min(a.y(), b.y()));
        const int j1 = cell(std::max(a.y(), b.y()));
        for (int j = j0; j <= j1; ++j) {
            for (int i = i0; i <= i1; ++i) {
                f(static_cast<std::size_t>(j * n_ + i));
            }
        }
    }

    static constexpr double kExtent = 1.05;
    std::vector<Vec2> pts_;
    int n_;
    std::vector<std::vector<std::uint32_t>> buckets_;
    mutable std::vector<std::uint64_t> stamp_;
    mutable std::uint64_t epoch_ = 0;
};

} // namespace qtoc::geom

namespace qtoc {

struct FrontIndex {
    std::vector<geom::SegmentIndex> segments;
};

} // namespace qtoc
