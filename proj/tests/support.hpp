#pragma once

#include "opinionctl/model.hpp"
#include "opinionctl/rng.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace testsupport {

using opinionctl::Point;
using opinionctl::Positions;
using opinionctl::SplitMix64;
using opinionctl::Weights;

inline Positions random_positions(SplitMix64& rng, int n, int d, double lo = 0.0, double hi = 1.0) {
    Positions x(n, d);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) x(i, k) = rng.uniform(lo, hi);
    }
    return x;
}

inline Weights random_weights(SplitMix64& rng, int n, double lo = 0.5, double hi = 1.5) {
    Weights m(n);
    for (int i = 0; i < n; ++i) m[i] = rng.uniform(lo, hi);
    return m;
}

/// Random point of the probability simplex (normalised exponentials).
inline Eigen::VectorXd random_simplex(SplitMix64& rng, int n) {
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w[i] = -std::log(1.0 - rng.uniform());
    return w / w.sum();
}

inline double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

/// Hull edges by brute force: (i, j) is an edge when no point lies strictly to its right
/// and collinear points lie between i and j. O(N^3).
inline std::vector<std::array<int, 2>> brute_force_hull_edges(const Positions& p) {
    std::vector<std::array<int, 2>> edges;
    const int n = static_cast<int>(p.rows());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const Eigen::Vector2d a = p.row(i).transpose();
            const Eigen::Vector2d b = p.row(j).transpose();
            if ((a - b).norm() == 0.0) continue;
            bool ok = true;
            for (int k = 0; k < n && ok; ++k) {
                const Eigen::Vector2d c = p.row(k).transpose();
                const double cr = cross(a, b, c);
                if (cr < 0.0) ok = false;
                if (cr == 0.0) {
                    const double s = (c - a).dot(b - a) / (b - a).squaredNorm();
                    if (s < 0.0 || s > 1.0) ok = false;
                }
            }
            if (ok) edges.push_back({i, j});
        }
    }
    return edges;
}

inline double point_segment_distance(const Eigen::Vector2d& q, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    const Eigen::Vector2d ab = b - a;
    const double len2 = ab.squaredNorm();
    const double s = len2 > 0.0 ? std::clamp((q - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (a + s * ab - q).norm();
}

/// Signed distance to a nondegenerate convex polygon given by brute-force edges:
/// negative inside, positive outside.
inline double polygon_signed_distance(const Positions& p, const Eigen::Vector2d& q) {
    const auto edges = brute_force_hull_edges(p);
    bool inside = true;
    double d = std::numeric_limits<double>::infinity();
    for (const auto& e : edges) {
        const Eigen::Vector2d a = p.row(e[0]).transpose();
        const Eigen::Vector2d b = p.row(e[1]).transpose();
        if (cross(a, b, q) < 0.0) inside = false;
        d = std::min(d, point_segment_distance(q, a, b));
    }
    return inside ? -d : d;
}

} // namespace testsupport
