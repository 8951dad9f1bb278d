#pragma once

#include "opinionctl/model.hpp"

#include <array>
#include <stdexcept>
#include <vector>

namespace opinionctl {

/// sum_i m_i x_i / sum_i m_i
Point barycenter(const Positions& x, const Eigen::Ref<const Eigen::VectorXd>& m);
inline Point barycenter(const SystemState& s) { return barycenter(s.x, s.m); }

using Vec2 = std::array<double, 2>;

/// Convex polygon, counterclockwise, without collinear vertices.
/// One vertex for a single point, two for a collinear set.
struct Hull2D {
    std::vector<Vec2> vertices;
};

/// Andrew's monotone chain. `points` must have two columns.
Hull2D hull_2d(const Positions& points);

enum class Membership { inside, boundary, outside };

struct MembershipResult {
    Membership where;
    double distance;   ///< Frank-Wolfe estimate of dist(q, hull)
    double fw_gap;     ///< duality gap at termination (bounds dist^2 error)
    std::size_t iterations;
};

class MembershipStalled : public std::runtime_error {
public:
    MembershipStalled() : std::runtime_error("membership solver stalled") {}
};

/**
 * Classifies q against the convex hull of the rows of `points`.
 *
 * The distance comes from away-step Frank-Wolfe on |sum xi_i x_i - q|^2 over
 * the probability simplex, stopped once the Frank-Wolfe gap drops below tol^2
 * or the iterate comes within tol of q. In the second case `distance` is only
 * an upper bound (<= tol). Points within `tol` are `inside` when interior_margin(points, q) > tol and
 * `boundary` otherwise.
 */
MembershipResult hull_contains(const Positions& points, const Eigen::Ref<const Point>& q, double tol);

/// Distance from q to the convex hull, same solver as hull_contains (values <= tol are upper bounds).
double hull_distance(const Positions& points, const Eigen::Ref<const Point>& q, double tol = 1e-9);

struct BarycentricCoords {
    Eigen::VectorXd tau;
    double residual;  ///< |sum tau_i x_i - q|
};

class BarycentricError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Convex coefficients tau with sum tau_i x_i = q, biased toward the uniform
 * vector. Minimises |X^T tau - q|^2 + 1e-6 |tau - 1/N|^2 over the simplex by
 * accelerated projected gradient, then removes the regularisation bias by a
 * minimum-norm correction on the support so the equality holds to rounding.
 *
 * Throws BarycentricError("target outside hull") when the residual exceeds
 * 1e-8 (1 + |q|), or BarycentricError("target too close to boundary for
 * strictly positive coefficients") when min tau_i < tau_min.
 */
BarycentricCoords barycentric_coords(const Positions& points, const Eigen::Ref<const Point>& q,
                                     double tau_min);

/**
 * Distance from q to the boundary of the hull, 0 when q is outside or on it.
 * Exact for d = 1 and d = 2. For d >= 3 a lower bound: the largest r such
 * that q +- r e_k lies in the hull for every axis k, divided by sqrt(d).
 */
double interior_margin(const Positions& points, const Eigen::Ref<const Point>& q);

/// Euclidean projection onto the probability simplex.
Eigen::VectorXd project_simplex(const Eigen::Ref<const Eigen::VectorXd>& v);

} // namespace opinionctl
