#pragma once

#include "opinionctl/integrate.hpp"
#include "opinionctl/model.hpp"

namespace opinionctl {

/// Atomic measure sum_i w_i delta_{y_i}. Weights are positive unless the
/// measure came out of `source_atoms`, which produces signed weights.
struct EmpiricalMeasure {
    Positions atoms;
    Eigen::VectorXd weights;

    double total() const { return weights.sum(); }
    std::size_t size() const { return static_cast<std::size_t>(weights.size()); }
};

/// mu_N = (1/M) sum_i m_i delta_{x_i}
EmpiricalMeasure from_state(const SystemState& state);

/// V[mu](q) = sum w a(|q - y|)(y - q)
Point velocity_field(const EmpiricalMeasure& mu, const InteractionKernel& kernel, const Eigen::Ref<const Point>& q);

/// Signed atomic measure h[mu]: atom i carries w_i sum_j w_j S(y_i, y_j).
EmpiricalMeasure source_atoms(const EmpiricalMeasure& mu, const PairwiseFn& s);

/// Test function f with analytic gradient.
struct TestFunction {
    enum class Kind { coordinate, quadratic, gaussian_bump };
    Kind kind = Kind::coordinate;
    Eigen::Index axis = 0;  ///< coordinate: f(x) = x_axis
    Point center;           ///< quadratic / bump centre p
    double width = 1.0;     ///< bump: f(x) = exp(-|x - p|^2 / width^2)

    static TestFunction coordinate(Eigen::Index axis) { return {Kind::coordinate, axis, {}, 1.0}; }
    static TestFunction quadratic(Point p) { return {Kind::quadratic, 0, std::move(p), 1.0}; }
    static TestFunction gaussian_bump(Point p, double sigma) {
        return {Kind::gaussian_bump, 0, std::move(p), sigma};
    }

    double value(const Eigen::Ref<const Point>& x) const;
    Point gradient(const Eigen::Ref<const Point>& x) const;
};

/**
 * |D/dt_fd - int grad f . V[mu] dmu - int f dh[mu] - int f u dmu| at time t,
 * where D is the centred difference of int f dmu_N over [t - dt_fd, t + dt_fd].
 *
 * t and t +- dt_fd must be sample times of the trajectory. The control term
 * uses the held u, which must be constant over the whole window.
 */
double weak_form_residual(const Trajectory& traj, const TestFunction& f, double t, double dt_fd);

/// Merges agents within pos_tol of an earlier agent: first position kept, weights summed.
SystemState merge_coincident(const SystemState& state, double pos_tol);

/// |sum w (y - x*)|^2
double kinetic_variance(const EmpiricalMeasure& mu, const Eigen::Ref<const Point>& target);

} // namespace opinionctl
