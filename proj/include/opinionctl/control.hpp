#pragma once

#include "opinionctl/geometry.hpp"
#include "opinionctl/model.hpp"

#include <string>
#include <variant>

namespace opinionctl {

using Control = Eigen::VectorXd;

/// {|u_i| <= alpha} or {sum |u_i| <= A}, optionally intersected with {sum m_i u_i = 0}.
struct ControlSet {
    enum class Norm { linf, l1 };
    Norm norm = Norm::linf;
    double bound = 1.0;  ///< alpha for linf, A for l1
    bool mass_conserving = true;

    static ControlSet linf(double alpha, bool mass_conserving) {
        return {Norm::linf, alpha, mass_conserving};
    }
    static ControlSet l1(double a, bool mass_conserving) { return {Norm::l1, a, mass_conserving}; }

    void validate() const;
    /// True if u lies in the set up to the given relative slack.
    bool contains(const Control& u, const Weights& m, double rel_tol = 1e-12,
                  double mass_tol = 1e-10) const;
};

enum class CostForm { conserving, free };

/// Coefficients c of the linear functional sum c_i u_i that dX/dt is proportional to:
///   conserving: c_i = m_i <xbar - x*, x_i - x*>
///   free:       c_i = m_i <xbar - x*, x_i - xbar>
Eigen::VectorXd cost_vector(const SystemState& state, const Eigen::Ref<const Point>& target, CostForm form);

/**
 * argmin sum c_i u_i  s.t. |u_i| <= alpha, sum m_i u_i = 0.
 *
 * Fractional knapsack in v = m u: ratios c_i / m_i sorted descending (ties by
 * lower index) take v_i = -alpha m_i first; the remainder stays at +alpha m_i,
 * with a single fractional entry balancing sum v = 0.
 */
Control solve_box_hyperplane(const Eigen::Ref<const Eigen::VectorXd>& c, const Weights& m, double alpha);

/**
 * argmin sum c_i u_i  s.t. sum |u_i| <= A, sum m_i u_i = 0.
 *
 * Vertices of this polytope are supported on two agents. The pair (i, j)
 * gains A m_i m_j / (m_i + m_j) |r_i - r_j| with r = c / m; the best pair
 * (lexicographically first on ties) is returned. Zero when all ratios agree.
 */
Control solve_diamond_hyperplane(const Eigen::Ref<const Eigen::VectorXd>& c, const Weights& m, double a);

/// Instantaneous minimiser of dX/dt over `set`.
Control steepest_descent(const SystemState& state, const Eigen::Ref<const Point>& target, const ControlSet& set);

struct ConstructiveControl {
    Control u;
    bool clamped = false;       ///< pair was rescaled to respect |u| <= alpha
    bool would_clamp = false;   ///< m_{i+} > m_{i-}, i.e. the literal control exceeds alpha
};

/// Two-agent control u_{i-} = alpha m_{i+}/m_{i-}, u_{i+} = -alpha, driven by the
/// extreme scores m_i <xbar - x*, x_i - x*>. With `clamp`, the pair is rescaled
/// by m_{i-}/m_{i+} whenever that keeps max |u| at alpha.
ConstructiveControl constructive_theorem1(const SystemState& state, const Eigen::Ref<const Point>& target,
                                          double alpha, bool clamp);

struct OpenLoopPlan {
    Control u;               ///< constant control applied on [0, horizon]
    double horizon;          ///< T
    double kappa;            ///< m_i(T) = kappa tau_i
    Eigen::VectorXd tau;     ///< convex coefficients of the target
    double r_min;
    double r_max;
};

class InternalConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Constant control steering every weight to kappa * tau_i at time T, where
 * tau are positive convex coefficients of the target in the initial positions.
 * Requires alpha > alpha_tilde > 0.
 */
OpenLoopPlan open_loop_theorem2(const Positions& x0, const Weights& m0, const Eigen::Ref<const Point>& target,
                                double alpha, double alpha_tilde, double tau_min);

/// Number of |u_i| > tol * max(1, max |u|).
int active_components(const Eigen::Ref<const Control>& u, double tol);

/// dX/dt with X = |xbar - x*|^2 under weight rates psi + u:
/// (2 / sum m) sum m_i (psi_i + u_i) <xbar - x*, x_i - xbar>.
double objective_dxdt(const SystemState& state, const Eigen::Ref<const Point>& target,
                      const Eigen::Ref<const Eigen::VectorXd>& rates);

// ---------------------------------------------------------------------------
// Control laws

struct ZeroLaw {};
struct SteepestDescentLaw {
    ControlSet set;
};
struct ConstructiveLaw {
    double alpha;
    bool clamp = true;
};
struct OpenLoopLaw {
    Control u;
    double horizon;
};

/// Feedback or open-loop rule producing u(t) from the state and a target.
struct ControlLaw {
    std::variant<ZeroLaw, SteepestDescentLaw, ConstructiveLaw, OpenLoopLaw> kind;
    Point target;

    static ControlLaw zero(Point target) { return {ZeroLaw{}, std::move(target)}; }
    static ControlLaw steepest(ControlSet set, Point target) {
        return {SteepestDescentLaw{set}, std::move(target)};
    }
    static ControlLaw constructive(double alpha, bool clamp, Point target) {
        return {ConstructiveLaw{alpha, clamp}, std::move(target)};
    }
    static ControlLaw open_loop(Control u, double horizon, Point target) {
        return {OpenLoopLaw{std::move(u), horizon}, std::move(target)};
    }

    /// True when every control the law emits satisfies sum m_i u_i = 0.
    bool mass_conserving() const;
    /// Horizon of an open-loop law, +inf otherwise.
    double horizon() const;
    std::string describe() const;
    void validate(std::size_t n, std::size_t d) const;
};

struct ControlOutput {
    Control u;
    bool clamped = false;
    bool would_clamp = false;
};

ControlOutput evaluate(const ControlLaw& law, const SystemState& state);

} // namespace opinionctl
