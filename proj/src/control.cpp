#include "opinionctl/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

namespace opinionctl {

void ControlSet::validate() const {
    if (!(bound > 0.0) || !std::isfinite(bound)) {
        throw std::invalid_argument(norm == Norm::linf ? "alpha must be positive" : "A must be positive");
    }
}

bool ControlSet::contains(const Control& u, const Weights& m, double rel_tol, double mass_tol) const {
    const double size = norm == Norm::linf ? u.lpNorm<Eigen::Infinity>() : u.lpNorm<1>();
    if (size > bound * (1.0 + rel_tol)) return false;
    if (mass_conserving && std::abs(m.dot(u)) > mass_tol * bound * m.sum()) return false;
    return true;
}

Eigen::VectorXd cost_vector(const SystemState& state, const Eigen::Ref<const Point>& target, CostForm form) {
    if (target.size() != state.x.cols()) throw std::invalid_argument("target dimension mismatch");
    const Point xbar = barycenter(state);
    const Point offset = xbar - target;
    const Point& origin = form == CostForm::conserving ? Point(target) : xbar;
    const Eigen::VectorXd inner = (state.x.rowwise() - origin.transpose()) * offset;
    return state.m.cwiseProduct(inner);
}

namespace {

// Indices sorted by descending ratio c_i / m_i, lower index first on ties.
std::vector<Eigen::Index> ratio_order(const Eigen::VectorXd& ratio) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(ratio.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return ratio[a] > ratio[b]; });
    return order;
}

void check_lp_inputs(const Eigen::Ref<const Eigen::VectorXd>& c, const Weights& m, double bound) {
    if (c.size() != m.size()) throw std::invalid_argument("cost and weight lengths differ");
    if ((m.array() <= 0.0).any()) throw std::invalid_argument("weights must be positive");
    if (!(bound > 0.0)) throw std::invalid_argument("control bound must be positive");
}

} // namespace

Control solve_box_hyperplane(const Eigen::Ref<const Eigen::VectorXd>& c, const Weights& m, double alpha) {
    check_lp_inputs(c, m, alpha);
    const auto n = c.size();
    const Eigen::VectorXd ratio = c.cwiseQuotient(m);
    if (ratio.maxCoeff() == ratio.minCoeff()) return Control::Zero(n);

    // Start from v = +alpha m; flipping index i to -alpha m_i removes 2 alpha m_i.
    Eigen::VectorXd v = alpha * m;
    double excess = v.sum();
    Eigen::Index fractional = -1;
    for (const Eigen::Index i : ratio_order(ratio)) {
        if (excess <= 0.0) break;
        const double swing = 2.0 * alpha * m[i];
        if (swing <= excess) {
            v[i] = -alpha * m[i];
            excess -= swing;
        } else {
            fractional = i;
            break;
        }
    }
    if (fractional >= 0) {
        v[fractional] = 0.0;
        v[fractional] = std::clamp(-v.sum(), -alpha * m[fractional], alpha * m[fractional]);
    }
    return v.cwiseQuotient(m);
}

Control solve_diamond_hyperplane(const Eigen::Ref<const Eigen::VectorXd>& c, const Weights& m, double a) {
    check_lp_inputs(c, m, a);
    const auto n = c.size();
    const Eigen::VectorXd ratio = c.cwiseQuotient(m);

    double best_gain = 0.0;
    Eigen::Index bi = -1;
    Eigen::Index bj = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double gain = a * m[i] * m[j] / (m[i] + m[j]) * std::abs(ratio[i] - ratio[j]);
            if (gain > best_gain) {
                best_gain = gain;
                bi = i;
                bj = j;
            }
        }
    }
    Control u = Control::Zero(n);
    if (bi < 0) return u;

    // w = m_i u_i = -m_j u_j with w (r_i - r_j) < 0
    const double w_abs = a * m[bi] * m[bj] / (m[bi] + m[bj]);
    const double w = ratio[bi] > ratio[bj] ? -w_abs : w_abs;
    u[bi] = w / m[bi];
    u[bj] = -w / m[bj];
    return u;
}

Control steepest_descent(const SystemState& state, const Eigen::Ref<const Point>& target, const ControlSet& set) {
    set.validate();
    const auto n = state.m.size();
    const Point xbar = barycenter(state);
    const Point offset = xbar - target;
    if (offset.squaredNorm() == 0.0) return Control::Zero(n);

    if (set.mass_conserving) {
        const Eigen::VectorXd c = cost_vector(state, target, CostForm::conserving);
        return set.norm == ControlSet::Norm::linf ? solve_box_hyperplane(c, state.m, set.bound)
                                                  : solve_diamond_hyperplane(c, state.m, set.bound);
    }

    const Eigen::VectorXd inner = (state.x.rowwise() - xbar.transpose()) * offset;
    Control u = Control::Zero(n);
    if (set.norm == ControlSet::Norm::linf) {
        const double spread = (state.x.rowwise() - xbar.transpose()).rowwise().norm().maxCoeff();
        const double zero_tol = 1e-12 * offset.norm() * spread;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(inner[i]) <= zero_tol) continue;
            u[i] = inner[i] > 0.0 ? -set.bound : set.bound;
        }
        return u;
    }

    const Eigen::VectorXd score = state.m.cwiseProduct(inner).cwiseAbs();
    const double top = score.maxCoeff();
    if (!(top > 0.0)) return u;
    std::vector<Eigen::Index> argmax;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (score[i] >= top * (1.0 - 1e-12)) argmax.push_back(i);
    }
    const double share = set.bound / static_cast<double>(argmax.size());
    for (const Eigen::Index i : argmax) u[i] = inner[i] > 0.0 ? -share : share;
    return u;
}

ConstructiveControl constructive_theorem1(const SystemState& state, const Eigen::Ref<const Point>& target,
                                          double alpha, bool clamp) {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    const auto n = state.m.size();
    ConstructiveControl out{Control::Zero(n)};
    const Eigen::VectorXd score = cost_vector(state, target, CostForm::conserving);
    if ((barycenter(state) - target).squaredNorm() == 0.0) return out;

    Eigen::Index lo = 0;
    Eigen::Index hi = 0;
    for (Eigen::Index i = 1; i < n; ++i) {
        if (score[i] < score[lo]) lo = i;
        if (score[i] > score[hi]) hi = i;
    }
    if (lo == hi) return out;

    out.u[lo] = alpha * state.m[hi] / state.m[lo];
    out.u[hi] = -alpha;
    out.would_clamp = state.m[hi] > state.m[lo];
    if (clamp && out.would_clamp) {
        const double scale = state.m[lo] / state.m[hi];
        out.u[lo] *= scale;
        out.u[hi] *= scale;
        out.clamped = true;
    }
    return out;
}

OpenLoopPlan open_loop_theorem2(const Positions& x0, const Weights& m0, const Eigen::Ref<const Point>& target,
                                double alpha, double alpha_tilde, double tau_min) {
    if (!(alpha_tilde > 0.0) || !(alpha > alpha_tilde)) {
        throw std::invalid_argument("open-loop control needs alpha > alpha_tilde > 0");
    }
    if (m0.size() != x0.rows()) throw std::invalid_argument("weights and positions disagree on N");

    constexpr double kMinHorizon = 1e-6;
    OpenLoopPlan plan;
    plan.tau = barycentric_coords(x0, target, tau_min).tau;
    const Eigen::VectorXd log_ratio = (m0.array() / plan.tau.array()).log().matrix();
    plan.r_min = log_ratio.minCoeff();
    plan.r_max = log_ratio.maxCoeff();
    plan.horizon = std::max((plan.r_max - plan.r_min) / (alpha - alpha_tilde), kMinHorizon);
    plan.kappa = std::exp(plan.r_min - alpha_tilde * plan.horizon);
    plan.u = -(m0.array() / (plan.kappa * plan.tau.array())).log().matrix() / plan.horizon;

    constexpr double kSlack = 1e-10;
    if ((plan.u.array() < -alpha - kSlack).any() || (plan.u.array() > -alpha_tilde + kSlack).any()) {
        throw InternalConsistencyError("open-loop control violates [-alpha, -alpha_tilde]");
    }
    return plan;
}

int active_components(const Eigen::Ref<const Control>& u, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (u.size() == 0) return 0;
    const double threshold = tol * std::max(1.0, u.cwiseAbs().maxCoeff());
    return static_cast<int>((u.array().abs() > threshold).count());
}

double objective_dxdt(const SystemState& state, const Eigen::Ref<const Point>& target,
                      const Eigen::Ref<const Eigen::VectorXd>& rates) {
    const Eigen::VectorXd c = cost_vector(state, target, CostForm::free);
    return 2.0 * c.dot(rates) / state.m.sum();
}

// ---------------------------------------------------------------------------
// ControlLaw

bool ControlLaw::mass_conserving() const {
    if (std::holds_alternative<ZeroLaw>(kind) || std::holds_alternative<ConstructiveLaw>(kind)) return true;
    if (const auto* sd = std::get_if<SteepestDescentLaw>(&kind)) return sd->set.mass_conserving;
    return false;
}

double ControlLaw::horizon() const {
    if (const auto* ol = std::get_if<OpenLoopLaw>(&kind)) return ol->horizon;
    return std::numeric_limits<double>::infinity();
}

std::string ControlLaw::describe() const {
    std::ostringstream os;
    std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, ZeroLaw>) {
                os << "zero";
            } else if constexpr (std::is_same_v<T, SteepestDescentLaw>) {
                os << "steepest_descent(" << (k.set.norm == ControlSet::Norm::linf ? "linf" : "l1") << ", "
                   << k.set.bound << ", " << (k.set.mass_conserving ? "mass_conserving" : "free") << ")";
            } else if constexpr (std::is_same_v<T, ConstructiveLaw>) {
                os << "constructive(alpha=" << k.alpha << ", clamp=" << (k.clamp ? "true" : "false") << ")";
            } else {
                os << "open_loop(T=" << k.horizon << ")";
            }
        },
        kind);
    return os.str();
}

void ControlLaw::validate(std::size_t n, std::size_t d) const {
    if (static_cast<std::size_t>(target.size()) != d) throw std::invalid_argument("target dimension mismatch");
    if (!target.allFinite()) throw NonFiniteError();
    if (const auto* ol = std::get_if<OpenLoopLaw>(&kind)) {
        if (!(ol->horizon > 0.0)) throw std::invalid_argument("open-loop horizon must be positive");
        if (static_cast<std::size_t>(ol->u.size()) != n) throw std::invalid_argument("open-loop control length mismatch");
    }
    if (const auto* sd = std::get_if<SteepestDescentLaw>(&kind)) sd->set.validate();
    if (const auto* cl = std::get_if<ConstructiveLaw>(&kind)) {
        if (!(cl->alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    }
}

ControlOutput evaluate(const ControlLaw& law, const SystemState& state) {
    const auto n = state.m.size();
    return std::visit(
        [&](const auto& k) -> ControlOutput {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, ZeroLaw>) {
                return {Control::Zero(n)};
            } else if constexpr (std::is_same_v<T, SteepestDescentLaw>) {
                return {steepest_descent(state, law.target, k.set)};
            } else if constexpr (std::is_same_v<T, ConstructiveLaw>) {
                auto c = constructive_theorem1(state, law.target, k.alpha, k.clamp);
                return {std::move(c.u), c.clamped, c.would_clamp};
            } else {
                const bool active = state.t < k.horizon * (1.0 - 1e-12);
                return {active ? k.u : Control::Zero(n)};
            }
        },
        law.kind);
}

} // namespace opinionctl
