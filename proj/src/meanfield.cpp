#include "opinionctl/meanfield.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace opinionctl {

EmpiricalMeasure from_state(const SystemState& state) {
    return {state.x, state.m / state.total_mass};
}

Point velocity_field(const EmpiricalMeasure& mu, const InteractionKernel& kernel, const Eigen::Ref<const Point>& q) {
    if (q.size() != mu.atoms.cols()) throw std::invalid_argument("query dimension mismatch");
    return interaction_velocity(mu.atoms, mu.weights, kernel, q);
}

EmpiricalMeasure source_atoms(const EmpiricalMeasure& mu, const PairwiseFn& s) {
    EmpiricalMeasure out{mu.atoms, Eigen::VectorXd::Zero(mu.weights.size())};
    for (Eigen::Index i = 0; i < mu.atoms.rows(); ++i) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < mu.atoms.rows(); ++j) {
            acc += mu.weights[j] * s(mu.atoms.row(i).transpose(), mu.atoms.row(j).transpose());
        }
        out.weights[i] = mu.weights[i] * acc;
    }
    return out;
}

double TestFunction::value(const Eigen::Ref<const Point>& x) const {
    switch (kind) {
    case Kind::coordinate:
        return x[axis];
    case Kind::quadratic:
        return (x - center).squaredNorm();
    case Kind::gaussian_bump:
        return std::exp(-(x - center).squaredNorm() / (width * width));
    }
    return 0.0;
}

Point TestFunction::gradient(const Eigen::Ref<const Point>& x) const {
    switch (kind) {
    case Kind::coordinate: {
        Point g = Point::Zero(x.size());
        g[axis] = 1.0;
        return g;
    }
    case Kind::quadratic:
        return 2.0 * (x - center);
    case Kind::gaussian_bump:
        return (-2.0 / (width * width)) * value(x) * (x - center);
    }
    return Point::Zero(x.size());
}

namespace {

double integrate(const EmpiricalMeasure& mu, const TestFunction& f) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < mu.atoms.rows(); ++i) acc += mu.weights[i] * f.value(mu.atoms.row(i).transpose());
    return acc;
}

// h[mu] for the configured weight dynamics: the pairwise form goes through
// source_atoms; other variants reduce to atoms weighted w_i psi_i.
EmpiricalMeasure source_measure(const SystemState& state, const EmpiricalMeasure& mu, const MassDynamics& psi) {
    if (const auto* p = std::get_if<MassDynamics::Pairwise>(&psi.variant())) return source_atoms(mu, p->s);
    return {mu.atoms, mu.weights.cwiseProduct(eval_psi(state, psi))};
}

} // namespace

double weak_form_residual(const Trajectory& traj, const TestFunction& f, double t, double dt_fd) {
    if (!(dt_fd > 0.0)) throw std::invalid_argument("dt_fd must be positive");
    const std::size_t lo = traj.find_time(t - dt_fd);
    const std::size_t mid = traj.find_time(t);
    const std::size_t hi = traj.find_time(t + dt_fd);
    if (lo == Trajectory::npos || mid == Trajectory::npos || hi == Trajectory::npos) {
        throw std::out_of_range("t +- dt_fd must be sample times inside the trajectory");
    }

    const Control& u = traj.samples[lo].u;
    for (std::size_t k = lo; k < hi; ++k) {
        if (traj.samples[k].u != u) throw std::invalid_argument("control not constant over the finite-difference window");
    }
    const bool controlled = u.cwiseAbs().maxCoeff() > 0.0;
    if (controlled && traj.config.conserving_flux_hold && traj.law.mass_conserving()) {
        throw std::invalid_argument("controlled weak form supports rate-held controls only");
    }

    const double f_lo = integrate(from_state(traj.state_at(lo)), f);
    const double f_hi = integrate(from_state(traj.state_at(hi)), f);
    const double time_derivative = (f_hi - f_lo) / (traj.samples[hi].t - traj.samples[lo].t);

    const SystemState state = traj.state_at(mid);
    const EmpiricalMeasure mu = from_state(state);
    double transport = 0.0;
    for (Eigen::Index i = 0; i < mu.atoms.rows(); ++i) {
        const Point xi = mu.atoms.row(i).transpose();
        transport += mu.weights[i] * f.gradient(xi).dot(velocity_field(mu, traj.kernel, xi));
    }
    const double source = integrate(source_measure(state, mu, traj.psi), f);
    const double control = controlled ? integrate({mu.atoms, mu.weights.cwiseProduct(u)}, f) : 0.0;

    return std::abs(time_derivative - transport - source - control);
}

SystemState merge_coincident(const SystemState& state, double pos_tol) {
    if (!(pos_tol >= 0.0)) throw std::invalid_argument("pos_tol must be nonnegative");
    const auto n = state.x.rows();
    std::vector<Eigen::Index> keep;
    std::vector<double> mass;
    for (Eigen::Index i = 0; i < n; ++i) {
        bool merged = false;
        for (std::size_t k = 0; k < keep.size(); ++k) {
            if ((state.x.row(i) - state.x.row(keep[k])).norm() <= pos_tol) {
                mass[k] += state.m[i];
                merged = true;
                break;
            }
        }
        if (!merged) {
            keep.push_back(i);
            mass.push_back(state.m[i]);
        }
    }
    SystemState out;
    out.t = state.t;
    out.total_mass = state.total_mass;
    out.x.resize(static_cast<Eigen::Index>(keep.size()), state.x.cols());
    out.m.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        out.x.row(static_cast<Eigen::Index>(k)) = state.x.row(keep[k]);
        out.m[static_cast<Eigen::Index>(k)] = mass[k];
    }
    return out;
}

double kinetic_variance(const EmpiricalMeasure& mu, const Eigen::Ref<const Point>& target) {
    const Point moment = (mu.atoms.rowwise() - target.transpose()).transpose() * mu.weights;
    return moment.squaredNorm();
}

} // namespace opinionctl
