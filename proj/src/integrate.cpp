#include "opinionctl/integrate.hpp"

#include <cmath>
#include <sstream>

namespace opinionctl {

void IntegratorConfig::validate() const {
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("integrator.h must be positive");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("integrator.t_end must be positive");
    if (!(stop_eps >= 0.0)) throw std::invalid_argument("integrator.stop_eps must be nonnegative");
    if (!(mass_floor > 0.0)) throw std::invalid_argument("integrator.mass_floor must be positive");
}

namespace {

std::string with_context(std::size_t step, double t, const std::string& what) {
    std::ostringstream os;
    os.precision(17);
    os << "step " << step << " (t=" << t << "): " << what;
    return os.str();
}

struct Derivative {
    Positions dx;
    Eigen::VectorXd dm;
};

} // namespace

SimulationError::SimulationError(std::size_t step, double t, const std::string& what)
    : std::runtime_error(with_context(step, t, what)), step_(step), t_(t) {}

SystemState advance(const SystemState& state, const HeldControl& held, const MassDynamics& psi,
                    const InteractionKernel& kernel, const IntegratorConfig& config, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step size must be positive");
    if (held.u.size() != state.m.size()) throw std::invalid_argument("control length must equal the number of agents");

    const Eigen::VectorXd flux = held.flux ? Eigen::VectorXd(state.m.cwiseProduct(held.u)) : Eigen::VectorXd();
    SystemState next = state;

    if (config.mass_mode == MassMode::joint_rk4) {
        auto f = [&](const SystemState& s) {
            Derivative d{rhs_positions(s, kernel), {}};
            if (held.flux) {
                d.dm = psi.is_zero() ? flux : Eigen::VectorXd(s.m.cwiseProduct(eval_psi(s, psi)) + flux);
            } else {
                d.dm = rhs_masses(s, psi, held.u);
            }
            return d;
        };
        auto shifted = [&](const Derivative& d, double scale) {
            SystemState s = state;
            s.x += scale * d.dx;
            s.m += scale * d.dm;
            return s;
        };
        const Derivative k1 = f(state);
        const Derivative k2 = f(shifted(k1, 0.5 * dt));
        const Derivative k3 = f(shifted(k2, 0.5 * dt));
        const Derivative k4 = f(shifted(k3, dt));
        next.x += (dt / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
        next.m += (dt / 6.0) * (k1.dm + 2.0 * k2.dm + 2.0 * k3.dm + k4.dm);
    } else {
        const Eigen::VectorXd psi0 = eval_psi(state, psi);
        if (held.flux) {
            next.m = state.m.cwiseProduct((psi0 * dt).array().exp().matrix()) + dt * flux;
        } else {
            next.m = state.m.cwiseProduct(((psi0 + held.u) * dt).array().exp().matrix());
        }
        // positions with weights frozen at the step start
        auto f = [&](const Positions& x) {
            SystemState s = state;
            s.x = x;
            return rhs_positions(s, kernel);
        };
        const Positions k1 = f(state.x);
        const Positions k2 = f(state.x + 0.5 * dt * k1);
        const Positions k3 = f(state.x + 0.5 * dt * k2);
        const Positions k4 = f(state.x + dt * k3);
        next.x = state.x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    next.t = state.t + dt;

    if (!next.x.allFinite() || !next.m.allFinite()) throw NonFiniteError();
    if ((next.m.array() <= config.mass_floor).any()) throw std::runtime_error("weight collapsed");
    return next;
}

SystemState step(const SystemState& state, const ControlLaw& law, const MassDynamics& psi,
                 const InteractionKernel& kernel, const IntegratorConfig& config) {
    config.validate();
    const ControlOutput out = evaluate(law, state);
    const HeldControl held{out.u, config.conserving_flux_hold && law.mass_conserving()};
    return advance(state, held, psi, kernel, config, config.h);
}

SystemState Trajectory::state_at(std::size_t i) const {
    const Sample& s = samples.at(i);
    SystemState st;
    st.t = s.t;
    st.x = s.x;
    st.m = s.m;
    st.total_mass = total_mass;
    return st;
}

std::size_t Trajectory::find_time(double t) const {
    const double tol = 1e-9 * config.h;
    std::size_t lo = 0;
    std::size_t hi = samples.size();
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (samples[mid].t < t - tol) lo = mid + 1;
        else hi = mid;
    }
    if (lo < samples.size() && std::abs(samples[lo].t - t) <= tol) return lo;
    return npos;
}

namespace {

Sample make_sample(const SystemState& state, const ControlOutput& out, const ControlLaw& law,
                   const MassDynamics& psi) {
    Sample s;
    s.t = state.t;
    s.x = state.x;
    s.m = state.m;
    s.u = out.u;
    s.bary = barycenter(state);
    s.dist_target = (s.bary - law.target).norm();
    s.diameter = diameter(state.x);
    s.total_mass = state.m.sum();
    s.active_count = active_components(out.u, kActiveTol);
    s.objective_dxdt = objective_dxdt(state, law.target, eval_psi(state, psi) + out.u);
    s.clamped = out.clamped;
    s.would_clamp = out.would_clamp;
    return s;
}

} // namespace

Trajectory simulate(const Positions& x0, const Weights& m0, const ControlLaw& law, const MassDynamics& psi,
                    const InteractionKernel& kernel, const IntegratorConfig& config, std::uint64_t seed) {
    config.validate();
    SystemState state = SystemState::initial(x0, m0);
    law.validate(state.agents(), state.dim());

    Trajectory traj;
    traj.config = config;
    traj.law = law;
    traj.kernel = kernel;
    traj.kernel.cache(diameter(x0));
    traj.psi = psi;
    traj.total_mass = state.total_mass;
    traj.seed = seed;

    const double horizon = law.horizon();
    const double t_tol = 1e-12 * std::max(1.0, config.t_end);
    const bool flux_hold = config.conserving_flux_hold && law.mass_conserving();
    std::size_t k = 0;
    for (;;) {
        ControlOutput out;
        try {
            out = evaluate(law, state);
            traj.samples.push_back(make_sample(state, out, law, psi));
        } catch (const std::exception& e) {
            throw SimulationError(k, state.t, e.what());
        }
        const Sample& last = traj.samples.back();
        if (config.stop_eps > 0.0 && last.dist_target <= config.stop_eps) break;
        if (state.t >= config.t_end - t_tol) break;

        double dt = std::min(config.h, config.t_end - state.t);
        if (horizon > state.t + t_tol && horizon < state.t + dt - t_tol) dt = horizon - state.t;
        try {
            state = advance(state, HeldControl{out.u, flux_hold}, psi, kernel, config, dt);
        } catch (const std::exception& e) {
            throw SimulationError(k, state.t, e.what());
        }
        // keep the time stamps on the h grid when the step lands on it
        const double grid = std::round(state.t / config.h) * config.h;
        if (std::abs(state.t - grid) <= 1e-9 * config.h) state.t = grid;
        ++k;
    }
    return traj;
}

} // namespace opinionctl
