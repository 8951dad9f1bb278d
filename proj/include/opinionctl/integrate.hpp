#pragma once

#include "opinionctl/control.hpp"
#include "opinionctl/model.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace opinionctl {

enum class MassMode {
    joint_rk4,                    ///< (x, m) advanced together by classical RK4
    exact_exponential_splitting,  ///< m_i *= exp((psi_i + u_i) h) with psi frozen, then RK4 on x with m frozen
};

struct IntegratorConfig {
    double h = 1e-3;
    double t_end = 1.0;
    double stop_eps = 0.0;     ///< stop once |xbar - x*| <= stop_eps; 0 disables
    double mass_floor = 1e-12;
    MassMode mass_mode = MassMode::joint_rk4;
    /// For mass-conserving laws, hold the flux m_i(t_k) u_i over the step instead of
    /// the rate u_i, so sum m_i stays constant inside the step as well.
    bool conserving_flux_hold = true;

    void validate() const;
};

/// Error raised by a simulation step, tagged with the step index and time.
class SimulationError : public std::runtime_error {
public:
    SimulationError(std::size_t step, double t, const std::string& what);
    std::size_t step() const { return step_; }
    double time() const { return t_; }

private:
    std::size_t step_;
    double t_;
};

/// The control held across one step.
struct HeldControl {
    Control u;
    bool flux = false;  ///< hold v = m(t_k) * u rather than u
};

/**
 * Advances the state by `dt` with the control held constant.
 * Throws "weight collapsed" if any weight ends at or below the mass floor.
 */
SystemState advance(const SystemState& state, const HeldControl& held, const MassDynamics& psi,
                    const InteractionKernel& kernel, const IntegratorConfig& config, double dt);

/// One sample-and-hold step of size config.h: the law is evaluated once at the start.
SystemState step(const SystemState& state, const ControlLaw& law, const MassDynamics& psi,
                 const InteractionKernel& kernel, const IntegratorConfig& config);

struct Sample {
    double t;
    Positions x;
    Weights m;
    Control u;              ///< control held from this sample to the next
    Point bary;
    double dist_target;
    double diameter;
    double total_mass;
    int active_count;
    double objective_dxdt;  ///< dX/dt at this sample under psi + u
    bool clamped;
    bool would_clamp;
};

struct Trajectory {
    std::vector<Sample> samples;
    IntegratorConfig config;
    ControlLaw law;
    InteractionKernel kernel;  ///< cached on the initial diameter
    MassDynamics psi;
    double total_mass = 0.0;
    std::uint64_t seed = 0;

    const Sample& front() const { return samples.front(); }
    const Sample& back() const { return samples.back(); }
    std::size_t size() const { return samples.size(); }
    SystemState state_at(std::size_t i) const;
    /// Index of the sample at time t (within 1e-9 h), or npos.
    std::size_t find_time(double t) const;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// Active-component threshold used when recording samples.
inline constexpr double kActiveTol = 1e-9;

/**
 * Integrates until t_end or until |xbar - x*| <= stop_eps, recording every
 * step. Open-loop laws get a step boundary exactly at their horizon and emit
 * zero afterwards.
 */
Trajectory simulate(const Positions& x0, const Weights& m0, const ControlLaw& law, const MassDynamics& psi,
                    const InteractionKernel& kernel, const IntegratorConfig& config, std::uint64_t seed = 0);

} // namespace opinionctl
