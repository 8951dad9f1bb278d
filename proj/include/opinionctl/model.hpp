#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace opinionctl {

/// Positions are stored one agent per row: an N x d matrix.
using Positions = Eigen::MatrixXd;
using Weights = Eigen::VectorXd;
using Point = Eigen::VectorXd;

/// Raised when an input or an intermediate result contains NaN or Inf.
class NonFiniteError : public std::runtime_error {
public:
    NonFiniteError() : std::runtime_error("non-finite state") {}
};

/**
 * Positions and influence weights of N agents at a time instant.
 *
 * `total_mass` is the reference mass M = sum of the initial weights. It
 * normalises the interaction sums and stays fixed along a trajectory even
 * when the control lets the current sum of weights drift.
 */
struct SystemState {
    double t = 0.0;
    Positions x;
    Weights m;
    double total_mass = 0.0;

    /// Builds a state at t = 0 with M = sum(m0). Throws on invalid input.
    static SystemState initial(Positions x0, Weights m0);

    std::size_t agents() const { return static_cast<std::size_t>(x.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(x.cols()); }

    /// Throws std::invalid_argument / NonFiniteError if an invariant is broken.
    void validate() const;
};

/// Interaction strength a(s) as a function of the distance s >= 0.
class InteractionKernel {
public:
    enum class Kind { gaussian, constant, tabulated };

    /// a(s) = exp(-s^2)
    static InteractionKernel gaussian();
    /// a(s) = value
    static InteractionKernel constant(double value);
    /// Piecewise-linear interpolation of (s, a) samples; clamped outside the table.
    static InteractionKernel tabulated(std::vector<double> s, std::vector<double> a);

    double operator()(double s) const;

    Kind kind() const { return kind_; }
    double constant_value() const { return constant_; }
    const std::vector<double>& table_s() const { return table_s_; }
    const std::vector<double>& table_a() const { return table_a_; }

    /// Caches delta = sup s*a(s) and a_min = inf a(s) over [0, d0].
    void cache(double d0);
    bool has_cache() const { return cached_d0_ >= 0.0; }
    double delta() const;
    double a_min() const;
    double cached_d0() const { return cached_d0_; }

private:
    Kind kind_ = Kind::gaussian;
    double constant_ = 1.0;
    std::vector<double> table_s_;
    std::vector<double> table_a_;
    double cached_d0_ = -1.0;
    double delta_ = 0.0;
    double a_min_ = 0.0;
};

/// sup_{s in [0, d0]} s * a(s). Uniform grid of 10^4 + 1 points refined by golden-section search.
double compute_delta(const InteractionKernel& kernel, double d0);

/// inf_{s in [0, d0]} a(s), same grid + golden-section procedure.
double compute_a_min(const InteractionKernel& kernel, double d0);

using PairwiseFn = std::function<double(const Eigen::Ref<const Point>&,
                                        const Eigen::Ref<const Point>&)>;
using TripleFn = std::function<double(const Eigen::Ref<const Point>&,
                                      const Eigen::Ref<const Point>&,
                                      const Eigen::Ref<const Point>&)>;

/**
 * Uncontrolled weight dynamics psi(x, m), one of four variants:
 *
 *  - zero:          psi_i = 0
 *  - uniform decay: psi_i = -rate
 *  - pairwise:      psi_i = (1/M) sum_j m_j S(x_i, x_j)
 *  - triple:        psi_i = (1/M) sum_j sum_k m_j m_k S3(x_i, x_j, x_k)
 *
 * The triple normalisation keeps a single 1/M outside the double sum; any
 * further scaling belongs to S3 (see `model2`).
 */
class MassDynamics {
public:
    struct Zero {};
    struct UniformDecay {
        double rate;
    };
    struct Pairwise {
        PairwiseFn s;
        bool skew_symmetric;
    };
    struct Triple {
        TripleFn s3;
        bool mass_conserving;
    };
    using Variant = std::variant<Zero, UniformDecay, Pairwise, Triple>;

    MassDynamics() = default;
    explicit MassDynamics(Variant v, std::string name = {})
        : variant_(std::move(v)), name_(std::move(name)) {}

    static MassDynamics zero();
    static MassDynamics uniform_decay(double rate);
    static MassDynamics pairwise(PairwiseFn s, bool skew_symmetric, std::string name = "pairwise");
    /// S(x, y) = <w, y - x>; skew-symmetric.
    static MassDynamics pairwise_linear(Point w);
    static MassDynamics triple(TripleFn s3, bool mass_conserving = false, std::string name = "triple");
    /// Mass-conserving triple-sum dynamics with
    /// S3(x_i, x_j, x_k) = (1/M)(a(|x_i-x_j|)|x_i-x_j| - a(|x_j-x_k|)|x_j-x_k|).
    static MassDynamics model2(InteractionKernel kernel, double total_mass);

    const Variant& variant() const { return variant_; }
    const std::string& name() const { return name_; }
    bool is_zero() const { return std::holds_alternative<Zero>(variant_); }
    /// True for variants with sum_i m_i psi_i = 0 identically (given sum m = M for triple).
    bool conserves_mass() const;

private:
    Variant variant_ = Zero{};
    std::string name_ = "zero";
};

/// Weighted interaction velocity sum_j w_j a(|q - y_j|)(y_j - q).
/// Shared by the ODE right-hand side and the mean-field velocity so both agree bit for bit.
Point interaction_velocity(const Positions& y, const Eigen::Ref<const Eigen::VectorXd>& w,
                           const InteractionKernel& kernel, const Eigen::Ref<const Point>& q);

/// xdot_i = (1/M) sum_j m_j a(|x_i - x_j|)(x_j - x_i)
Positions rhs_positions(const SystemState& state, const InteractionKernel& kernel);

Eigen::VectorXd eval_psi(const SystemState& state, const MassDynamics& psi);

/// mdot_i = m_i (psi_i + u_i)
Eigen::VectorXd rhs_masses(const SystemState& state, const MassDynamics& psi,
                           const Eigen::Ref<const Eigen::VectorXd>& u);

/// max_{i,j} |x_i - x_j|
double diameter(const Positions& x);
inline double diameter(const SystemState& state) { return diameter(state.x); }

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& a);

} // namespace opinionctl
