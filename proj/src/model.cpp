#include "opinionctl/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace opinionctl {

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& a) {
    return a.allFinite();
}

SystemState SystemState::initial(Positions x0, Weights m0) {
    SystemState s;
    s.t = 0.0;
    s.x = std::move(x0);
    s.m = std::move(m0);
    s.total_mass = s.m.sum();
    s.validate();
    return s;
}

void SystemState::validate() const {
    if (x.rows() < 1 || x.cols() < 1) {
        throw std::invalid_argument("state needs N >= 1 agents and dimension d >= 1");
    }
    if (m.size() != x.rows()) {
        throw std::invalid_argument("weights and positions disagree on N");
    }
    if (!x.allFinite() || !m.allFinite() || !std::isfinite(t) || !std::isfinite(total_mass)) {
        throw NonFiniteError();
    }
    if ((m.array() <= 0.0).any()) {
        throw std::invalid_argument("weights must be positive");
    }
    if (total_mass <= 0.0) {
        throw std::invalid_argument("reference total mass must be positive");
    }
}

// ---------------------------------------------------------------------------
// InteractionKernel

InteractionKernel InteractionKernel::gaussian() {
    InteractionKernel k;
    k.kind_ = Kind::gaussian;
    return k;
}

InteractionKernel InteractionKernel::constant(double value) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw std::invalid_argument("constant kernel value must be finite and nonnegative");
    }
    InteractionKernel k;
    k.kind_ = Kind::constant;
    k.constant_ = value;
    return k;
}

InteractionKernel InteractionKernel::tabulated(std::vector<double> s, std::vector<double> a) {
    if (s.size() != a.size() || s.size() < 2) {
        throw std::invalid_argument("tabulated kernel needs at least two (s, a) samples of equal length");
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!std::isfinite(s[i]) || !std::isfinite(a[i]) || a[i] < 0.0) {
            throw std::invalid_argument("tabulated kernel values must be finite and a >= 0");
        }
        if (i > 0 && !(s[i] > s[i - 1])) {
            throw std::invalid_argument("tabulated kernel abscissae must be strictly increasing");
        }
    }
    if (s.front() > 0.0) {
        throw std::invalid_argument("tabulated kernel must start at s <= 0");
    }
    InteractionKernel k;
    k.kind_ = Kind::tabulated;
    k.table_s_ = std::move(s);
    k.table_a_ = std::move(a);
    return k;
}

double InteractionKernel::operator()(double s) const {
    switch (kind_) {
    case Kind::gaussian:
        return std::exp(-s * s);
    case Kind::constant:
        return constant_;
    case Kind::tabulated: {
        if (s <= table_s_.front()) return table_a_.front();
        if (s >= table_s_.back()) return table_a_.back();
        const auto it = std::upper_bound(table_s_.begin(), table_s_.end(), s);
        const auto hi = static_cast<std::size_t>(it - table_s_.begin());
        const auto lo = hi - 1;
        const double frac = (s - table_s_[lo]) / (table_s_[hi] - table_s_[lo]);
        return table_a_[lo] + frac * (table_a_[hi] - table_a_[lo]);
    }
    }
    return 0.0;
}

void InteractionKernel::cache(double d0) {
    delta_ = compute_delta(*this, d0);
    a_min_ = compute_a_min(*this, d0);
    cached_d0_ = d0;
}

double InteractionKernel::delta() const {
    if (!has_cache()) throw std::logic_error("kernel cache not initialised");
    return delta_;
}

double InteractionKernel::a_min() const {
    if (!has_cache()) throw std::logic_error("kernel cache not initialised");
    return a_min_;
}

namespace {

constexpr std::size_t kGridIntervals = 10000;

// Maximises g over [0, d0]: grid scan, then golden-section search on the
// two grid cells around the best sample.
template <typename G>
double grid_golden_max(G g, double d0) {
    if (d0 < 0.0 || !std::isfinite(d0)) {
        throw std::invalid_argument("D0 must be finite and nonnegative");
    }
    if (d0 == 0.0) return g(0.0);

    const double step = d0 / static_cast<double>(kGridIntervals);
    std::size_t best_k = 0;
    double best = g(0.0);
    for (std::size_t k = 1; k <= kGridIntervals; ++k) {
        const double v = g(static_cast<double>(k) * step);
        if (v > best) {
            best = v;
            best_k = k;
        }
    }

    double lo = best_k == 0 ? 0.0 : static_cast<double>(best_k - 1) * step;
    double hi = best_k == kGridIntervals ? d0 : static_cast<double>(best_k + 1) * step;
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - inv_phi * (hi - lo);
    double d = lo + inv_phi * (hi - lo);
    double gc = g(c);
    double gd = g(d);
    for (int it = 0; it < 200 && (hi - lo) > 1e-14 * (1.0 + d0); ++it) {
        if (gc > gd) {
            hi = d;
            d = c;
            gd = gc;
            c = hi - inv_phi * (hi - lo);
            gc = g(c);
        } else {
            lo = c;
            c = d;
            gc = gd;
            d = lo + inv_phi * (hi - lo);
            gd = g(d);
        }
    }
    return std::max({best, gc, gd, g(0.5 * (lo + hi))});
}

} // namespace

double compute_delta(const InteractionKernel& kernel, double d0) {
    return grid_golden_max([&](double s) { return s * kernel(s); }, d0);
}

double compute_a_min(const InteractionKernel& kernel, double d0) {
    return -grid_golden_max([&](double s) { return -kernel(s); }, d0);
}

// ---------------------------------------------------------------------------
// MassDynamics

MassDynamics MassDynamics::zero() {
    return MassDynamics(Zero{}, "zero");
}

MassDynamics MassDynamics::uniform_decay(double rate) {
    if (!std::isfinite(rate)) throw std::invalid_argument("decay rate must be finite");
    return MassDynamics(UniformDecay{rate}, "uniform_decay");
}

MassDynamics MassDynamics::pairwise(PairwiseFn s, bool skew_symmetric, std::string name) {
    if (!s) throw std::invalid_argument("pairwise mass dynamics needs a function S");
    return MassDynamics(Pairwise{std::move(s), skew_symmetric}, std::move(name));
}

MassDynamics MassDynamics::pairwise_linear(Point w) {
    return pairwise(
        [w = std::move(w)](const Eigen::Ref<const Point>& x, const Eigen::Ref<const Point>& y) {
            if (w.size() != x.size()) throw std::invalid_argument("pairwise_linear: dimension mismatch");
            return w.dot(y - x);
        },
        true, "pairwise_linear");
}

MassDynamics MassDynamics::triple(TripleFn s3, bool mass_conserving, std::string name) {
    if (!s3) throw std::invalid_argument("triple mass dynamics needs a function S3");
    return MassDynamics(Triple{std::move(s3), mass_conserving}, std::move(name));
}

MassDynamics MassDynamics::model2(InteractionKernel kernel, double total_mass) {
    if (!(total_mass > 0.0)) throw std::invalid_argument("model2 needs a positive total mass");
    return triple(
        [kernel = std::move(kernel), total_mass](const Eigen::Ref<const Point>& xi,
                                                 const Eigen::Ref<const Point>& xj,
                                                 const Eigen::Ref<const Point>& xk) {
            const double rij = (xi - xj).norm();
            const double rjk = (xj - xk).norm();
            return (kernel(rij) * rij - kernel(rjk) * rjk) / total_mass;
        },
        true, "model2");
}

bool MassDynamics::conserves_mass() const {
    if (std::holds_alternative<Zero>(variant_)) return true;
    if (const auto* p = std::get_if<Pairwise>(&variant_)) return p->skew_symmetric;
    if (const auto* t = std::get_if<Triple>(&variant_)) return t->mass_conserving;
    return false;
}

// ---------------------------------------------------------------------------
// Right-hand sides

Point interaction_velocity(const Positions& y, const Eigen::Ref<const Eigen::VectorXd>& w,
                           const InteractionKernel& kernel, const Eigen::Ref<const Point>& q) {
    Point v = Point::Zero(q.size());
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
        const Point diff = y.row(j).transpose() - q;
        v += (w[j] * kernel(diff.norm())) * diff;
    }
    return v;
}

Positions rhs_positions(const SystemState& state, const InteractionKernel& kernel) {
    if (!state.x.allFinite() || !state.m.allFinite()) throw NonFiniteError();
    const Eigen::VectorXd w = state.m / state.total_mass;
    Positions v(state.x.rows(), state.x.cols());
    for (Eigen::Index i = 0; i < state.x.rows(); ++i) {
        v.row(i) = interaction_velocity(state.x, w, kernel, state.x.row(i).transpose()).transpose();
    }
    return v;
}

Eigen::VectorXd eval_psi(const SystemState& state, const MassDynamics& psi) {
    const auto n = state.x.rows();
    const double big_m = state.total_mass;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);

    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, MassDynamics::UniformDecay>) {
                out.setConstant(-v.rate);
            } else if constexpr (std::is_same_v<T, MassDynamics::Pairwise>) {
                for (Eigen::Index i = 0; i < n; ++i) {
                    double acc = 0.0;
                    for (Eigen::Index j = 0; j < n; ++j) {
                        acc += state.m[j] * v.s(state.x.row(i).transpose(), state.x.row(j).transpose());
                    }
                    out[i] = acc / big_m;
                }
            } else if constexpr (std::is_same_v<T, MassDynamics::Triple>) {
                for (Eigen::Index i = 0; i < n; ++i) {
                    double acc = 0.0;
                    for (Eigen::Index j = 0; j < n; ++j) {
                        for (Eigen::Index k = 0; k < n; ++k) {
                            acc += state.m[j] * state.m[k] *
                                   v.s3(state.x.row(i).transpose(), state.x.row(j).transpose(),
                                        state.x.row(k).transpose());
                        }
                    }
                    out[i] = acc / big_m;
                }
            }
        },
        psi.variant());

    if (!out.allFinite()) throw NonFiniteError();
    return out;
}

Eigen::VectorXd rhs_masses(const SystemState& state, const MassDynamics& psi,
                           const Eigen::Ref<const Eigen::VectorXd>& u) {
    if (u.size() != state.m.size()) {
        throw std::invalid_argument("control length must equal the number of agents");
    }
    if (!u.allFinite() || !state.m.allFinite()) throw NonFiniteError();
    return state.m.cwiseProduct(eval_psi(state, psi) + u);
}

double diameter(const Positions& x) {
    double d = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < x.rows(); ++j) {
            d = std::max(d, (x.row(i) - x.row(j)).norm());
        }
    }
    return d;
}

} // namespace opinionctl
