// Randomised invariants over hand-rolled generators (fixed seeds, reproducible).
#include "opinionctl/integrate.hpp"
#include "opinionctl/meanfield.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace opinionctl;
using namespace testsupport;

namespace {

struct Case {
    Positions x;
    Weights m;
    Point target;
};

// Agents in a box, target drawn as a strictly positive convex combination.
Case random_case(SplitMix64& rng, int n, int d) {
    Case c{random_positions(rng, n, d), random_weights(rng, n), {}};
    c.target = c.x.transpose() * random_simplex(rng, n);
    return c;
}

IntegratorConfig config(double h, double t_end) {
    IntegratorConfig c;
    c.h = h;
    c.t_end = t_end;
    return c;
}

} // namespace

TEST_CASE("property: barycentric coordinates reproduce interior targets") {
    SplitMix64 rng(1001);
    int solved = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const int d = 1 + static_cast<int>(rng.next() % 3);
        const int n = d + 2 + static_cast<int>(rng.next() % 5);
        const Case c = random_case(rng, n, d);
        try {
            const auto b = barycentric_coords(c.x, c.target, 0.0);
            CHECK(std::abs(b.tau.sum() - 1.0) < 1e-12);
            CHECK(b.tau.minCoeff() >= 0.0);
            CHECK((c.x.transpose() * b.tau - c.target).norm() <= 1e-8 * (1 + c.target.norm()));
            ++solved;
        } catch (const BarycentricError& e) {
            FAIL("interior target rejected: " << e.what());
        }
    }
    CHECK(solved == 100);
}

TEST_CASE("property: convex combinations are never outside the hull") {
    SplitMix64 rng(1002);
    for (int rep = 0; rep < 200; ++rep) {
        const int d = 2 + static_cast<int>(rng.next() % 3);
        const Case c = random_case(rng, 3 + static_cast<int>(rng.next() % 8), d);
        CHECK(hull_contains(c.x, c.target, 1e-7).where != Membership::outside);
    }
}

TEST_CASE("property: steepest-descent controls lie in their sets and decrease X") {
    SplitMix64 rng(1003);
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 2 + static_cast<int>(rng.next() % 9);
        const Case c = random_case(rng, n, 2);
        const auto s = SystemState::initial(c.x, c.m);
        for (const auto& set : {ControlSet::linf(2, true), ControlSet::linf(2, false), ControlSet::l1(10, true),
                                ControlSet::l1(10, false)}) {
            const auto u = steepest_descent(s, c.target, set);
            CHECK(set.contains(u, s.m, 1e-12, 1e-10));
            CHECK(objective_dxdt(s, c.target, u) <= 1e-14);
        }
    }
}

TEST_CASE("property: mass-conserving runs keep mass and shrink the hull") {
    SplitMix64 rng(1004);
    for (int rep = 0; rep < 5; ++rep) {
        const Case c = random_case(rng, 6, 2);
        const double total = c.m.sum();
        const auto set = rep % 2 ? ControlSet::l1(10, true) : ControlSet::linf(2, true);
        const auto tr = simulate(c.x, c.m, ControlLaw::steepest(set, c.target), MassDynamics::zero(),
                                 InteractionKernel::gaussian(), config(1e-3, 0.5));
        for (std::size_t k = 0; k < tr.size(); ++k) {
            CHECK(std::abs(tr.samples[k].m.sum() - total) <= 1e-8 * total);
            if (k) CHECK(tr.samples[k].diameter <= tr.samples[k - 1].diameter + 1e-10);
        }
        for (Eigen::Index i = 0; i < 6; ++i) {
            CHECK(hull_contains(tr.front().x, tr.back().x.row(i).transpose(), 1e-7).where != Membership::outside);
        }
    }
}

TEST_CASE("property: uniform decay confines every agent") {
    SplitMix64 rng(1005);
    for (int rep = 0; rep < 5; ++rep) {
        const Case c = random_case(rng, 7, 2);
        const double rate = rng.uniform(1.0, 6.0);
        const auto k = InteractionKernel::gaussian();
        const auto tr = simulate(c.x, c.m, ControlLaw::zero(c.target), MassDynamics::uniform_decay(rate), k,
                                 config(1e-3, 1.5));
        const double delta = compute_delta(k, diameter(c.x));
        for (const auto& s : tr.samples) {
            const double radius = (delta / rate) * (1.0 - std::exp(-rate * s.t)) + 1e-6;
            CHECK((s.x - c.x).rowwise().norm().maxCoeff() <= radius);
        }
    }
}

TEST_CASE("property: weights stay positive under exponential splitting") {
    SplitMix64 rng(1006);
    const Case c = random_case(rng, 5, 2);
    auto cfg = config(0.05, 3.0);
    cfg.mass_mode = MassMode::exact_exponential_splitting;
    const auto tr = simulate(c.x, c.m, ControlLaw::steepest(ControlSet::l1(10, false), c.target), MassDynamics::zero(),
                             InteractionKernel::gaussian(), cfg);
    for (const auto& s : tr.samples) CHECK(s.m.minCoeff() > 0.0);
}

TEST_CASE("property: empirical velocity equals agent velocity along a run") {
    SplitMix64 rng(1007);
    const Case c = random_case(rng, 6, 3);
    const auto tr = simulate(c.x, c.m, ControlLaw::steepest(ControlSet::linf(2, false), c.target), MassDynamics::zero(),
                             InteractionKernel::gaussian(), config(1e-2, 0.5));
    for (std::size_t k = 0; k < tr.size(); k += 10) {
        const auto s = tr.state_at(k);
        const auto mu = from_state(s);
        const Positions v = rhs_positions(s, tr.kernel);
        for (Eigen::Index i = 0; i < 6; ++i) CHECK(velocity_field(mu, tr.kernel, s.x.row(i).transpose()) == v.row(i).transpose());
    }
}
