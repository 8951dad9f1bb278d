#include "opinionctl/meanfield.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace opinionctl;
using namespace testsupport;

namespace {

IntegratorConfig config(double h, double t_end) {
    IntegratorConfig c;
    c.h = h;
    c.t_end = t_end;
    return c;
}

Point line_point(double v) { return Point::Constant(1, v); }

} // namespace

TEST_CASE("empirical measure of a state") {
    Positions x(1, 2);
    x << 1, 2;
    CHECK(from_state(SystemState::initial(x, Weights::Constant(1, 4.0))).weights[0] == 1.0);
    Positions y(2, 1);
    y << 0, 1;
    const auto mu = from_state(SystemState::initial(y, Weights::Ones(2)));
    CHECK(mu.weights[0] == 0.5);
    CHECK(mu.weights[1] == 0.5);
    CHECK(mu.total() == 1.0);
}

TEST_CASE("velocity field") {
    SUBCASE("single atom at the query point") {
        EmpiricalMeasure mu{Positions::Constant(1, 2, 0.3), Eigen::VectorXd::Ones(1)};
        CHECK(velocity_field(mu, InteractionKernel::gaussian(), Point::Constant(2, 0.3)).norm() == 0.0);
    }
    SUBCASE("symmetric atoms") {
        Positions a(2, 1);
        a << 0, 2;
        EmpiricalMeasure mu{a, Eigen::VectorXd::Constant(2, 0.5)};
        CHECK(velocity_field(mu, InteractionKernel::constant(1.0), line_point(1.0)).norm() == 0.0);
    }
    SUBCASE("atoms reproduce the agent velocities bit for bit") {
        SplitMix64 rng(71);
        const auto s = SystemState::initial(random_positions(rng, 7, 3), random_weights(rng, 7));
        const auto mu = from_state(s);
        const Positions v = rhs_positions(s, InteractionKernel::gaussian());
        for (Eigen::Index i = 0; i < 7; ++i) {
            CHECK(velocity_field(mu, InteractionKernel::gaussian(), s.x.row(i).transpose()) == v.row(i).transpose());
        }
    }
}

TEST_CASE("source measure") {
    Positions a(2, 1);
    a << 0, 2;
    EmpiricalMeasure mu{a, Eigen::VectorXd::Constant(2, 0.5)};
    SUBCASE("linear skew-symmetric S") {
        const auto h = source_atoms(mu, [](const Eigen::Ref<const Point>& x, const Eigen::Ref<const Point>& y) {
            return (y - x)[0];
        });
        CHECK(h.weights[0] == doctest::Approx(0.5));
        CHECK(h.weights[1] == doctest::Approx(-0.5));
    }
    SUBCASE("zero S") {
        const auto h = source_atoms(mu, [](const Eigen::Ref<const Point>&, const Eigen::Ref<const Point>&) { return 0.0; });
        CHECK(h.weights.norm() == 0.0);
    }
    SUBCASE("skew-symmetric S is mass neutral") {
        SplitMix64 rng(73);
        EmpiricalMeasure r{random_positions(rng, 9, 2), random_simplex(rng, 9)};
        const auto h = source_atoms(r, [](const Eigen::Ref<const Point>& x, const Eigen::Ref<const Point>& y) {
            return std::sin(y[0] - x[0]) + (y[1] - x[1]) * std::cos(x[0] + y[0]);
        });
        CHECK(std::abs(h.total()) <= 1e-12);
        // Double-loop oracle.
        for (Eigen::Index i = 0; i < 9; ++i) {
            double expect = 0.0;
            for (Eigen::Index j = 0; j < 9; ++j) {
                const double s = std::sin(r.atoms(j, 0) - r.atoms(i, 0)) +
                                 (r.atoms(j, 1) - r.atoms(i, 1)) * std::cos(r.atoms(i, 0) + r.atoms(j, 0));
                expect += r.weights[j] * s;
            }
            CHECK(std::abs(h.weights[i] - r.weights[i] * expect) < 1e-15);
        }
    }
}

TEST_CASE("test function gradients match finite differences") {
    SplitMix64 rng(79);
    const Point p = random_positions(rng, 1, 3).row(0).transpose();
    const TestFunction fs[] = {TestFunction::coordinate(1), TestFunction::quadratic(p), TestFunction::gaussian_bump(p, 0.7)};
    for (const auto& f : fs) {
        for (int rep = 0; rep < 20; ++rep) {
            const Point x = random_positions(rng, 1, 3, -1, 2).row(0).transpose();
            Point fd(3);
            for (int k = 0; k < 3; ++k) {
                Point e = Point::Zero(3);
                e[k] = 1e-6;
                fd[k] = (f.value(x + e) - f.value(x - e)) / 2e-6;
            }
            CHECK((f.gradient(x) - fd).cwiseAbs().maxCoeff() < 1e-6);
        }
    }
}

TEST_CASE("weak-form residual") {
    SUBCASE("static single agent") {
        Positions x(1, 2);
        x << 0.2, 0.4;
        const auto tr = simulate(x, Weights::Ones(1), ControlLaw::zero(Point::Zero(2)), MassDynamics::zero(),
                                 InteractionKernel::gaussian(), config(1e-3, 0.1));
        CHECK(weak_form_residual(tr, TestFunction::gaussian_bump(Point::Zero(2), 1.0), 0.05, 0.01) <= 1e-12);
    }
    SUBCASE("second order in the difference step") {
        SplitMix64 rng(83);
        Point w(2);
        w << -0.4, 1.0;
        const auto tr = simulate(random_positions(rng, 6, 2), random_weights(rng, 6), ControlLaw::zero(Point::Zero(2)),
                                 MassDynamics::pairwise_linear(w), InteractionKernel::gaussian(), config(1e-4, 0.6));
        const auto f = TestFunction::coordinate(0);
        const double r1 = weak_form_residual(tr, f, 0.3, 4e-3);
        const double r2 = weak_form_residual(tr, f, 0.3, 2e-3);
        CHECK(r1 / r2 > 3.5);
        CHECK(r1 / r2 < 4.5);
    }
    SUBCASE("held control contributes a source term") {
        SplitMix64 rng(89);
        const Positions x = random_positions(rng, 4, 2);
        Eigen::VectorXd u(4);
        u << 0.3, -0.2, 0.5, -0.1;
        auto cfg = config(1e-4, 0.2);
        const auto tr = simulate(x, Weights::Ones(4), ControlLaw::open_loop(u, 1.0, Point::Zero(2)), MassDynamics::zero(),
                                 InteractionKernel::gaussian(), cfg);
        const auto f = TestFunction::gaussian_bump(Point::Constant(2, 0.5), 0.6);
        CHECK(weak_form_residual(tr, f, 0.1, 1e-3) < 1e-6);
    }
    SUBCASE("time outside the recorded range") {
        Positions x(2, 1);
        x << 0, 1;
        const auto tr = simulate(x, Weights::Ones(2), ControlLaw::zero(Point::Zero(1)), MassDynamics::zero(),
                                 InteractionKernel::gaussian(), config(1e-2, 0.1));
        CHECK_THROWS_AS(weak_form_residual(tr, TestFunction::coordinate(0), 0.0, 0.01), std::out_of_range);
        CHECK_THROWS_AS(weak_form_residual(tr, TestFunction::coordinate(0), 0.095, 0.01), std::out_of_range);
    }
}

TEST_CASE("merging coincident agents") {
    SUBCASE("first and last coincide") {
        Positions x(4, 2);
        x << 0, 0, 1, 0, 0, 1, 0, 0;
        Weights m(4);
        m << 1, 2, 3, 4;
        const auto s = merge_coincident(SystemState::initial(x, m), 0.0);
        REQUIRE(s.m.size() == 3);
        CHECK(s.m[0] == 5.0);
        CHECK(s.x.row(0) == x.row(0));
        CHECK(s.total_mass == 10.0);
    }
    SUBCASE("no coincidences") {
        SplitMix64 rng(97);
        const auto st = SystemState::initial(random_positions(rng, 5, 2), random_weights(rng, 5));
        const auto s = merge_coincident(st, 1e-12);
        CHECK(s.x == st.x);
        CHECK(s.m == st.m);
    }
    SUBCASE("three coincident") {
        const auto s = merge_coincident(SystemState::initial(Positions::Constant(3, 1, 0.7), Weights::Constant(3, 2.0)), 0.0);
        REQUIRE(s.m.size() == 1);
        CHECK(s.m[0] == 6.0);
    }
}

TEST_CASE("kinetic variance") {
    Positions a(2, 1);
    a << 0, 2;
    EmpiricalMeasure mu{a, Eigen::VectorXd::Constant(2, 0.5)};
    CHECK(kinetic_variance(mu, line_point(1.0)) == 0.0);
    EmpiricalMeasure one{Positions::Constant(1, 1, 3.0), Eigen::VectorXd::Ones(1)};
    CHECK(kinetic_variance(one, line_point(1.0)) == 4.0);
    SUBCASE("equals the squared barycenter distance along a conserving run") {
        SplitMix64 rng(101);
        const Point target = Point::Constant(2, 0.5);
        const auto tr = simulate(random_positions(rng, 6, 2), random_weights(rng, 6),
                                 ControlLaw::steepest(ControlSet::linf(2, true), target), MassDynamics::zero(),
                                 InteractionKernel::gaussian(), config(1e-3, 0.3));
        for (std::size_t k = 0; k < tr.size(); k += 50) {
            const auto mu_t = from_state(tr.state_at(k));
            CHECK(std::abs(mu_t.total() - 1.0) < 1e-12);
            CHECK(std::abs(kinetic_variance(mu_t, target) - tr.samples[k].dist_target * tr.samples[k].dist_target) < 1e-14);
        }
    }
}

TEST_CASE("indistinguishability under pairwise weight dynamics") {
    SplitMix64 rng(103);
    Positions x = random_positions(rng, 6, 2);
    x.row(5) = x.row(0);
    const Weights m = random_weights(rng, 6);
    Point w(2);
    w << 0.5, 1.0;
    const auto psi = MassDynamics::pairwise_linear(w);
    const auto merged = merge_coincident(SystemState::initial(x, m), 0.0);
    const auto a = simulate(x, m, ControlLaw::zero(Point::Zero(2)), psi, InteractionKernel::gaussian(), config(1e-3, 2.0));
    const auto b = simulate(merged.x, merged.m, ControlLaw::zero(Point::Zero(2)), psi, InteractionKernel::gaussian(),
                            config(1e-3, 2.0));
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK((a.samples[k].x.topRows(5) - b.samples[k].x).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK(std::abs(a.samples[k].m[0] + a.samples[k].m[5] - b.samples[k].m[0]) <= 1e-8);
    }
}
