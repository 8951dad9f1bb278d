#include "opinionctl/acceptance.hpp"

#include "opinionctl/csv.hpp"
#include "opinionctl/geometry.hpp"
#include "opinionctl/integrate.hpp"
#include "opinionctl/meanfield.hpp"
#include "opinionctl/oracles.hpp"
#include "opinionctl/rng.hpp"
#include "opinionctl/scenario.hpp"

#include <cmath>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

namespace opinionctl {

namespace {

std::string fmt(double v) { return format_double(v); }

const char* criterion_name(int id) {
    static const char* names[] = {"barycenter conservation",
                                  "consensus rate",
                                  "constructive control decay",
                                  "polytope LP vs vertex enumeration",
                                  "mass conservation under mass-conserving controls",
                                  "hull contraction",
                                  "open-loop terminal masses",
                                  "confinement under uniform decay",
                                  "weak-form residual",
                                  "indistinguishability",
                                  "sparsity pattern",
                                  "strategy ordering",
                                  "integrator order"};
    return names[id - 1];
}

AcceptanceRow make_row(int id, double measured, double bound, bool passed, std::string note = {}) {
    return {id, criterion_name(id), measured, bound, passed, std::move(note)};
}

Scenario seed() { return build_scenario(seed_scenario()); }

Trajectory run_strategy(const Scenario& sc, const ControlSet& set, double t_end = 1.0) {
    IntegratorConfig ic;
    ic.h = 1e-3;
    ic.t_end = t_end;
    return simulate(sc.x0, sc.m0, ControlLaw::steepest(set, sc.target), MassDynamics::zero(), sc.kernel, ic);
}

Trajectory uncontrolled_seed_run() {
    const Scenario sc = seed();
    IntegratorConfig ic;
    ic.h = 1e-3;
    ic.t_end = 5.0;
    return simulate(sc.x0, sc.m0, ControlLaw::zero(sc.target), MassDynamics::zero(), InteractionKernel::gaussian(),
                    ic);
}

AcceptanceRow barycenter_conservation() {
    const Trajectory tr = uncontrolled_seed_run();
    double worst = 0.0;
    for (const Sample& s : tr.samples) worst = std::max(worst, (s.bary - tr.front().bary).norm());
    return make_row(1, worst, 1e-6, worst <= 1e-6);
}

AcceptanceRow consensus_rate() {
    const Trajectory tr = uncontrolled_seed_run();
    const double d0 = tr.front().diameter;
    const double a_min = compute_a_min(InteractionKernel::gaussian(), d0);
    double worst = 0.0;
    for (const Sample& s : tr.samples) worst = std::max(worst, s.diameter / (d0 * std::exp(-a_min * s.t)));
    const double bound = 1.0 + 1e-6;
    return make_row(2, worst, bound, worst <= bound,
                    "max D(t)/(D(0) exp(-a_min t)); a_min=" + fmt(a_min) + " D(0)=" + fmt(d0));
}

AcceptanceRow constructive_decay() {
    Scenario sc = seed();
    // The heaviest agent sits on the far side of the target, so it is always
    // the receiver and the literal control never exceeds alpha.
    Eigen::Index far = 0;
    sc.x0.col(0).maxCoeff(&far);
    Weights m0 = sc.m0;
    m0[far] *= 5.0;

    const double alpha = 2.0;
    IntegratorConfig ic;
    ic.h = 1e-3;
    ic.t_end = 10.0;
    ic.stop_eps = 1e-3;
    const Trajectory tr =
        simulate(sc.x0, m0, ControlLaw::constructive(alpha, false, sc.target), MassDynamics::zero(), sc.kernel, ic);

    const double n = static_cast<double>(sc.x0.rows());
    const double d0 = tr.front().dist_target;
    double worst = 0.0;
    int would_clamp = 0;
    double checked_until = 0.0;
    bool interior = true;
    for (const Sample& s : tr.samples) {
        if (s.would_clamp) ++would_clamp;
        if (!interior) continue;
        if (interior_margin(s.x, sc.target) <= 0.0) {
            interior = false;
            continue;
        }
        worst = std::max(worst, s.dist_target / (d0 * std::exp(-(alpha / n) * s.t)));
        checked_until = s.t;
    }
    const double bound = 1.0 + 1e-2;
    std::ostringstream note;
    note << "max dist/(dist0 exp(-alpha t/N)) over t<=" << fmt(checked_until)
         << "; steps with m_plus>m_minus=" << would_clamp << "; final dist=" << fmt(tr.back().dist_target);
    return make_row(3, worst, bound, worst <= bound && would_clamp == 0, note.str());
}

AcceptanceRow lp_oracle() {
    SplitMix64 rng(20240601);
    double worst_gap = 0.0;
    double worst_resid = 0.0;
    for (int inst = 0; inst < 200; ++inst) {
        const int n = 2 + static_cast<int>(rng.next() % 5);
        Eigen::VectorXd c(n);
        Eigen::VectorXd m(n);
        for (int i = 0; i < n; ++i) c[i] = rng.uniform(-1.0, 1.0);
        for (int i = 0; i < n; ++i) m[i] = rng.uniform(0.2, 3.0);
        const double alpha = rng.uniform(0.5, 3.0);
        const double a = rng.uniform(1.0, 10.0);

        const Control ub = solve_box_hyperplane(c, m, alpha);
        const auto ob = oracle::box_hyperplane(c, m, alpha);
        if (!ob.feasible) throw std::runtime_error("box oracle found no vertex");
        worst_gap = std::max(worst_gap, std::abs(c.dot(ub) - ob.objective));
        worst_resid = std::max({worst_resid, std::abs(m.dot(ub)), (ub.cwiseAbs().array() - alpha).maxCoeff()});

        const Control ud = solve_diamond_hyperplane(c, m, a);
        const auto od = oracle::diamond_hyperplane(c, m, a);
        if (!od.feasible) throw std::runtime_error("diamond oracle found no vertex");
        worst_gap = std::max(worst_gap, std::abs(c.dot(ud) - od.objective));
        worst_resid = std::max({worst_resid, std::abs(m.dot(ud)), ud.cwiseAbs().sum() - a});
    }
    return make_row(4, worst_gap, 1e-9,
                    worst_gap <= 1e-9 && worst_resid <= 1e-10, "max feasibility residual=" + fmt(worst_resid));
}

AcceptanceRow mass_conservation() {
    const Scenario sc = seed();
    const double total = sc.m0.sum();
    double worst = 0.0;
    for (const ControlSet& set : {ControlSet::linf(2.0, true), ControlSet::l1(10.0, true)}) {
        const Trajectory tr = run_strategy(sc, set);
        for (const Sample& s : tr.samples) worst = std::max(worst, std::abs(s.m.sum() - total) / total);
    }
    return make_row(5, worst, 1e-8, worst <= 1e-8,
                    "relative drift of sum m over linf_um and l1_um");
}

AcceptanceRow hull_contraction() {
    const Scenario sc = seed();
    constexpr double tol = 1e-7;
    double worst = 0.0;
    int outside = 0;
    for (const ControlSet& set : {ControlSet::linf(2.0, true), ControlSet::l1(10.0, true)}) {
        const Trajectory tr = run_strategy(sc, set);
        std::vector<std::size_t> picks;
        for (double t : {0.0, 0.1, 0.25, 0.5, 0.75, 1.0}) {
            const auto i = tr.find_time(t);
            if (i == Trajectory::npos) throw std::runtime_error("sample time missing");
            picks.push_back(i);
        }
        for (std::size_t a = 0; a < picks.size(); ++a) {
            for (std::size_t b = a + 1; b < picks.size(); ++b) {
                const Positions& hull = tr.samples[picks[a]].x;
                const Positions& later = tr.samples[picks[b]].x;
                for (Eigen::Index i = 0; i < later.rows(); ++i) {
                    const auto r = hull_contains(hull, later.row(i).transpose(), tol);
                    worst = std::max(worst, r.distance);
                    if (r.where == Membership::outside) ++outside;
                }
            }
        }
    }
    return make_row(6, worst, tol, outside == 0,
                    "max distance of x_i(t2) to hull(x(t1)); outside classifications=" + std::to_string(outside));
}

AcceptanceRow open_loop_terminal() {
    Positions x0(2, 1);
    x0 << 0.0, 1.0;
    Weights m0(2);
    m0 << 1.0, 1.0;
    Point target(1);
    target << 0.25;
    const double alpha = 2.0;
    const double alpha_tilde = 1.0;
    const OpenLoopPlan plan = open_loop_theorem2(x0, m0, target, alpha, alpha_tilde, 1e-3);

    const InteractionKernel kernel = InteractionKernel::gaussian();
    IntegratorConfig ic;
    ic.h = 1e-3;
    ic.t_end = plan.horizon;
    ic.mass_mode = MassMode::exact_exponential_splitting;
    const Trajectory tr =
        simulate(x0, m0, ControlLaw::open_loop(plan.u, plan.horizon, target), MassDynamics::zero(), kernel, ic);
    const auto iT = tr.find_time(plan.horizon);
    if (iT == Trajectory::npos) throw std::runtime_error("no sample at the horizon");
    const Sample& end = tr.samples[iT];

    Eigen::Vector2d u_exact(-1.0, -2.0);
    Eigen::Vector2d m_exact(1.0 / 3.0, 1.0 / 9.0);
    const double err = std::max({(plan.u - u_exact).cwiseAbs().maxCoeff(), std::abs(plan.horizon - std::log(3.0)),
                                 (end.m - m_exact).cwiseAbs().maxCoeff()});
    const double delta = compute_delta(kernel, diameter(x0));
    const double dist_bound = delta / alpha_tilde;
    std::ostringstream note;
    note << "max error in u/T/m(T); dist(T)=" << fmt(end.dist_target) << " vs delta/alpha_tilde=" << fmt(dist_bound);
    return make_row(7, err, 1e-6, err <= 1e-6 && end.dist_target <= dist_bound,
                    note.str());
}

AcceptanceRow confinement() {
    const Scenario sc = seed();
    constexpr double rate = 5.0;
    const InteractionKernel kernel = InteractionKernel::gaussian();
    IntegratorConfig ic;
    ic.h = 1e-3;
    ic.t_end = 2.0;
    const Trajectory tr =
        simulate(sc.x0, sc.m0, ControlLaw::zero(sc.target), MassDynamics::uniform_decay(rate), kernel, ic);
    const double delta = compute_delta(kernel, diameter(sc.x0));
    double worst = -std::numeric_limits<double>::infinity();
    for (const Sample& s : tr.samples) {
        const double radius = (delta / rate) * (1.0 - std::exp(-rate * s.t));
        const double moved = (s.x - sc.x0).rowwise().norm().maxCoeff();
        worst = std::max(worst, moved - radius);
    }
    return make_row(8, worst, 1e-6, worst <= 1e-6,
                    "max_i,t |x_i(t)-x_i(0)| - (delta/A)(1-exp(-A t)); delta=" + fmt(delta));
}

AcceptanceRow weak_form() {
    SplitMix64 rng(5);
    constexpr int n = 5;
    Positions x0(n, 2);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < 2; ++k) x0(i, k) = rng.uniform();
    }
    Weights m0(n);
    for (int i = 0; i < n; ++i) m0[i] = rng.uniform(0.5, 1.5);
    Point w(2);
    w << 1.0, -0.5;
    Point target = Point::Zero(2);

    IntegratorConfig ic;
    ic.h = 1e-4;
    ic.t_end = 1.0;
    const Trajectory tr =
        simulate(x0, m0, ControlLaw::zero(target), MassDynamics::pairwise_linear(w), InteractionKernel::gaussian(), ic);
    const auto f = TestFunction::gaussian_bump(Point::Constant(2, 0.5), 0.5);
    const double r1 = weak_form_residual(tr, f, 0.5, 1e-3);
    const double r2 = weak_form_residual(tr, f, 0.5, 5e-4);
    const double ratio = r1 / r2;
    std::ostringstream note;
    note << "residual(dt=1e-3)/residual(dt=5e-4) in [3;5]; residual(dt=1e-3)=" << fmt(r1) << " <= 1e-4";
    return make_row(9, ratio, 5.0, ratio >= 3.0 && ratio <= 5.0 && r1 <= 1e-4, note.str());
}

AcceptanceRow indistinguishability() {
    const Scenario sc = seed();
    Positions x0 = sc.x0;
    const Eigen::Index n = x0.rows();
    x0.row(n - 1) = x0.row(0);
    Point w(2);
    w << 1.0, -0.5;
    const MassDynamics psi = MassDynamics::pairwise_linear(w);
    IntegratorConfig ic;
    ic.h = 1e-3;
    ic.t_end = 2.0;

    const SystemState merged0 = merge_coincident(SystemState::initial(x0, sc.m0), 0.0);
    if (merged0.m.size() != n - 1) throw std::runtime_error("merge did not remove the duplicate agent");
    const Trajectory full = simulate(x0, sc.m0, ControlLaw::zero(sc.target), psi, sc.kernel, ic);
    const Trajectory merged = simulate(merged0.x, merged0.m, ControlLaw::zero(sc.target), psi, sc.kernel, ic);
    if (full.size() != merged.size()) throw std::runtime_error("sample counts differ");

    double worst = 0.0;
    for (std::size_t k = 0; k < full.size(); ++k) {
        const Sample& a = full.samples[k];
        const Sample& b = merged.samples[k];
        worst = std::max(worst, (a.x.topRows(n - 1) - b.x).cwiseAbs().maxCoeff());
        worst = std::max(worst, (a.x.row(n - 1) - a.x.row(0)).cwiseAbs().maxCoeff());
        Weights summed = a.m.head(n - 1);
        summed[0] += a.m[n - 1];
        worst = std::max(worst, (summed - b.m).cwiseAbs().maxCoeff());
    }
    return make_row(10, worst, 1e-8, worst <= 1e-8,
                    "max deviation of positions and summed weights over t in [0;2]");
}

AcceptanceRow sparsity() {
    const Scenario sc = seed();
    const Trajectory free_run = run_strategy(sc, ControlSet::l1(10.0, false));
    const Trajectory um_run = run_strategy(sc, ControlSet::l1(10.0, true));
    std::size_t single = 0;
    for (const Sample& s : free_run.samples) single += s.active_count == 1;
    std::size_t pair_or_triple = 0;
    for (const Sample& s : um_run.samples) pair_or_triple += s.active_count == 2 || s.active_count == 3;
    const double frac_free = static_cast<double>(single) / static_cast<double>(free_run.size());
    const double frac_um = static_cast<double>(pair_or_triple) / static_cast<double>(um_run.size());
    return make_row(11, frac_free, 0.95, frac_free >= 0.95 && frac_um == 1.0,
                    "fraction of l1_free samples with one active component; l1_um fraction with two or three=" +
                        fmt(frac_um));
}

AcceptanceRow strategy_ordering() {
    const Scenario sc = seed();
    auto time_to = [&](const ControlSet& set) { return summarize("", run_strategy(sc, set), 0.05).time_to_threshold; };
    const double linf_um = time_to(ControlSet::linf(2.0, true));
    const double linf_free = time_to(ControlSet::linf(2.0, false));
    const double l1_um = time_to(ControlSet::l1(10.0, true));
    const double l1_free = time_to(ControlSet::l1(10.0, false));
    const double worst = std::max(linf_free / linf_um, l1_free / l1_um);
    std::ostringstream note;
    note << "max time ratio free/conserving; linf_um=" << fmt(linf_um) << " linf_free=" << fmt(linf_free)
         << " l1_um=" << fmt(l1_um) << " l1_free=" << fmt(l1_free);
    return make_row(12, worst, 1.0, linf_free < linf_um && l1_free < l1_um, note.str());
}

AcceptanceRow integrator_order(const AcceptanceOptions& options) {
    const Scenario sc = seed();
    Point w(2);
    w << 1.0, -0.5;
    const MassDynamics psi = MassDynamics::pairwise_linear(w);
    const ControlLaw law = options.order_negative_control
                               ? ControlLaw::steepest(ControlSet::linf(2.0, false), sc.target)
                               : ControlLaw::zero(sc.target);
    auto terminal = [&](double h) {
        IntegratorConfig ic;
        ic.h = h;
        ic.t_end = 1.0;
        const Trajectory tr = simulate(sc.x0, sc.m0, law, psi, sc.kernel, ic);
        return std::make_pair(tr.back().x, tr.back().m);
    };
    const auto ref = terminal(1e-5);
    auto error = [&](double h) {
        const auto s = terminal(h);
        return std::max((s.first - ref.first).cwiseAbs().maxCoeff(), (s.second - ref.second).cwiseAbs().maxCoeff());
    };
    const double e1 = error(options.order_h);
    const double e2 = error(options.order_h / 2.0);
    const double ratio = e1 / e2;
    std::ostringstream note;
    note << "error ratio h=" << fmt(options.order_h) << " vs h/2 in [8;32]" << "; e(h)=" << fmt(e1)
         << (options.order_negative_control ? "; negative control with held feedback" : "");
    return make_row(13, ratio, 16.0, ratio >= 8.0 && ratio <= 32.0, note.str());
}

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

} // namespace

AcceptanceRow run_criterion(int id, const AcceptanceOptions& options) {
    if (id < 1 || id > kAcceptanceCriteria) throw std::out_of_range("no acceptance criterion " + std::to_string(id));
    try {
        switch (id) {
        case 1: return barycenter_conservation();
        case 2: return consensus_rate();
        case 3: return constructive_decay();
        case 4: return lp_oracle();
        case 5: return mass_conservation();
        case 6: return hull_contraction();
        case 7: return open_loop_terminal();
        case 8: return confinement();
        case 9: return weak_form();
        case 10: return indistinguishability();
        case 11: return sparsity();
        case 12: return strategy_ordering();
        default: return integrator_order(options);
        }
    } catch (const std::exception& e) {
        return make_row(id, std::nan(""), std::nan(""), false, std::string("error: ") + e.what());
    }
}

std::vector<AcceptanceRow> run_acceptance(const AcceptanceOptions& options) {
    std::vector<AcceptanceRow> rows;
    if (!options.parallel) {
        for (int id = 1; id <= kAcceptanceCriteria; ++id) rows.push_back(run_criterion(id, options));
        return rows;
    }
    std::vector<std::future<AcceptanceRow>> jobs;
    for (int id = 1; id <= kAcceptanceCriteria; ++id) {
        jobs.push_back(std::async(std::launch::async, [id, options] { return run_criterion(id, options); }));
    }
    for (auto& j : jobs) rows.push_back(j.get());
    return rows;
}

void write_acceptance_csv(std::ostream& os, const std::vector<AcceptanceRow>& rows) {
    write_row(os, {"id", "criterion", "measured", "bound", "verdict", "note"});
    for (const auto& r : rows) {
        write_row(os, {std::to_string(r.id), quote(r.name), format_double(r.measured), format_double(r.bound),
                       r.passed ? "pass" : "fail", quote(r.note)});
    }
}

std::filesystem::path write_acceptance_report(const std::filesystem::path& out_dir,
                                              const std::vector<AcceptanceRow>& rows) {
    std::filesystem::create_directories(out_dir);
    const auto path = out_dir / "acceptance_report.csv";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_acceptance_csv(out, rows);
    return path;
}

} // namespace opinionctl
