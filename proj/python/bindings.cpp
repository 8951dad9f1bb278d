#include "opinionctl/acceptance.hpp"
#include "opinionctl/control.hpp"
#include "opinionctl/geometry.hpp"
#include "opinionctl/scenario.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace opinionctl;

namespace {

const char* membership_name(Membership m) {
    switch (m) {
    case Membership::inside: return "inside";
    case Membership::boundary: return "boundary";
    case Membership::outside: return "outside";
    }
    return "?";
}

ControlSet control_set(const std::string& norm, double bound, bool mass_conserving) {
    if (norm == "linf") return ControlSet::linf(bound, mass_conserving);
    if (norm == "l1") return ControlSet::l1(bound, mass_conserving);
    throw py::value_error("norm must be 'linf' or 'l1'");
}

py::dict summary_dict(const RunSummary& s) {
    py::dict d;
    d["strategy"] = s.strategy;
    d["time_to_threshold"] = s.time_to_threshold;
    d["final_dist"] = s.final_dist;
    d["min_total_mass"] = s.min_total_mass;
    d["max_total_mass"] = s.max_total_mass;
    d["mean_active"] = s.mean_active;
    d["clamped_steps"] = s.clamped_steps;
    return d;
}

ScenarioConfig config_from(const py::object& source) {
    if (source.is_none()) return seed_scenario();
    return load_config(py::cast<std::filesystem::path>(source));
}

} // namespace

PYBIND11_MODULE(opinionctl, mod) {
    mod.doc() = "Weighted opinion dynamics steered by weight control";

    py::register_exception<ConfigError>(mod, "ConfigError", PyExc_ValueError);
    py::register_exception<SimulationError>(mod, "SimulationError", PyExc_RuntimeError);
    py::register_exception<BarycentricError>(mod, "BarycentricError", PyExc_ValueError);
    py::register_exception<MembershipStalled>(mod, "MembershipStalled", PyExc_RuntimeError);

    mod.def("barycenter", [](const Positions& x, const Eigen::VectorXd& m) -> Point { return barycenter(x, m); },
            py::arg("x"), py::arg("m"));
    mod.def("hull_distance", [](const Positions& x, const Point& q, double tol) { return hull_distance(x, q, tol); },
            py::arg("points"), py::arg("q"), py::arg("tol") = 1e-9);
    mod.def(
        "hull_contains",
        [](const Positions& x, const Point& q, double tol) {
            const auto r = hull_contains(x, q, tol);
            return py::make_tuple(membership_name(r.where), r.distance);
        },
        py::arg("points"), py::arg("q"), py::arg("tol") = 1e-9,
        "Returns (classification, distance) with classification in {'inside', 'boundary', 'outside'}.");
    mod.def("interior_margin", [](const Positions& x, const Point& q) { return interior_margin(x, q); },
            py::arg("points"), py::arg("q"));
    mod.def(
        "barycentric_coords",
        [](const Positions& x, const Point& q, double tau_min) { return barycentric_coords(x, q, tau_min).tau; },
        py::arg("points"), py::arg("q"), py::arg("tau_min") = 0.0);
    mod.def("project_simplex", [](const Eigen::VectorXd& v) -> Eigen::VectorXd { return project_simplex(v); });

    mod.def("solve_box_hyperplane", [](const Eigen::VectorXd& c, const Weights& m, double alpha) -> Eigen::VectorXd {
        return solve_box_hyperplane(c, m, alpha);
    }, py::arg("c"), py::arg("m"), py::arg("alpha"));
    mod.def("solve_diamond_hyperplane", [](const Eigen::VectorXd& c, const Weights& m, double a) -> Eigen::VectorXd {
        return solve_diamond_hyperplane(c, m, a);
    }, py::arg("c"), py::arg("m"), py::arg("A"));
    mod.def(
        "steepest_descent",
        [](const Positions& x, const Weights& m, const Point& target, const std::string& norm, double bound,
           bool mass_conserving) -> Eigen::VectorXd {
            return steepest_descent(SystemState::initial(x, m), target, control_set(norm, bound, mass_conserving));
        },
        py::arg("x"), py::arg("m"), py::arg("target"), py::arg("norm"), py::arg("bound"),
        py::arg("mass_conserving"));

    mod.def(
        "run",
        [](const py::object& config, const std::filesystem::path& out_dir) {
            const auto r = run(config_from(config), out_dir);
            const auto n = static_cast<Eigen::Index>(r.trajectory.size());
            Eigen::VectorXd t(n), dist(n), mass(n);
            for (Eigen::Index k = 0; k < n; ++k) {
                const auto& s = r.trajectory.samples[static_cast<std::size_t>(k)];
                t[k] = s.t;
                dist[k] = s.dist_target;
                mass[k] = s.total_mass;
            }
            py::dict d = summary_dict(r.summary);
            d["t"] = t;
            d["dist_target"] = dist;
            d["total_mass"] = mass;
            return d;
        },
        py::arg("config"), py::arg("out_dir"),
        "Runs a JSON scenario (None for the bundled seed scenario) and writes its CSV files into out_dir.");
    mod.def(
        "compare",
        [](const py::object& config, const std::vector<std::string>& strategies, const std::filesystem::path& out_dir) {
            std::vector<Strategy> parsed;
            for (const auto& s : strategies) parsed.push_back(parse_strategy(s));
            const auto table = compare(config_from(config), parsed, out_dir);
            py::list rows;
            for (const auto& r : table.rows) rows.append(summary_dict(r));
            return py::make_tuple(rows, table.failures);
        },
        py::arg("config"), py::arg("strategies"), py::arg("out_dir"));

    mod.def(
        "acceptance",
        [](const std::vector<int>& ids) {
            py::list out;
            std::vector<AcceptanceRow> rows;
            {
                py::gil_scoped_release release;
                if (ids.empty()) {
                    rows = run_acceptance();
                } else {
                    for (int id : ids) rows.push_back(run_criterion(id));
                }
            }
            for (const auto& r : rows) {
                py::dict d;
                d["id"] = r.id;
                d["name"] = r.name;
                d["measured"] = r.measured;
                d["bound"] = r.bound;
                d["passed"] = r.passed;
                d["note"] = r.note;
                out.append(d);
            }
            return out;
        },
        py::arg("ids") = std::vector<int>{}, "Runs the listed acceptance criteria (all when empty).");
    mod.attr("ACCEPTANCE_CRITERIA") = kAcceptanceCriteria;
}
