#include "opinionctl/scenario.hpp"

#include "opinionctl/csv.hpp"
#include "opinionctl/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

namespace opinionctl {

using nlohmann::json;

ConfigError::ConfigError(std::string field, const std::string& message)
    : std::runtime_error(message), field_(std::move(field)) {}

std::string to_string(Strategy s) {
    switch (s) {
    case Strategy::linf_um: return "linf_um";
    case Strategy::l1_um: return "l1_um";
    case Strategy::linf_free: return "linf_free";
    case Strategy::l1_free: return "l1_free";
    case Strategy::thm1: return "thm1";
    case Strategy::thm2: return "thm2";
    case Strategy::zero: return "zero";
    }
    return "unknown";
}

Strategy parse_strategy(const std::string& name) {
    for (Strategy s : {Strategy::linf_um, Strategy::l1_um, Strategy::linf_free, Strategy::l1_free,
                       Strategy::thm1, Strategy::thm2, Strategy::zero}) {
        if (to_string(s) == name) return s;
    }
    throw ConfigError("strategy", "strategy: unknown value '" + name + "'");
}

std::vector<Strategy> steepest_strategies() {
    return {Strategy::linf_um, Strategy::l1_um, Strategy::linf_free, Strategy::l1_free};
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& prefix) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) {
            const std::string field = prefix.empty() ? it.key() : prefix + "." + it.key();
            throw ConfigError(field, field + ": unknown key");
        }
    }
}

const json& require(const json& obj, const std::string& key, const std::string& prefix = {}) {
    const std::string field = prefix.empty() ? key : prefix + "." + key;
    if (!obj.is_object() || !obj.contains(key)) throw ConfigError(field, field + ": required key missing");
    return obj.at(key);
}

template <typename T>
T get_as(const json& v, const std::string& field) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw ConfigError(field, field + ": wrong type");
    }
}

double get_number(const json& v, const std::string& field) {
    if (!v.is_number()) throw ConfigError(field, field + ": expected a number");
    return v.get<double>();
}

std::vector<double> get_numbers(const json& v, const std::string& field) {
    if (!v.is_array()) throw ConfigError(field, field + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) out.push_back(get_number(e, field));
    return out;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < std::min(byte > 0 ? byte - 1 : 0, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

KernelSpec parse_kernel(const json& j) {
    if (!j.is_object()) throw ConfigError("kernel", "kernel: expected an object");
    reject_unknown(j, {"kind", "value", "s", "a"}, "kernel");
    KernelSpec k;
    const auto kind = get_as<std::string>(require(j, "kind", "kernel"), "kernel.kind");
    if (kind == "gaussian") {
        k.kind = InteractionKernel::Kind::gaussian;
    } else if (kind == "constant") {
        k.kind = InteractionKernel::Kind::constant;
        k.value = get_number(require(j, "value", "kernel"), "kernel.value");
    } else if (kind == "tabulated") {
        k.kind = InteractionKernel::Kind::tabulated;
        k.s = get_numbers(require(j, "s", "kernel"), "kernel.s");
        k.a = get_numbers(require(j, "a", "kernel"), "kernel.a");
    } else {
        throw ConfigError("kernel.kind", "kernel.kind: unknown value '" + kind + "'");
    }
    return k;
}

PsiSpec parse_psi(const json& j) {
    if (!j.is_object()) throw ConfigError("psi", "psi: expected an object");
    reject_unknown(j, {"kind", "rate", "w"}, "psi");
    PsiSpec p;
    const auto kind = get_as<std::string>(require(j, "kind", "psi"), "psi.kind");
    if (kind == "zero") {
        p.kind = PsiSpec::Kind::zero;
    } else if (kind == "uniform_decay") {
        p.kind = PsiSpec::Kind::uniform_decay;
        p.rate = get_number(require(j, "rate", "psi"), "psi.rate");
    } else if (kind == "pairwise_linear") {
        p.kind = PsiSpec::Kind::pairwise_linear;
        p.w = to_vector(get_numbers(require(j, "w", "psi"), "psi.w"));
    } else if (kind == "model2") {
        p.kind = PsiSpec::Kind::model2;
    } else {
        throw ConfigError("psi.kind", "psi.kind: unknown value '" + kind + "'");
    }
    return p;
}

std::variant<ExplicitInit, UniformBoxInit> parse_init(const json& j) {
    if (!j.is_object()) throw ConfigError("init", "init: expected an object");
    reject_unknown(j, {"kind", "positions", "weights", "lower", "upper", "weight_min", "weight_max"}, "init");
    const auto kind = get_as<std::string>(require(j, "kind", "init"), "init.kind");
    if (kind == "explicit") {
        const json& rows = require(j, "positions", "init");
        if (!rows.is_array() || rows.empty()) throw ConfigError("init.positions", "init.positions: expected a list of points");
        std::vector<std::vector<double>> pts;
        for (const auto& r : rows) pts.push_back(get_numbers(r, "init.positions"));
        const std::size_t d = pts.front().size();
        ExplicitInit init;
        init.positions.resize(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (pts[i].size() != d) throw ConfigError("init.positions", "init.positions: points must share one dimension");
            for (std::size_t k = 0; k < d; ++k) {
                init.positions(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = pts[i][k];
            }
        }
        init.weights = to_vector(get_numbers(require(j, "weights", "init"), "init.weights"));
        return init;
    }
    if (kind == "uniform_box") {
        UniformBoxInit init;
        init.lower = to_vector(get_numbers(require(j, "lower", "init"), "init.lower"));
        init.upper = to_vector(get_numbers(require(j, "upper", "init"), "init.upper"));
        if (j.contains("weight_min")) init.weight_min = get_number(j.at("weight_min"), "init.weight_min");
        if (j.contains("weight_max")) init.weight_max = get_number(j.at("weight_max"), "init.weight_max");
        return init;
    }
    throw ConfigError("init.kind", "init.kind: unknown value '" + kind + "'");
}

TargetSpec parse_target(const json& j) {
    TargetSpec t;
    if (j.is_array()) {
        t.point = to_vector(get_numbers(j, "target"));
    } else if (j.is_object()) {
        reject_unknown(j, {"blend"}, "target");
        t.blend = to_vector(get_numbers(require(j, "blend", "target"), "target.blend"));
    } else {
        throw ConfigError("target", "target: expected a point or {\"blend\": [...]}");
    }
    return t;
}

IntegratorConfig parse_integrator(const json& j) {
    if (!j.is_object()) throw ConfigError("integrator", "integrator: expected an object");
    reject_unknown(j, {"h", "t_end", "stop_eps", "mass_floor", "mass_mode", "conserving_flux_hold"}, "integrator");
    IntegratorConfig c;
    c.h = get_number(require(j, "h", "integrator"), "integrator.h");
    c.t_end = get_number(require(j, "t_end", "integrator"), "integrator.t_end");
    if (j.contains("stop_eps")) c.stop_eps = get_number(j.at("stop_eps"), "integrator.stop_eps");
    if (j.contains("mass_floor")) c.mass_floor = get_number(j.at("mass_floor"), "integrator.mass_floor");
    if (j.contains("conserving_flux_hold")) {
        c.conserving_flux_hold = get_as<bool>(j.at("conserving_flux_hold"), "integrator.conserving_flux_hold");
    }
    if (j.contains("mass_mode")) {
        const auto mode = get_as<std::string>(j.at("mass_mode"), "integrator.mass_mode");
        if (mode == "joint_rk4") c.mass_mode = MassMode::joint_rk4;
        else if (mode == "exact_exponential_splitting") c.mass_mode = MassMode::exact_exponential_splitting;
        else throw ConfigError("integrator.mass_mode", "integrator.mass_mode: unknown value '" + mode + "'");
    }
    return c;
}

} // namespace

ScenarioConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte);
        std::ostringstream os;
        os << "parse error at line " << line << ", column " << col << ": " << e.what();
        throw ConfigError("", os.str());
    }
    if (!j.is_object()) throw ConfigError("", "config root must be an object");
    reject_unknown(j, {"description", "seed", "N", "d", "strategy", "alpha", "A", "alpha_tilde", "tau_min", "clamp",
                       "threshold", "init", "kernel", "psi", "target", "integrator"},
                   "");

    ScenarioConfig cfg;
    cfg.seed = get_as<std::uint64_t>(require(j, "seed"), "seed");
    cfg.n = get_as<int>(require(j, "N"), "N");
    cfg.d = get_as<int>(require(j, "d"), "d");
    cfg.strategy = parse_strategy(get_as<std::string>(require(j, "strategy"), "strategy"));
    cfg.kernel = parse_kernel(require(j, "kernel"));
    cfg.integrator = parse_integrator(require(j, "integrator"));
    if (j.contains("alpha")) cfg.alpha = get_number(j.at("alpha"), "alpha");
    if (j.contains("A")) cfg.a = get_number(j.at("A"), "A");
    if (j.contains("alpha_tilde")) cfg.alpha_tilde = get_number(j.at("alpha_tilde"), "alpha_tilde");
    if (j.contains("tau_min")) cfg.tau_min = get_number(j.at("tau_min"), "tau_min");
    if (j.contains("clamp")) cfg.clamp = get_as<bool>(j.at("clamp"), "clamp");
    if (j.contains("threshold")) cfg.threshold = get_number(j.at("threshold"), "threshold");
    if (j.contains("psi")) cfg.psi = parse_psi(j.at("psi"));
    if (j.contains("target")) cfg.target = parse_target(j.at("target"));
    if (j.contains("init")) {
        cfg.init = parse_init(j.at("init"));
    } else {
        cfg.init = UniformBoxInit{Point::Zero(std::max(cfg.d, 0)), Point::Ones(std::max(cfg.d, 0)), 1.0, 1.0};
    }
    cfg.validate();
    return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void ScenarioConfig::validate() const {
    if (n < 1) throw ConfigError("N", "N: must be at least 1");
    if (d < 1) throw ConfigError("d", "d: must be at least 1");
    const auto rows = static_cast<Eigen::Index>(n);
    const auto cols = static_cast<Eigen::Index>(d);

    if (const auto* e = std::get_if<ExplicitInit>(&init)) {
        if (e->positions.rows() != rows || e->positions.cols() != cols) {
            throw ConfigError("init.positions", "init.positions: expected N points of dimension d");
        }
        if (e->weights.size() != rows) throw ConfigError("init.weights", "init.weights: expected N weights");
        if (!(e->weights.array() > 0.0).all()) throw ConfigError("init.weights", "weights must be positive");
    } else {
        const auto& b = std::get<UniformBoxInit>(init);
        if (b.lower.size() != cols || b.upper.size() != cols) {
            throw ConfigError("init.lower", "init.lower/upper: expected d coordinates");
        }
        if (!(b.weight_min > 0.0) || b.weight_max < b.weight_min) {
            throw ConfigError("init.weight_min", "weights must be positive");
        }
    }

    auto need_positive = [&](const std::optional<double>& v, const std::string& name) {
        if (!v) throw ConfigError(name, name + ": required for strategy " + to_string(strategy));
        if (!(*v > 0.0)) throw ConfigError(name, name + ": must be positive");
    };
    switch (strategy) {
    case Strategy::linf_um:
    case Strategy::linf_free:
    case Strategy::thm1:
        need_positive(alpha, "alpha");
        break;
    case Strategy::l1_um:
    case Strategy::l1_free:
        need_positive(a, "A");
        break;
    case Strategy::thm2:
        need_positive(alpha, "alpha");
        need_positive(alpha_tilde, "alpha_tilde");
        if (!(*alpha > *alpha_tilde)) throw ConfigError("alpha_tilde", "alpha_tilde: must be smaller than alpha");
        break;
    case Strategy::zero:
        break;
    }

    if (!target) throw ConfigError("target", "target: required for strategy " + to_string(strategy));
    if (target->point && target->point->size() != cols) throw ConfigError("target", "target: expected d coordinates");
    if (target->blend) {
        const auto& b = *target->blend;
        if (b.size() != rows) throw ConfigError("target.blend", "target.blend: expected N coefficients");
        if ((b.array() < 0.0).any() || std::abs(b.sum() - 1.0) > 1e-9) {
            throw ConfigError("target.blend", "target.blend: coefficients must be nonnegative and sum to 1");
        }
    }
    if (psi.kind == PsiSpec::Kind::pairwise_linear && psi.w.size() != cols) {
        throw ConfigError("psi.w", "psi.w: expected d coordinates");
    }
    if (!(tau_min >= 0.0)) throw ConfigError("tau_min", "tau_min: must be nonnegative");
    if (!(threshold > 0.0)) throw ConfigError("threshold", "threshold: must be positive");
    try {
        integrator.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("integrator", e.what());
    }
}

ScenarioConfig seed_scenario() {
    ScenarioConfig cfg;
    cfg.seed = 2;
    cfg.n = 10;
    cfg.d = 2;
    cfg.strategy = Strategy::linf_free;
    cfg.alpha = 2.0;
    cfg.a = 10.0;
    cfg.alpha_tilde = 1.0;
    cfg.init = UniformBoxInit{Point::Zero(2), Point::Ones(2), 0.5, 1.5};
    Eigen::VectorXd blend(10);
    blend << 0.02915551916048633, 0.054642025094589465, 0.046855596658976512, 0.044179460924690279,
        0.075319099723934524, 0.065961371371775004, 0.054526278782315848, 0.55955407787069344,
        0.02721217362784532, 0.042594396784693241;
    cfg.target = TargetSpec{std::nullopt, blend};
    cfg.integrator.h = 1e-3;
    cfg.integrator.t_end = 1.0;
    return cfg;
}

// ---------------------------------------------------------------------------
// Building and running

std::pair<Positions, Weights> initial_condition(const ScenarioConfig& cfg) {
    if (const auto* e = std::get_if<ExplicitInit>(&cfg.init)) return {e->positions, e->weights};
    const auto& box = std::get<UniformBoxInit>(cfg.init);
    SplitMix64 rng(cfg.seed);
    Positions x(cfg.n, cfg.d);
    for (int i = 0; i < cfg.n; ++i) {
        for (int k = 0; k < cfg.d; ++k) x(i, k) = rng.uniform(box.lower[k], box.upper[k]);
    }
    Weights m(cfg.n);
    for (int i = 0; i < cfg.n; ++i) m[i] = rng.uniform(box.weight_min, box.weight_max);
    return {x, m};
}

Scenario build_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    Scenario sc;
    std::tie(sc.x0, sc.m0) = initial_condition(cfg);
    sc.target = cfg.target->point ? *cfg.target->point : Point(sc.x0.transpose() * *cfg.target->blend);

    switch (cfg.kernel.kind) {
    case InteractionKernel::Kind::gaussian: sc.kernel = InteractionKernel::gaussian(); break;
    case InteractionKernel::Kind::constant: sc.kernel = InteractionKernel::constant(cfg.kernel.value); break;
    case InteractionKernel::Kind::tabulated: sc.kernel = InteractionKernel::tabulated(cfg.kernel.s, cfg.kernel.a); break;
    }
    switch (cfg.psi.kind) {
    case PsiSpec::Kind::zero: sc.psi = MassDynamics::zero(); break;
    case PsiSpec::Kind::uniform_decay: sc.psi = MassDynamics::uniform_decay(cfg.psi.rate); break;
    case PsiSpec::Kind::pairwise_linear: sc.psi = MassDynamics::pairwise_linear(cfg.psi.w); break;
    case PsiSpec::Kind::model2: sc.psi = MassDynamics::model2(sc.kernel, sc.m0.sum()); break;
    }

    switch (cfg.strategy) {
    case Strategy::linf_um: sc.law = ControlLaw::steepest(ControlSet::linf(*cfg.alpha, true), sc.target); break;
    case Strategy::l1_um: sc.law = ControlLaw::steepest(ControlSet::l1(*cfg.a, true), sc.target); break;
    case Strategy::linf_free: sc.law = ControlLaw::steepest(ControlSet::linf(*cfg.alpha, false), sc.target); break;
    case Strategy::l1_free: sc.law = ControlLaw::steepest(ControlSet::l1(*cfg.a, false), sc.target); break;
    case Strategy::thm1: sc.law = ControlLaw::constructive(*cfg.alpha, cfg.clamp, sc.target); break;
    case Strategy::thm2:
        sc.plan = open_loop_theorem2(sc.x0, sc.m0, sc.target, *cfg.alpha, *cfg.alpha_tilde, cfg.tau_min);
        sc.law = ControlLaw::open_loop(sc.plan->u, sc.plan->horizon, sc.target);
        break;
    case Strategy::zero: sc.law = ControlLaw::zero(sc.target); break;
    }
    return sc;
}

RunSummary summarize(const std::string& strategy, const Trajectory& traj, double threshold) {
    RunSummary s{strategy, std::numeric_limits<double>::infinity(), traj.back().dist_target,
                 std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), 0.0, 0};
    double active = 0.0;
    for (const Sample& smp : traj.samples) {
        if (smp.dist_target <= threshold && std::isinf(s.time_to_threshold)) s.time_to_threshold = smp.t;
        s.min_total_mass = std::min(s.min_total_mass, smp.total_mass);
        s.max_total_mass = std::max(s.max_total_mass, smp.total_mass);
        active += smp.active_count;
        if (smp.clamped) ++s.clamped_steps;
    }
    s.mean_active = active / static_cast<double>(traj.size());
    return s;
}

std::vector<std::string> summary_header() {
    return {"strategy", "time_to_threshold", "final_dist", "min_total_mass", "max_total_mass", "mean_active",
            "clamped_steps"};
}

void write_summary_csv(std::ostream& os, const std::vector<RunSummary>& rows) {
    write_row(os, summary_header());
    for (const auto& r : rows) {
        write_row(os, {r.strategy, format_double(r.time_to_threshold), format_double(r.final_dist),
                       format_double(r.min_total_mass), format_double(r.max_total_mass), format_double(r.mean_active),
                       std::to_string(r.clamped_steps)});
    }
}

namespace {

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    body(out);
}

} // namespace

RunResult run(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
    const Scenario sc = build_scenario(cfg);
    Trajectory traj = simulate(sc.x0, sc.m0, sc.law, sc.psi, sc.kernel, cfg.integrator, cfg.seed);
    RunSummary summary = summarize(to_string(cfg.strategy), traj, cfg.threshold);

    std::filesystem::create_directories(out_dir);
    write_file(out_dir / "trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, traj); });
    write_file(out_dir / "controls.csv", [&](std::ostream& os) { write_controls_csv(os, traj); });
    write_file(out_dir / "summary.csv", [&](std::ostream& os) { write_summary_csv(os, {summary}); });
    return {std::move(summary), std::move(traj)};
}

ComparisonTable compare(const ScenarioConfig& cfg, const std::vector<Strategy>& strategies,
                        const std::filesystem::path& out_dir) {
    std::vector<std::future<RunSummary>> jobs;
    jobs.reserve(strategies.size());
    for (const Strategy s : strategies) {
        ScenarioConfig sub = cfg;
        sub.strategy = s;
        jobs.push_back(std::async(std::launch::async, [sub, dir = out_dir / to_string(s)] {
            return run(sub, dir).summary;
        }));
    }

    ComparisonTable table;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        try {
            table.rows.push_back(jobs[i].get());
        } catch (const std::exception& e) {
            table.failures.emplace_back(to_string(strategies[i]), e.what());
        }
    }
    std::filesystem::create_directories(out_dir);
    write_file(out_dir / "summary.csv", [&](std::ostream& os) { write_summary_csv(os, table.rows); });
    if (!table.failures.empty()) {
        write_file(out_dir / "failures.csv", [&](std::ostream& os) {
            write_row(os, {"strategy", "error"});
            for (const auto& [name, err] : table.failures) {
                std::string clean = err;
                std::replace(clean.begin(), clean.end(), ',', ';');
                std::replace(clean.begin(), clean.end(), '\n', ' ');
                write_row(os, {name, clean});
            }
        });
    }
    return table;
}

} // namespace opinionctl
