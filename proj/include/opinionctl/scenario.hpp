#pragma once

#include "opinionctl/control.hpp"
#include "opinionctl/integrate.hpp"
#include "opinionctl/model.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace opinionctl {

/// Parse or validation failure in a scenario file. `field` names the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message);
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

enum class Strategy { linf_um, l1_um, linf_free, l1_free, thm1, thm2, zero };

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& name);
/// The four steepest-descent strategies in canonical order.
std::vector<Strategy> steepest_strategies();

struct ExplicitInit {
    Positions positions;
    Weights weights;
};
struct UniformBoxInit {
    Point lower;
    Point upper;
    double weight_min = 1.0;
    double weight_max = 1.0;
};

struct KernelSpec {
    InteractionKernel::Kind kind = InteractionKernel::Kind::gaussian;
    double value = 1.0;
    std::vector<double> s;
    std::vector<double> a;
};

struct PsiSpec {
    enum class Kind { zero, uniform_decay, pairwise_linear, model2 };
    Kind kind = Kind::zero;
    double rate = 0.0;
    Point w;
};

/// Target given explicitly or as convex coefficients of the initial positions.
struct TargetSpec {
    std::optional<Point> point;
    std::optional<Eigen::VectorXd> blend;
};

struct ScenarioConfig {
    std::uint64_t seed = 0;
    int n = 0;
    int d = 0;
    Strategy strategy = Strategy::zero;
    std::optional<double> alpha;
    std::optional<double> a;
    std::optional<double> alpha_tilde;
    double tau_min = 1e-3;
    bool clamp = true;
    double threshold = 0.05;
    std::variant<ExplicitInit, UniformBoxInit> init;
    KernelSpec kernel;
    PsiSpec psi;
    std::optional<TargetSpec> target;
    IntegratorConfig integrator;

    /// Throws ConfigError naming the field for missing strategy parameters or bad values.
    void validate() const;
};

ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// The bundled ten-agent scenario (scenarios/seed_scenario.json) as a value.
ScenarioConfig seed_scenario();

/// Materialised inputs of a run.
struct Scenario {
    Positions x0;
    Weights m0;
    Point target;
    InteractionKernel kernel;
    MassDynamics psi;
    ControlLaw law;
    std::optional<OpenLoopPlan> plan;
};

Scenario build_scenario(const ScenarioConfig& cfg);
/// Initial positions and weights only (deterministic in the seed).
std::pair<Positions, Weights> initial_condition(const ScenarioConfig& cfg);

struct RunSummary {
    std::string strategy;
    double time_to_threshold;  ///< +inf when never reached
    double final_dist;
    double min_total_mass;
    double max_total_mass;
    double mean_active;
    int clamped_steps;
};

RunSummary summarize(const std::string& strategy, const Trajectory& traj, double threshold);

struct RunResult {
    RunSummary summary;
    Trajectory trajectory;
};

/// Simulates the scenario and writes trajectory.csv, controls.csv and summary.csv into out_dir.
RunResult run(const ScenarioConfig& cfg, const std::filesystem::path& out_dir);

struct ComparisonTable {
    std::vector<RunSummary> rows;
    std::vector<std::pair<std::string, std::string>> failures;  ///< (strategy, error)
};

/// One run per strategy from identical initial data, each in out_dir/<strategy>/,
/// plus a combined out_dir/summary.csv. Failed runs are recorded and skipped.
ComparisonTable compare(const ScenarioConfig& cfg, const std::vector<Strategy>& strategies,
                        const std::filesystem::path& out_dir);

std::vector<std::string> summary_header();
void write_summary_csv(std::ostream& os, const std::vector<RunSummary>& rows);

} // namespace opinionctl
