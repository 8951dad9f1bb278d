#include "opinionctl/acceptance.hpp"
#include "opinionctl/csv.hpp"
#include "opinionctl/scenario.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace opinionctl;

namespace {

std::vector<Strategy> parse_strategy_list(const std::string& csv) {
    std::vector<Strategy> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) continue;
        out.push_back(parse_strategy(item.substr(b, e - b + 1)));
    }
    if (out.empty()) throw ConfigError("strategies", "strategies: empty list");
    return out;
}

void print_summary(const RunSummary& s) {
    std::cout << s.strategy << ": time_to_threshold=" << format_double(s.time_to_threshold)
              << " final_dist=" << format_double(s.final_dist) << " total_mass=[" << format_double(s.min_total_mass)
              << ", " << format_double(s.max_total_mass) << "] mean_active=" << format_double(s.mean_active)
              << " clamped_steps=" << s.clamped_steps << '\n';
}

int cmd_run(const fs::path& config, const fs::path& out) {
    const ScenarioConfig cfg = load_config(config);
    const RunResult r = run(cfg, out);
    print_summary(r.summary);
    return 0;
}

int cmd_compare(const fs::path& config, const std::string& strategies, const fs::path& out) {
    const ScenarioConfig cfg = load_config(config);
    const ComparisonTable table = compare(cfg, parse_strategy_list(strategies), out);
    for (const auto& row : table.rows) print_summary(row);
    for (const auto& [name, what] : table.failures) std::cerr << name << ": failed: " << what << '\n';
    return table.failures.empty() ? 0 : 1;
}

int cmd_acceptance(const fs::path& out, const AcceptanceOptions& options) {
    const auto rows = run_acceptance(options);
    const auto path = write_acceptance_report(out, rows);
    bool all = true;
    for (const auto& r : rows) {
        std::cout << (r.passed ? "PASS" : "FAIL") << "  " << r.id << ". " << r.name << "  measured=" << format_double(r.measured)
                  << " bound=" << format_double(r.bound);
        if (!r.note.empty()) std::cout << "  (" << r.note << ")";
        std::cout << '\n';
        all = all && r.passed;
    }
    std::cout << "report: " << path.string() << '\n';
    return all ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Opinion dynamics with controlled influence weights"};
    app.require_subcommand(1);

    fs::path config;
    fs::path out;
    std::string strategies;
    AcceptanceOptions acc;

    auto* run_cmd = app.add_subcommand("run", "Simulate one scenario and write trajectory, controls and summary CSVs");
    run_cmd->add_option("--config", config, "Scenario file (JSON)")->required();
    run_cmd->add_option("--out", out, "Output directory")->required();

    auto* cmp_cmd = app.add_subcommand("compare", "Run several strategies from the same initial data");
    cmp_cmd->add_option("--config", config, "Scenario file (JSON)")->required();
    cmp_cmd->add_option("--strategies", strategies, "Comma-separated strategy names")->required();
    cmp_cmd->add_option("--out", out, "Output directory")->required();

    auto* acc_cmd = app.add_subcommand("acceptance", "Run the acceptance suite and write acceptance_report.csv");
    acc_cmd->add_option("--out", out, "Output directory")->required();
    acc_cmd->add_option("--order-h", acc.order_h, "Coarse step of the integrator-order check")
        ->check(CLI::PositiveNumber);
    acc_cmd->add_flag("--order-negative-control", acc.order_negative_control,
                      "Run the order check on a held feedback law (expected to fail)");
    acc_cmd->add_flag("--serial", [&](std::int64_t) { acc.parallel = false; }, "Run criteria one after another");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) return cmd_run(config, out);
        if (*cmp_cmd) return cmd_compare(config, strategies, out);
        return cmd_acceptance(out, acc);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const SimulationError& e) {
        std::cerr << "simulation error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
