#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace opinionctl {

struct AcceptanceRow {
    int id;
    std::string name;
    double measured;
    double bound;
    bool passed;
    std::string note;
};

struct AcceptanceOptions {
    /// Coarse step of the integrator-order check; the check compares h and h/2.
    double order_h = 0.1;
    /// Run the order check on a sample-and-hold feedback law instead of the
    /// smooth uncontrolled system. The held control is discontinuous across
    /// steps, so the measured order drops and the check is expected to fail.
    bool order_negative_control = false;
    /// Run the criteria concurrently.
    bool parallel = true;
};

inline constexpr int kAcceptanceCriteria = 13;

/// Runs one criterion (1-based id). Exceptions become failed rows.
AcceptanceRow run_criterion(int id, const AcceptanceOptions& options = {});

std::vector<AcceptanceRow> run_acceptance(const AcceptanceOptions& options = {});

void write_acceptance_csv(std::ostream& os, const std::vector<AcceptanceRow>& rows);

/// Writes out_dir/acceptance_report.csv, creating out_dir if needed.
std::filesystem::path write_acceptance_report(const std::filesystem::path& out_dir,
                                              const std::vector<AcceptanceRow>& rows);

} // namespace opinionctl
