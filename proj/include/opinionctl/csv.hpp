#pragma once

#include "opinionctl/integrate.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace opinionctl {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

std::vector<std::string> trajectory_header(std::size_t n, std::size_t d);
std::vector<std::string> controls_header(std::size_t n);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_controls_csv(std::ostream& os, const Trajectory& traj);

void write_row(std::ostream& os, const std::vector<std::string>& cells);

} // namespace opinionctl
