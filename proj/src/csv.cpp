#include "opinionctl/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace opinionctl {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

void write_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << cells[i];
    }
    os << '\n';
}

std::vector<std::string> trajectory_header(std::size_t n, std::size_t d) {
    std::vector<std::string> h{"t"};
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t k = 1; k <= d; ++k) h.push_back("x_" + std::to_string(i) + "_" + std::to_string(k));
    }
    for (std::size_t i = 1; i <= n; ++i) h.push_back("m_" + std::to_string(i));
    for (std::size_t k = 1; k <= d; ++k) h.push_back("bary_" + std::to_string(k));
    h.insert(h.end(), {"dist_target", "diameter", "total_mass"});
    return h;
}

std::vector<std::string> controls_header(std::size_t n) {
    std::vector<std::string> h{"t"};
    for (std::size_t i = 1; i <= n; ++i) h.push_back("u_" + std::to_string(i));
    h.insert(h.end(), {"active_count", "objective_dXdt"});
    return h;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    if (traj.samples.empty()) return;
    const auto n = traj.front().x.rows();
    const auto d = traj.front().x.cols();
    write_row(os, trajectory_header(static_cast<std::size_t>(n), static_cast<std::size_t>(d)));
    std::vector<std::string> row;
    for (const Sample& s : traj.samples) {
        row.clear();
        row.push_back(format_double(s.t));
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index k = 0; k < d; ++k) row.push_back(format_double(s.x(i, k)));
        }
        for (Eigen::Index i = 0; i < n; ++i) row.push_back(format_double(s.m[i]));
        for (Eigen::Index k = 0; k < d; ++k) row.push_back(format_double(s.bary[k]));
        row.push_back(format_double(s.dist_target));
        row.push_back(format_double(s.diameter));
        row.push_back(format_double(s.total_mass));
        write_row(os, row);
    }
}

void write_controls_csv(std::ostream& os, const Trajectory& traj) {
    if (traj.samples.empty()) return;
    const auto n = traj.front().u.size();
    write_row(os, controls_header(static_cast<std::size_t>(n)));
    std::vector<std::string> row;
    for (const Sample& s : traj.samples) {
        row.clear();
        row.push_back(format_double(s.t));
        for (Eigen::Index i = 0; i < n; ++i) row.push_back(format_double(s.u[i]));
        row.push_back(std::to_string(s.active_count));
        row.push_back(format_double(s.objective_dxdt));
        write_row(os, row);
    }
}

} // namespace opinionctl
