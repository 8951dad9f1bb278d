#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace opinionctl::oracle {

struct LpSolution {
    bool feasible = false;
    double objective = 0.0;
    Eigen::VectorXd z;
    std::size_t basic_solutions = 0;  ///< feasible bases visited
};

/**
 * min c^T z  s.t.  A z = b, z >= 0, by enumerating every basis of A.
 * Exponential in the number of columns; meant for cross-checking small LPs
 * whose feasible set is bounded.
 */
LpSolution enumerate_vertices(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                              double tol = 1e-10);

/// Optimal value and minimiser of min c.u over |u_i| <= alpha, sum m_i u_i = 0.
LpSolution box_hyperplane(const Eigen::VectorXd& c, const Eigen::VectorXd& m, double alpha);

/// Optimal value and minimiser of min c.u over sum |u_i| <= A, sum m_i u_i = 0.
LpSolution diamond_hyperplane(const Eigen::VectorXd& c, const Eigen::VectorXd& m, double a);

} // namespace opinionctl::oracle
