#include "opinionctl/oracles.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace opinionctl::oracle {

namespace {

bool next_combination(std::vector<Eigen::Index>& idx, Eigen::Index n) {
    const auto k = static_cast<Eigen::Index>(idx.size());
    for (Eigen::Index i = k - 1; i >= 0; --i) {
        if (idx[i] < n - k + i) {
            ++idx[i];
            for (Eigen::Index j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
            return true;
        }
    }
    return false;
}

} // namespace

LpSolution enumerate_vertices(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                              double tol) {
    const Eigen::Index rows = a.rows();
    const Eigen::Index cols = a.cols();
    if (b.size() != rows || c.size() != cols) throw std::invalid_argument("LP dimensions disagree");
    if (rows > cols) throw std::invalid_argument("LP needs at least as many columns as rows");

    LpSolution best;
    best.objective = std::numeric_limits<double>::infinity();
    std::vector<Eigen::Index> basis(static_cast<std::size_t>(rows));
    for (Eigen::Index i = 0; i < rows; ++i) basis[i] = i;

    Eigen::MatrixXd bm(rows, rows);
    do {
        for (Eigen::Index k = 0; k < rows; ++k) bm.col(k) = a.col(basis[k]);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(bm);
        if (!lu.isInvertible()) continue;
        const Eigen::VectorXd zb = lu.solve(b);
        if ((bm * zb - b).cwiseAbs().maxCoeff() > tol * (1.0 + b.cwiseAbs().maxCoeff())) continue;
        if (zb.minCoeff() < -tol) continue;

        Eigen::VectorXd z = Eigen::VectorXd::Zero(cols);
        for (Eigen::Index k = 0; k < rows; ++k) z[basis[k]] = std::max(zb[k], 0.0);
        ++best.basic_solutions;
        const double obj = c.dot(z);
        if (obj < best.objective) {
            best.objective = obj;
            best.z = z;
            best.feasible = true;
        }
    } while (next_combination(basis, cols));
    return best;
}

LpSolution box_hyperplane(const Eigen::VectorXd& c, const Eigen::VectorXd& m, double alpha) {
    // w = u + alpha in [0, 2 alpha] with slacks s: w + s = 2 alpha, m.w = alpha sum m.
    const Eigen::Index n = c.size();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, 2 * n);
    Eigen::VectorXd b(n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, i) = 1.0;
        a(i, n + i) = 1.0;
        b[i] = 2.0 * alpha;
        a(n, i) = m[i];
    }
    b[n] = alpha * m.sum();
    Eigen::VectorXd cost = Eigen::VectorXd::Zero(2 * n);
    cost.head(n) = c;

    LpSolution sol = enumerate_vertices(a, b, cost);
    if (sol.feasible) {
        const Eigen::VectorXd u = sol.z.head(n).array() - alpha;
        sol.objective = c.dot(u);
        sol.z = u;
    }
    return sol;
}

LpSolution diamond_hyperplane(const Eigen::VectorXd& c, const Eigen::VectorXd& m, double a_bound) {
    // u = p - q with p, q >= 0 and slack s: sum p + sum q + s = A, m.p - m.q = 0.
    const Eigen::Index n = c.size();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2 * n + 1);
    a.row(0).setOnes();
    a.block(1, 0, 1, n) = m.transpose();
    a.block(1, n, 1, n) = -m.transpose();
    Eigen::VectorXd b(2);
    b << a_bound, 0.0;
    Eigen::VectorXd cost = Eigen::VectorXd::Zero(2 * n + 1);
    cost.head(n) = c;
    cost.segment(n, n) = -c;

    LpSolution sol = enumerate_vertices(a, b, cost);
    if (sol.feasible) sol.z = sol.z.head(n) - sol.z.segment(n, n);
    return sol;
}

} // namespace opinionctl::oracle
