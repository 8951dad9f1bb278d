#include "opinionctl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace opinionctl {

Point barycenter(const Positions& x, const Eigen::Ref<const Eigen::VectorXd>& m) {
    const double total = m.sum();
    if (!(total > 0.0)) throw std::invalid_argument("barycenter needs a positive total weight");
    return (x.transpose() * m) / total;
}

// ---------------------------------------------------------------------------
// 2D hull

namespace {

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const double dx = b[0] - a[0];
    const double dy = b[1] - a[1];
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) {
        t = std::clamp(((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2, 0.0, 1.0);
    }
    return std::hypot(p[0] - (a[0] + t * dx), p[1] - (a[1] + t * dy));
}

} // namespace

Hull2D hull_2d(const Positions& points) {
    if (points.cols() != 2) throw std::invalid_argument("hull_2d needs 2D points");
    if (points.rows() < 1) throw std::invalid_argument("hull_2d needs at least one point");

    std::vector<Vec2> pts(static_cast<std::size_t>(points.rows()));
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        pts[static_cast<std::size_t>(i)] = {points(i, 0), points(i, 1)};
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() <= 2) return Hull2D{pts};

    std::vector<Vec2> h(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= 0.0) --k;
        h[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return Hull2D{h};
}

// ---------------------------------------------------------------------------
// Frank-Wolfe membership

namespace {

struct FwResult {
    double dist2;
    double gap;
    std::size_t iterations;
};

constexpr std::size_t kMaxFwIterations = 100000;

// Away-step Frank-Wolfe with exact line search on |X^T xi - q|^2.
FwResult frank_wolfe_distance(const Positions& x, const Eigen::Ref<const Point>& q, double gap_tol) {
    const auto n = x.rows();
    if (n < 1) throw std::invalid_argument("hull needs at least one point");
    if (q.size() != x.cols()) throw std::invalid_argument("query dimension mismatch");

    Eigen::Index start = 0;
    ((x.rowwise() - q.transpose()).rowwise().squaredNorm()).minCoeff(&start);
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(n);
    xi[start] = 1.0;
    Point p = x.row(start).transpose();

    for (std::size_t it = 0; it < kMaxFwIterations; ++it) {
        const Point r = p - q;
        const Eigen::VectorXd g = 2.0 * (x * r);
        const double g_xi = g.dot(xi);

        Eigen::Index s = 0;
        g.minCoeff(&s);
        Eigen::Index a = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (xi[i] > 0.0 && (a < 0 || g[i] > g[a])) a = i;
        }

        const double fw_gap = g_xi - g[s];
        // The iterate lies in the hull, so |r|^2 <= gap_tol already certifies dist <= tol.
        // Interior queries would otherwise have to push |r| below rounding.
        const double f = r.squaredNorm();
        if (fw_gap < gap_tol || f <= gap_tol) return {f, std::max(fw_gap, 0.0), it};

        const double away_gap = g[a] - g_xi;
        Point dir;
        double gamma_max = 1.0;
        bool away = false;
        if (fw_gap >= away_gap) {
            dir = x.row(s).transpose() - p;
        } else {
            away = true;
            dir = p - x.row(a).transpose();
            gamma_max = xi[a] / (1.0 - xi[a]);
        }
        const double dd = dir.squaredNorm();
        if (dd == 0.0) return {r.squaredNorm(), std::max(fw_gap, 0.0), it};
        const double gamma = std::clamp(-r.dot(dir) / dd, 0.0, gamma_max);

        if (!away) {
            xi *= (1.0 - gamma);
            xi[s] += gamma;
        } else {
            xi *= (1.0 + gamma);
            xi[a] -= gamma;
            if (gamma == gamma_max) xi[a] = 0.0;
        }
        xi = xi.cwiseMax(0.0);
        xi /= xi.sum();
        p = x.transpose() * xi;
    }
    throw MembershipStalled();
}

// Wolfe's minimum-norm-point algorithm on conv{x_i - q}: finite, and exact up to
// rounding where Frank-Wolfe crawls (thin hulls, queries near a facet).
double wolfe_distance(const Positions& x, const Eigen::Ref<const Point>& q) {
    const Eigen::MatrixXd y = (x.rowwise() - q.transpose()).transpose();  // d x n
    const auto n = y.cols();
    const double scale2 = y.colwise().squaredNorm().maxCoeff();
    const double eps = 1e-14 * std::max(scale2, 1e-300);

    std::vector<Eigen::Index> support;
    Eigen::VectorXd lambda;
    Eigen::Index first = 0;
    y.colwise().squaredNorm().minCoeff(&first);
    support.push_back(first);
    lambda = Eigen::VectorXd::Ones(1);
    Point p = y.col(first);

    for (int major = 0; major < 10 * static_cast<int>(n) + 100; ++major) {
        Eigen::Index j = 0;
        (y.transpose() * p).minCoeff(&j);
        if (p.squaredNorm() - p.dot(y.col(j)) <= eps) break;
        if (std::find(support.begin(), support.end(), j) != support.end()) break;
        support.push_back(j);
        lambda.conservativeResize(lambda.size() + 1);
        lambda[lambda.size() - 1] = 0.0;

        for (int minor = 0; minor < static_cast<int>(n) + 1; ++minor) {
            const auto k = static_cast<Eigen::Index>(support.size());
            Eigen::MatrixXd ys(y.rows(), k);
            for (Eigen::Index i = 0; i < k; ++i) ys.col(i) = y.col(support[i]);
            // Affine minimum-norm point: [G 1; 1^T 0] [a; mu] = [0; 1].
            Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
            kkt.topLeftCorner(k, k) = ys.transpose() * ys;
            kkt.topRightCorner(k, 1).setOnes();
            kkt.bottomLeftCorner(1, k).setOnes();
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
            rhs[k] = 1.0;
            const Eigen::VectorXd alpha = kkt.completeOrthogonalDecomposition().solve(rhs).head(k);

            if ((alpha.array() > 0.0).all()) {
                lambda = alpha;
                break;
            }
            double theta = 1.0;
            for (Eigen::Index i = 0; i < k; ++i) {
                if (alpha[i] <= 0.0) theta = std::min(theta, lambda[i] / (lambda[i] - alpha[i]));
            }
            lambda += theta * (alpha - lambda);
            std::vector<Eigen::Index> kept;
            std::vector<double> kept_lambda;
            for (Eigen::Index i = 0; i < k; ++i) {
                if (lambda[i] > 1e-15) {
                    kept.push_back(support[i]);
                    kept_lambda.push_back(lambda[i]);
                }
            }
            support = kept;
            lambda = Eigen::Map<Eigen::VectorXd>(kept_lambda.data(), static_cast<Eigen::Index>(kept_lambda.size()));
            lambda /= lambda.sum();
        }
        p = Point::Zero(y.rows());
        for (std::size_t i = 0; i < support.size(); ++i) p += lambda[static_cast<Eigen::Index>(i)] * y.col(support[i]);
    }
    return p.norm();
}

} // namespace

double hull_distance(const Positions& points, const Eigen::Ref<const Point>& q, double tol) {
    return std::sqrt(frank_wolfe_distance(points, q, tol * tol).dist2);
}

MembershipResult hull_contains(const Positions& points, const Eigen::Ref<const Point>& q, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    const FwResult fw = frank_wolfe_distance(points, q, tol * tol);
    const double dist = std::sqrt(fw.dist2);
    Membership where = Membership::outside;
    if (dist <= tol) {
        where = interior_margin(points, q) > tol ? Membership::inside : Membership::boundary;
    }
    return {where, dist, fw.gap, fw.iterations};
}

// ---------------------------------------------------------------------------
// Interior margin

double interior_margin(const Positions& points, const Eigen::Ref<const Point>& q) {
    const auto d = points.cols();
    if (q.size() != d) throw std::invalid_argument("query dimension mismatch");

    if (d == 1) {
        const double lo = points.col(0).minCoeff();
        const double hi = points.col(0).maxCoeff();
        if (q[0] <= lo || q[0] >= hi) return 0.0;
        return std::min(q[0] - lo, hi - q[0]);
    }

    if (d == 2) {
        const Hull2D hull = hull_2d(points);
        const auto& v = hull.vertices;
        if (v.size() < 3) return 0.0;
        const Vec2 p{q[0], q[1]};
        double margin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < v.size(); ++i) {
            const Vec2& a = v[i];
            const Vec2& b = v[(i + 1) % v.size()];
            if (cross(a, b, p) <= 0.0) return 0.0;
            margin = std::min(margin, point_segment_distance(p, a, b));
        }
        return margin;
    }

    // d >= 3: the cross-polytope conv{q +- r e_k} contains the ball of radius r / sqrt(d).
    const double scale = 1.0 + (points.rowwise() - q.transpose()).rowwise().norm().maxCoeff();
    const double tol = 1e-9 * scale;
    auto within = [&](const Point& p) { return wolfe_distance(points, p) <= tol; };
    if (!within(q)) return 0.0;
    auto probes_inside = [&](double r) {
        for (Eigen::Index k = 0; k < d; ++k) {
            for (double sign : {-1.0, 1.0}) {
                Point probe = q;
                probe[k] += sign * r;
                if (!within(probe)) return false;
            }
        }
        return true;
    };
    double lo = 0.0;
    double hi = diameter(points);
    if (hi == 0.0 || !probes_inside(tol)) return 0.0;
    for (int it = 0; it < 60 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        (probes_inside(mid) ? lo : hi) = mid;
    }
    return lo / std::sqrt(static_cast<double>(d));
}

// ---------------------------------------------------------------------------
// Barycentric coordinates

Eigen::VectorXd project_simplex(const Eigen::Ref<const Eigen::VectorXd>& v) {
    const auto n = v.size();
    Eigen::VectorXd sorted = v;
    std::sort(sorted.data(), sorted.data() + n, std::greater<>());
    double cumsum = 0.0;
    double theta = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        cumsum += sorted[k];
        const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
        if (sorted[k] - t > 0.0) theta = t;
    }
    return (v.array() - theta).cwiseMax(0.0).matrix();
}

BarycentricCoords barycentric_coords(const Positions& points, const Eigen::Ref<const Point>& q,
                                     double tau_min) {
    const auto n = points.rows();
    const auto d = points.cols();
    if (n < 1) throw std::invalid_argument("need at least one point");
    if (q.size() != d) throw std::invalid_argument("query dimension mismatch");

    constexpr double kReg = 1e-6;
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));

    // Accelerated projected gradient on the regularised objective.
    const Eigen::MatrixXd gram = points * points.transpose();
    const double lipschitz = 2.0 * (gram.selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff() + kReg);
    const double step = 1.0 / lipschitz;
    const Eigen::VectorXd xq = points * q;
    auto grad = [&](const Eigen::VectorXd& tau) -> Eigen::VectorXd {
        return 2.0 * (gram * tau - xq) + 2.0 * kReg * (tau - uniform);
    };

    Eigen::VectorXd tau = uniform;
    Eigen::VectorXd y = tau;
    double momentum = 1.0;
    for (int it = 0; it < 20000; ++it) {
        const Eigen::VectorXd next = project_simplex(y - step * grad(y));
        const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        y = next + ((momentum - 1.0) / next_momentum) * (next - tau);
        const double change = (next - tau).lpNorm<Eigen::Infinity>();
        tau = next;
        momentum = next_momentum;
        if (change < 1e-15) break;
    }

    // Minimum-norm correction on the support: enforce X^T tau = q and sum tau = 1.
    Eigen::MatrixXd constraints(d + 1, n);
    constraints.topRows(d) = points.transpose();
    constraints.row(d).setOnes();
    Eigen::VectorXd rhs(d + 1);
    rhs.head(d) = q;
    rhs[d] = 1.0;

    for (int pass = 0; pass < 8; ++pass) {
        std::vector<Eigen::Index> support;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (tau[i] > 1e-12) support.push_back(i);
        }
        if (support.empty()) break;
        Eigen::MatrixXd sub(d + 1, static_cast<Eigen::Index>(support.size()));
        for (std::size_t c = 0; c < support.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = constraints.col(support[c]);
        Eigen::VectorXd tau_s(static_cast<Eigen::Index>(support.size()));
        for (std::size_t c = 0; c < support.size(); ++c) tau_s[static_cast<Eigen::Index>(c)] = tau[support[c]];

        const Eigen::VectorXd defect = sub * tau_s - rhs;
        const Eigen::VectorXd fix = sub.completeOrthogonalDecomposition().solve(defect);
        tau_s -= fix;

        Eigen::VectorXd candidate = Eigen::VectorXd::Zero(n);
        for (std::size_t c = 0; c < support.size(); ++c) candidate[support[c]] = tau_s[static_cast<Eigen::Index>(c)];
        const bool nonneg = (candidate.array() >= 0.0).all();
        tau = candidate.cwiseMax(0.0);
        if (nonneg) break;
    }

    BarycentricCoords out{tau, (points.transpose() * tau - q).norm()};
    const double sum_err = std::abs(tau.sum() - 1.0);
    if (out.residual > 1e-8 * (1.0 + q.norm()) || sum_err > 1e-12) {
        throw BarycentricError("target outside hull");
    }
    if (tau.minCoeff() < tau_min) {
        throw BarycentricError("target too close to boundary for strictly positive coefficients");
    }
    return out;
}

} // namespace opinionctl
