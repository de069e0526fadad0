#include <gaintune/qp/dense_qp.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace gaintune::qp {

double Problem::objective(const Eigen::VectorXd& x) const
{
    return 0.5 * x.dot(hessian * x) + gradient.dot(x);
}

const char* to_string(Status status)
{
    switch (status)
    {
    case Status::Optimal:
        return "optimal";
    case Status::Infeasible:
        return "infeasible";
    case Status::MaxIterations:
        return "max_iterations";
    case Status::NotConvex:
        return "not_convex";
    }
    return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_dimensions(const Problem& p)
{
    const Eigen::Index n = p.gradient.size();
    if (p.hessian.rows() != n || p.hessian.cols() != n)
    {
        throw std::invalid_argument("qp: Hessian must be n x n");
    }
    if (p.eq_matrix.rows() != p.eq_vector.size() || (p.eq_matrix.rows() > 0 && p.eq_matrix.cols() != n))
    {
        throw std::invalid_argument("qp: equality block has inconsistent dimensions");
    }
    if (p.ineq_matrix.rows() != p.ineq_upper.size()
        || (p.ineq_matrix.rows() > 0 && p.ineq_matrix.cols() != n))
    {
        throw std::invalid_argument("qp: inequality block has inconsistent dimensions");
    }
}

/// Givens rotation (c, s) with [c s; -s c] [a; b] = [r; 0].
void givens(double a, double b, double& c, double& s)
{
    if (b == 0.0)
    {
        c = 1.0;
        s = 0.0;
        return;
    }
    const double r = std::hypot(a, b);
    c = a / r;
    s = b / r;
}

struct DualResult
{
    Status status{Status::Infeasible};
    Eigen::VectorXd y;
    Eigen::VectorXd multipliers; ///< one per inequality row, >= 0
    int iterations{0};
    int active{0};
};

/// Goldfarb-Idnani for min 1/2 y'Gy + a'y s.t. C y <= d, G positive definite.
DualResult goldfarb_idnani(const Eigen::MatrixXd& G, const Eigen::VectorXd& a,
                           const Eigen::MatrixXd& C, const Eigen::VectorXd& dvec,
                           const Options& options)
{
    DualResult out;
    const Eigen::Index n = a.size();
    const Eigen::Index m = C.rows();

    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success)
    {
        out.status = Status::NotConvex;
        return out;
    }
    // J = L^{-T}
    Eigen::MatrixXd J = Eigen::MatrixXd::Identity(n, n);
    llt.matrixU().solveInPlace(J);

    Eigen::VectorXd y = -llt.solve(a);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
    std::vector<Eigen::Index> active;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n); // multipliers of the active set, by position
    out.multipliers = Eigen::VectorXd::Zero(m);

    Eigen::VectorXd row_norm(m);
    for (Eigen::Index i = 0; i < m; ++i)
    {
        row_norm(i) = std::max(C.row(i).norm(), 1e-300);
    }

    auto drop = [&] (Eigen::Index l)
    {
        const auto q = static_cast<Eigen::Index>(active.size());
        for (Eigen::Index j = l; j + 1 < q; ++j)
        {
            double c = 0.0;
            double s = 0.0;
            givens(R(j, j + 1), R(j + 1, j + 1), c, s);
            for (Eigen::Index k = j + 1; k < q; ++k)
            {
                const double r1 = R(j, k);
                const double r2 = R(j + 1, k);
                R(j, k) = c * r1 + s * r2;
                R(j + 1, k) = -s * r1 + c * r2;
            }
            for (Eigen::Index k = 0; k < n; ++k)
            {
                const double j1 = J(k, j);
                const double j2 = J(k, j + 1);
                J(k, j) = c * j1 + s * j2;
                J(k, j + 1) = -s * j1 + c * j2;
            }
        }
        // shift the columns of R and the multipliers left
        for (Eigen::Index k = l; k + 1 < q; ++k)
        {
            R.col(k) = R.col(k + 1);
            u(k) = u(k + 1);
        }
        R.col(q - 1).setZero();
        u(q - 1) = 0.0;
        active.erase(active.begin() + l);
    };

    int iteration = 0;
    while (true)
    {
        // Select the most violated inequality (C y <= d as n'y >= b with n = -C_i).
        Eigen::Index p = -1;
        double worst = -options.feasibility_tolerance;
        for (Eigen::Index i = 0; i < m; ++i)
        {
            const double s = (dvec(i) - C.row(i).dot(y)) / row_norm(i);
            if (s < worst)
            {
                worst = s;
                p = i;
            }
        }
        if (p < 0)
        {
            break;
        }

        double u_p = 0.0;
        const Eigen::VectorXd np = -C.row(p).transpose();
        const double bp = -dvec(p);

        while (true)
        {
            if (++iteration > options.max_iterations)
            {
                out.status = Status::MaxIterations;
                out.y = y;
                out.iterations = iteration;
                return out;
            }
            const auto q = static_cast<Eigen::Index>(active.size());
            const Eigen::VectorXd d = J.transpose() * np;
            const Eigen::VectorXd z = J.rightCols(n - q) * d.tail(n - q);
            Eigen::VectorXd r = Eigen::VectorXd::Zero(q);
            if (q > 0)
            {
                r = R.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(d.head(q));
            }

            // Dual step limit from active constraints whose multiplier would turn negative.
            double t1 = kInf;
            Eigen::Index l = -1;
            for (Eigen::Index j = 0; j < q; ++j)
            {
                if (r(j) > 1e-14)
                {
                    const double ratio = u(j) / r(j);
                    if (ratio < t1)
                    {
                        t1 = ratio;
                        l = j;
                    }
                }
            }

            const double dz = d.tail(n - q).squaredNorm();
            double t2 = kInf;
            if (dz > 1e-24)
            {
                t2 = (bp - np.dot(y)) / dz;
            }

            const double t = std::min(t1, t2);
            if (t == kInf)
            {
                out.status = Status::Infeasible;
                out.y = y;
                out.iterations = iteration;
                return out;
            }

            if (t2 == kInf)
            {
                // partial step in dual space only
                u.head(q) -= t * r;
                u_p += t;
                drop(l);
                continue;
            }

            y += t * z;
            u.head(q) -= t * r;
            u_p += t;

            if (t2 <= t1)
            {
                // full step: add p to the active set
                Eigen::VectorXd dd = d;
                for (Eigen::Index j = n - 1; j > q; --j)
                {
                    double c = 0.0;
                    double s = 0.0;
                    givens(dd(j - 1), dd(j), c, s);
                    dd(j - 1) = c * dd(j - 1) + s * dd(j);
                    dd(j) = 0.0;
                    for (Eigen::Index k = 0; k < n; ++k)
                    {
                        const double j1 = J(k, j - 1);
                        const double j2 = J(k, j);
                        J(k, j - 1) = c * j1 + s * j2;
                        J(k, j) = -s * j1 + c * j2;
                    }
                }
                R.col(q).head(q + 1) = dd.head(q + 1);
                u(q) = u_p;
                active.push_back(p);
                break;
            }

            // partial step: drop the blocking constraint and retry p
            drop(l);
        }
    }

    for (size_t k = 0; k < active.size(); ++k)
    {
        out.multipliers(active[k]) = u(static_cast<Eigen::Index>(k));
    }
    out.status = Status::Optimal;
    out.y = y;
    out.iterations = iteration;
    out.active = static_cast<int>(active.size());
    return out;
}

} // namespace

Result solve(const Problem& problem, const Options& options)
{
    check_dimensions(problem);
    const Eigen::Index n = problem.variables();
    const Eigen::Index me = problem.eq_matrix.rows();
    const Eigen::Index mi = problem.ineq_matrix.rows();

    Result result;
    result.eq_multipliers = Eigen::VectorXd::Zero(me);
    result.ineq_multipliers = Eigen::VectorXd::Zero(mi);

    Eigen::VectorXd x_p = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd Z = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd Q1;
    Eigen::MatrixXd R11;
    Eigen::PermutationMatrix<Eigen::Dynamic> perm;
    Eigen::Index rank = 0;

    if (me > 0)
    {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(problem.eq_matrix.transpose());
        qr.setThreshold(options.rank_tolerance);
        rank = qr.rank();
        const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
        const Eigen::MatrixXd Rfull = qr.matrixR().topRows(std::min(n, me)).template triangularView<Eigen::Upper>();
        perm = qr.colsPermutation();
        const Eigen::VectorXd pb = perm.transpose() * problem.eq_vector;

        Q1 = Q.leftCols(rank);
        R11 = Rfull.topLeftCorner(rank, rank);
        Eigen::VectorXd y1 = Eigen::VectorXd::Zero(rank);
        if (rank > 0)
        {
            y1 = R11.transpose().triangularView<Eigen::Lower>().solve(pb.head(rank));
        }
        x_p = Q1 * y1;
        Z = Q.rightCols(n - rank);

        if ((problem.eq_matrix * x_p - problem.eq_vector).cwiseAbs().maxCoeff() > options.equality_tolerance)
        {
            result.status = Status::Infeasible;
            result.x = x_p;
            return result;
        }
    }

    const Eigen::Index nz = Z.cols();
    Eigen::VectorXd y = Eigen::VectorXd::Zero(nz);
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(mi);

    if (nz > 0)
    {
        const Eigen::MatrixXd HZ = problem.hessian * Z;
        const Eigen::MatrixXd G = Z.transpose() * HZ;
        const Eigen::VectorXd a = Z.transpose() * (problem.hessian * x_p + problem.gradient);
        Eigen::MatrixXd C(mi, nz);
        Eigen::VectorXd d(mi);
        if (mi > 0)
        {
            C = problem.ineq_matrix * Z;
            d = problem.ineq_upper - problem.ineq_matrix * x_p;
        }
        DualResult dual = goldfarb_idnani(0.5 * (G + G.transpose()), a, C, d, options);
        result.iterations = dual.iterations;
        result.active_inequalities = dual.active;
        if (dual.status != Status::Optimal)
        {
            result.status = dual.status;
            result.x = x_p + Z * (dual.y.size() == nz ? dual.y : Eigen::VectorXd::Zero(nz));
            return result;
        }
        y = dual.y;
        mu = dual.multipliers;
    }

    result.x = x_p + Z * y;
    result.ineq_multipliers = mu;

    if (nz == 0 && mi > 0)
    {
        const Eigen::VectorXd slack = problem.ineq_upper - problem.ineq_matrix * result.x;
        for (Eigen::Index i = 0; i < mi; ++i)
        {
            if (slack(i) < -options.feasibility_tolerance * std::max(1.0, problem.ineq_matrix.row(i).norm()))
            {
                result.status = Status::Infeasible;
                return result;
            }
        }
    }

    if (me > 0 && rank > 0)
    {
        // A' lambda = -(Hx + g + C' mu), solved on the independent rows.
        Eigen::VectorXd rhs = -(problem.hessian * result.x + problem.gradient);
        if (mi > 0)
        {
            rhs -= problem.ineq_matrix.transpose() * mu;
        }
        // A' P = Q1 [R11 R12]  =>  A' lambda = Q1 R11 (P' lambda)_{1:r} when dependent rows carry zero.
        const Eigen::VectorXd w = R11.triangularView<Eigen::Upper>().solve(Q1.transpose() * rhs);
        Eigen::VectorXd permuted = Eigen::VectorXd::Zero(me);
        permuted.head(rank) = w;
        result.eq_multipliers = perm * permuted;
    }

    result.status = Status::Optimal;
    return result;
}

double stationarity_residual(const Problem& problem, const Result& result)
{
    Eigen::VectorXd r = problem.hessian * result.x + problem.gradient;
    if (problem.eq_matrix.rows() > 0)
    {
        r += problem.eq_matrix.transpose() * result.eq_multipliers;
    }
    if (problem.ineq_matrix.rows() > 0)
    {
        r += problem.ineq_matrix.transpose() * result.ineq_multipliers;
    }
    return r.size() == 0 ? 0.0 : r.cwiseAbs().maxCoeff();
}

double constraint_violation(const Problem& problem, const Eigen::VectorXd& x)
{
    double v = 0.0;
    if (problem.eq_matrix.rows() > 0)
    {
        v = std::max(v, (problem.eq_matrix * x - problem.eq_vector).cwiseAbs().maxCoeff());
    }
    if (problem.ineq_matrix.rows() > 0)
    {
        v = std::max(v, (problem.ineq_matrix * x - problem.ineq_upper).maxCoeff());
    }
    return v;
}

} // namespace gaintune::qp
