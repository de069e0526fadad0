#include <doctest.h>

#include <limits>
#include <random>

#include <gaintune/qp/dense_qp.h>

using namespace gaintune;

namespace {

Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n)
{
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            A(i, j) = g(rng);
    return A * A.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
}

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int r, int c)
{
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd A(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            A(i, j) = g(rng);
    return A;
}

/// Exhaustive active-set enumeration: the minimum objective over all subsets
/// whose equality-constrained KKT point is primal feasible.
double enumeration_oracle(const qp::Problem& p, Eigen::VectorXd& best_x)
{
    const Eigen::Index n = p.variables();
    const Eigen::Index me = p.eq_matrix.rows();
    const Eigen::Index mi = p.ineq_matrix.rows();
    double best = std::numeric_limits<double>::infinity();
    for (unsigned mask = 0; mask < (1u << mi); ++mask)
    {
        std::vector<Eigen::Index> rows;
        for (Eigen::Index i = 0; i < mi; ++i)
            if (mask & (1u << i))
                rows.push_back(i);
        const Eigen::Index k = me + static_cast<Eigen::Index>(rows.size());
        if (k > n)
            continue;
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + k);
        K.topLeftCorner(n, n) = p.hessian;
        rhs.head(n) = -p.gradient;
        for (Eigen::Index e = 0; e < me; ++e)
        {
            K.block(n + e, 0, 1, n) = p.eq_matrix.row(e);
            K.block(0, n + e, n, 1) = p.eq_matrix.row(e).transpose();
            rhs(n + e) = p.eq_vector(e);
        }
        for (size_t r = 0; r < rows.size(); ++r)
        {
            const Eigen::Index at = n + me + static_cast<Eigen::Index>(r);
            K.block(at, 0, 1, n) = p.ineq_matrix.row(rows[r]);
            K.block(0, at, n, 1) = p.ineq_matrix.row(rows[r]).transpose();
            rhs(at) = p.ineq_upper(rows[r]);
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
        if (!lu.isInvertible())
            continue;
        const Eigen::VectorXd sol = lu.solve(rhs);
        const Eigen::VectorXd x = sol.head(n);
        if (mi > 0 && (p.ineq_matrix * x - p.ineq_upper).maxCoeff() > 1e-9)
            continue;
        const double f = p.objective(x);
        if (f < best)
        {
            best = f;
            best_x = x;
        }
    }
    return best;
}

} // namespace

TEST_CASE("unconstrained problem returns the Newton point")
{
    std::mt19937_64 rng(1);
    qp::Problem p;
    p.hessian = random_spd(rng, 5);
    p.gradient = random_matrix(rng, 5, 1);
    const qp::Result r = qp::solve(p);
    REQUIRE(r.ok());
    CHECK((r.x + p.hessian.ldlt().solve(p.gradient)).norm() < 1e-10);
}

TEST_CASE("random inequality and equality QPs match active-set enumeration")
{
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> dim(2, 5);
    int solved = 0;
    for (int trial = 0; trial < 300; ++trial)
    {
        const int n = dim(rng);
        const int me = trial % 3 == 0 ? 1 : 0;
        const int mi = 3 + trial % 6;
        qp::Problem p;
        p.hessian = random_spd(rng, n);
        p.gradient = 3.0 * random_matrix(rng, n, 1);
        p.eq_matrix = random_matrix(rng, me, n);
        p.eq_vector = random_matrix(rng, me, 1);
        p.ineq_matrix = random_matrix(rng, mi, n);
        p.ineq_upper = random_matrix(rng, mi, 1).cwiseAbs() * 0.5;
        // keep the instance feasible: x0 with A x0 = b satisfies C x0 <= d
        Eigen::VectorXd best;
        const double oracle = enumeration_oracle(p, best);
        const qp::Result r = qp::solve(p);
        if (!std::isfinite(oracle))
        {
            CHECK(r.status == qp::Status::Infeasible);
            continue;
        }
        REQUIRE(r.ok());
        ++solved;
        CHECK(p.objective(r.x) == doctest::Approx(oracle).epsilon(1e-9));
        CHECK(qp::constraint_violation(p, r.x) <= 1e-9);
        CHECK(qp::stationarity_residual(p, r) <= 1e-8);
        CHECK(r.ineq_multipliers.minCoeff() >= 0.0);
        // complementary slackness
        const Eigen::VectorXd slack = p.ineq_upper - p.ineq_matrix * r.x;
        CHECK(r.ineq_multipliers.cwiseProduct(slack).cwiseAbs().maxCoeff() <= 1e-8);
    }
    CHECK(solved > 200);
}

TEST_CASE("contradictory bounds are reported infeasible")
{
    qp::Problem p;
    p.hessian = Eigen::MatrixXd::Identity(1, 1);
    p.gradient = Eigen::VectorXd::Zero(1);
    p.ineq_matrix = (Eigen::MatrixXd(2, 1) << 1.0, -1.0).finished();
    p.ineq_upper = (Eigen::VectorXd(2) << -1.0, -1.0).finished(); // x <= -1 and x >= 1
    CHECK(qp::solve(p).status == qp::Status::Infeasible);

    qp::Problem q;
    q.hessian = Eigen::MatrixXd::Identity(2, 2);
    q.gradient = Eigen::VectorXd::Zero(2);
    q.eq_matrix = (Eigen::MatrixXd(2, 2) << 1.0, 1.0, 2.0, 2.0).finished();
    q.eq_vector = (Eigen::VectorXd(2) << 1.0, 3.0).finished();
    CHECK(qp::solve(q).status == qp::Status::Infeasible);
}

TEST_CASE("dependent consistent equalities and a singular Hessian on their range")
{
    // H is singular in x0 but x0 is fixed by the equality rows.
    qp::Problem p;
    p.hessian = Eigen::Vector3d(0.0, 1.0, 2.0).asDiagonal();
    p.gradient = Eigen::Vector3d(5.0, -1.0, 1.0);
    p.eq_matrix = (Eigen::MatrixXd(2, 3) << 1.0, 0.0, 0.0, 2.0, 0.0, 0.0).finished();
    p.eq_vector = Eigen::Vector2d(0.5, 1.0);
    p.ineq_matrix = (Eigen::MatrixXd(1, 3) << 0.0, 1.0, 0.0).finished();
    p.ineq_upper = Eigen::VectorXd::Constant(1, 0.25);
    const qp::Result r = qp::solve(p);
    REQUIRE(r.ok());
    CHECK((r.x - Eigen::Vector3d(0.5, 0.25, -0.5)).norm() < 1e-12);
    CHECK(qp::stationarity_residual(p, r) < 1e-12);
}

TEST_CASE("indefinite reduced Hessian is rejected")
{
    qp::Problem p;
    p.hessian = Eigen::Vector2d(1.0, -1.0).asDiagonal();
    p.gradient = Eigen::Vector2d::Zero();
    CHECK(qp::solve(p).status == qp::Status::NotConvex);
}

TEST_CASE("duplicated constraints do not stall the active set")
{
    qp::Problem p;
    p.hessian = Eigen::MatrixXd::Identity(2, 2);
    p.gradient = Eigen::Vector2d(-2.0, -2.0);
    p.ineq_matrix = (Eigen::MatrixXd(4, 2) << 1, 0, 1, 0, 0, 1, 1, 1).finished();
    p.ineq_upper = Eigen::Vector4d(0.5, 0.5, 0.5, 0.9);
    const qp::Result r = qp::solve(p);
    REQUIRE(r.ok());
    CHECK((r.x - Eigen::Vector2d(0.45, 0.45)).norm() < 1e-12);
}

TEST_CASE("dimension mismatch throws")
{
    qp::Problem p;
    p.hessian = Eigen::MatrixXd::Identity(2, 2);
    p.gradient = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(qp::solve(p), std::invalid_argument);
}
