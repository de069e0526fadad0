#pragma once

#include <string>

#include <Eigen/Dense>

namespace gaintune::qp {

/// minimize 1/2 x'Hx + g'x  subject to  A x = b,  C x <= d.
struct Problem
{
    Eigen::MatrixXd hessian;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd eq_matrix;
    Eigen::VectorXd eq_vector;
    Eigen::MatrixXd ineq_matrix;
    Eigen::VectorXd ineq_upper;

    Eigen::Index variables() const { return gradient.size(); }
    double objective(const Eigen::VectorXd& x) const;
};

enum class Status
{
    Optimal,
    Infeasible,
    MaxIterations,
    NotConvex,
};

const char* to_string(Status status);

struct Options
{
    int max_iterations{500};
    /// Constraint violation (scaled by the row norm) accepted at the solution.
    double feasibility_tolerance{1e-10};
    /// Relative pivot threshold used to detect dependent equality rows.
    double rank_tolerance{1e-10};
    /// Absolute residual allowed on inconsistent dependent equality rows.
    double equality_tolerance{1e-8};
};

struct Result
{
    Status status{Status::Infeasible};
    Eigen::VectorXd x;
    /// Lagrangian 1/2 x'Hx + g'x + lambda'(Ax - b) + mu'(Cx - d) with mu >= 0.
    Eigen::VectorXd eq_multipliers;
    Eigen::VectorXd ineq_multipliers;
    int iterations{0};
    int active_inequalities{0};

    bool ok() const { return status == Status::Optimal; }
};

/// Dense strictly convex QP solver.
///
/// Equality constraints are eliminated with a column-pivoted QR of A', then the
/// reduced problem is solved by the Goldfarb-Idnani dual active-set method
/// (constraint selection by largest scaled violation, lowest index on ties).
/// The reduced Hessian must be positive definite; otherwise NotConvex is returned.
/// Throws std::invalid_argument on inconsistent dimensions.
Result solve(const Problem& problem, const Options& options = {});

/// Infinity norm of the stationarity residual Hx + g + A'lambda + C'mu.
double stationarity_residual(const Problem& problem, const Result& result);

/// Largest constraint violation max(|Ax - b|, Cx - d, 0).
double constraint_violation(const Problem& problem, const Eigen::VectorXd& x);

} // namespace gaintune::qp
