#include <gaintune/mpc/centroidal_mpc.h>

#include <cmath>
#include <stdexcept>

#include <gaintune/math/so3.h>

namespace gaintune::mpc {

bool CentroidalState::all_finite() const
{
    return com.allFinite() && momentum.allFinite() && contacts[0].allFinite() && contacts[1].allFinite();
}

bool MpcWeights::valid() const
{
    for (double w : {force_symmetry, force_rate_xy, force_rate_z, momentum_linear_xy, momentum_linear_z,
                     momentum_angular, contact_position})
    {
        if (!(w > 0.0) || !std::isfinite(w))
        {
            return false;
        }
    }
    return true;
}

void MpcConfig::validate() const
{
    if (horizon < 2)
        throw std::invalid_argument("mpc: horizon must be >= 2");
    if (!(sampling > 0.0))
        throw std::invalid_argument("mpc: sampling period must be > 0");
    if (!(friction > 0.0))
        throw std::invalid_argument("mpc: friction coefficient must be > 0");
    if (cone_facets < 3)
        throw std::invalid_argument("mpc: friction cone needs at least 3 facets");
    if (!(mass > 0.0) || !(force_scale > 0.0) || !(momentum_scale > 0.0))
        throw std::invalid_argument("mpc: mass and scales must be > 0");
    if (!(max_contact_speed > 0.0) || !(max_normal_force_factor > 0.0) || !(contact_velocity_weight > 0.0))
        throw std::invalid_argument("mpc: bounds and velocity weight must be > 0");
}

const char* to_string(MpcStatus status)
{
    switch (status)
    {
    case MpcStatus::Ok:
        return "ok";
    case MpcStatus::Infeasible:
        return "infeasible";
    case MpcStatus::NotConverged:
        return "not_converged";
    }
    return "?";
}

double CostBreakdown::total() const
{
    return force_symmetry + force_rate + momentum_linear + momentum_angular + contact_position
           + contact_velocity;
}

CentroidalState integrate_with_lever_arms(const CentroidalState& state, const ControlOutput& input,
                                          double dt, const std::array<bool, kNumContacts>& active,
                                          const ContactVectors& lever_arms, double mass,
                                          const Eigen::Vector3d& gravity)
{
    CentroidalState next = state;
    Vector6d rate = Vector6d::Zero();
    rate.head<3>() = mass * gravity;
    for (int i = 0; i < kNumContacts; ++i)
    {
        if (active[static_cast<size_t>(i)])
        {
            const Eigen::Vector3d& f = input.forces[static_cast<size_t>(i)];
            rate.head<3>() += f;
            rate.tail<3>() += lever_arms[static_cast<size_t>(i)].cross(f);
        } else
        {
            next.contacts[static_cast<size_t>(i)] += dt * input.velocities[static_cast<size_t>(i)];
        }
    }
    next.momentum += dt * rate;
    next.com += dt * state.momentum.head<3>() / mass;
    return next;
}

CentroidalState integrate_centroidal(const CentroidalState& state, const ControlOutput& input,
                                     double dt, const std::array<bool, kNumContacts>& active,
                                     double mass, const Eigen::Vector3d& gravity)
{
    ContactVectors arms;
    for (size_t i = 0; i < kNumContacts; ++i)
    {
        arms[i] = state.contacts[i] - state.com;
    }
    return integrate_with_lever_arms(state, input, dt, active, arms, mass, gravity);
}

namespace {

Eigen::Matrix3d rate_weight(const MpcWeights& w)
{
    return Eigen::Vector3d(w.force_rate_xy, w.force_rate_xy, w.force_rate_z).asDiagonal();
}

Vector6d momentum_weight(const MpcWeights& w)
{
    Vector6d d;
    d << w.momentum_linear_xy, w.momentum_linear_xy, w.momentum_linear_z, w.momentum_angular,
        w.momentum_angular, w.momentum_angular;
    return d;
}

} // namespace

CostBreakdown cost_terms(const Trajectory& trajectory, const Window& window, const MpcWeights& weights,
                         const MpcConfig& config)
{
    const size_t N = window.steps.size();
    if (trajectory.inputs.size() != N || trajectory.states.size() != N + 1)
    {
        throw std::invalid_argument("cost_terms: trajectory length does not match the window");
    }
    CostBreakdown c;
    const double fs2 = config.force_scale * config.force_scale;
    const double ms2 = config.momentum_scale * config.momentum_scale;
    const Eigen::Matrix3d Wr = rate_weight(weights);

    for (size_t k = 0; k < N; ++k)
    {
        const StepReference& ref = window.steps[k];
        const ControlOutput& u = trajectory.inputs[k];

        Eigen::Vector3d mean = Eigen::Vector3d::Zero();
        int n_active = 0;
        for (size_t i = 0; i < kNumContacts; ++i)
        {
            if (ref.active[i])
            {
                mean += u.forces[i];
                ++n_active;
            }
        }
        if (n_active > 0)
        {
            mean /= n_active;
            for (size_t i = 0; i < kNumContacts; ++i)
            {
                if (ref.active[i])
                {
                    c.force_symmetry += weights.force_symmetry * (u.forces[i] - mean).squaredNorm() / fs2;
                }
            }
        }

        for (size_t i = 0; i < kNumContacts; ++i)
        {
            const Eigen::Vector3d prev = k == 0 ? window.previous_forces[i] : trajectory.inputs[k - 1].forces[i];
            const Eigen::Vector3d d = u.forces[i] - prev;
            c.force_rate += d.dot(Wr * d) / fs2;
            c.contact_velocity += config.contact_velocity_weight * u.velocities[i].squaredNorm();
        }

        const CentroidalState& s = trajectory.states[k + 1];
        const Vector6d e = s.momentum - ref.momentum;
        c.momentum_linear += (weights.momentum_linear_xy * e.head<2>().squaredNorm()
                              + weights.momentum_linear_z * e(2) * e(2))
                             / ms2;
        c.momentum_angular += weights.momentum_angular * e.tail<3>().squaredNorm() / ms2;
        for (size_t i = 0; i < kNumContacts; ++i)
        {
            c.contact_position += weights.contact_position * (s.contacts[i] - ref.contact_nominal[i]).squaredNorm();
        }
    }
    return c;
}

std::vector<ContactVectors> frozen_lever_arms(const CentroidalState& state, const Window& window)
{
    const size_t N = window.steps.size();
    std::vector<ContactVectors> arms(N);
    std::array<bool, kNumContacts> same_phase{true, true};
    for (size_t k = 0; k < N; ++k)
    {
        const StepReference& ref = window.steps[k];
        const Eigen::Vector3d com = state.com + ref.com_offset;
        for (size_t i = 0; i < kNumContacts; ++i)
        {
            if (k > 0 && ref.active[i] != window.steps[k - 1].active[i])
            {
                same_phase[i] = false;
            }
            const Eigen::Vector3d& p = same_phase[i] ? state.contacts[i] : ref.contact_nominal[i];
            arms[k][i] = p - com;
        }
    }
    return arms;
}

ForceQp build_force_qp(const CentroidalState& state, const Window& window, const MpcWeights& weights,
                       const MpcConfig& config)
{
    const int N = static_cast<int>(window.steps.size());
    if (N < 1)
    {
        throw std::invalid_argument("mpc: empty window");
    }

    ForceQp out;
    out.lever_arms = frozen_lever_arms(state, window);
    out.index.resize(static_cast<size_t>(N));
    int n = 0;
    for (int k = 0; k < N; ++k)
    {
        for (int i = 0; i < kNumContacts; ++i)
        {
            out.index[static_cast<size_t>(k)][static_cast<size_t>(i)]
                = window.steps[static_cast<size_t>(k)].active[static_cast<size_t>(i)] ? (n += 3) - 3 : -1;
        }
    }

    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    const double fs2 = config.force_scale * config.force_scale;
    const double ms2 = config.momentum_scale * config.momentum_scale;
    const double dt = config.sampling;

    // Momentum: h[k] = h0 + k dt m g + sum_{j<k} B_j f_j, B = dt [I; r^].
    const Vector6d W = momentum_weight(weights) / ms2;
    Vector6d gravity_rate = Vector6d::Zero();
    gravity_rate.head<3>() = config.mass * config.gravity;

    // suffix[j] = sum_{k=j+1}^{N} W (h_const[k] - h_ref[k])
    std::vector<Vector6d> suffix(static_cast<size_t>(N + 1), Vector6d::Zero());
    for (int k = N; k >= 1; --k)
    {
        const Vector6d e = state.momentum + k * dt * gravity_rate - window.steps[static_cast<size_t>(k - 1)].momentum;
        suffix[static_cast<size_t>(k - 1)] = suffix[static_cast<size_t>(k)] + W.cwiseProduct(e);
    }

    struct Block
    {
        int step;
        int offset;
        Eigen::Matrix<double, 6, 3> B;
    };
    std::vector<Block> blocks;
    for (int k = 0; k < N; ++k)
    {
        for (int i = 0; i < kNumContacts; ++i)
        {
            const int off = out.index[static_cast<size_t>(k)][static_cast<size_t>(i)];
            if (off < 0)
                continue;
            Eigen::Matrix<double, 6, 3> B;
            B.topRows<3>() = dt * Eigen::Matrix3d::Identity();
            B.bottomRows<3>() = dt * skew(out.lever_arms[static_cast<size_t>(k)][static_cast<size_t>(i)]);
            blocks.push_back({k, off, B});
        }
    }
    for (const auto& a : blocks)
    {
        const Eigen::Matrix<double, 3, 6> BtW = a.B.transpose() * W.asDiagonal();
        g.segment<3>(a.offset) += 2.0 * a.B.transpose() * suffix[static_cast<size_t>(a.step)];
        for (const auto& b : blocks)
        {
            if (b.offset < a.offset)
                continue;
            const int count = N - std::max(a.step, b.step);
            const Eigen::Matrix3d block = 2.0 * count * BtW * b.B;
            H.block<3, 3>(a.offset, b.offset) += block;
            if (b.offset != a.offset)
            {
                H.block<3, 3>(b.offset, a.offset) += block.transpose();
            }
        }
    }

    // Symmetry: W_f sum_i |f_i - mean|^2 over the active contacts of each step.
    for (int k = 0; k < N; ++k)
    {
        std::vector<int> offs;
        for (int i = 0; i < kNumContacts; ++i)
        {
            const int off = out.index[static_cast<size_t>(k)][static_cast<size_t>(i)];
            if (off >= 0)
                offs.push_back(off);
        }
        const double na = static_cast<double>(offs.size());
        for (int a : offs)
        {
            for (int b : offs)
            {
                const double p = (a == b ? 1.0 : 0.0) - 1.0 / na;
                H.block<3, 3>(a, b) += 2.0 * weights.force_symmetry / fs2 * p * Eigen::Matrix3d::Identity();
            }
        }
    }

    // Rate of change: f_i[k] - f_i[k-1], inactive contacts count as zero force.
    const Eigen::Matrix3d D = 2.0 * rate_weight(weights) / fs2;
    for (int i = 0; i < kNumContacts; ++i)
    {
        for (int k = 0; k < N; ++k)
        {
            const int cur = out.index[static_cast<size_t>(k)][static_cast<size_t>(i)];
            const int prev = k == 0 ? -1 : out.index[static_cast<size_t>(k - 1)][static_cast<size_t>(i)];
            if (cur >= 0)
            {
                H.block<3, 3>(cur, cur) += D;
                if (k == 0)
                {
                    g.segment<3>(cur) -= D * window.previous_forces[static_cast<size_t>(i)];
                }
            }
            if (prev >= 0)
            {
                H.block<3, 3>(prev, prev) += D;
                if (cur >= 0)
                {
                    H.block<3, 3>(cur, prev) -= D;
                    H.block<3, 3>(prev, cur) -= D;
                }
            }
        }
    }

    // Linearized friction pyramid plus normal force bounds, per active contact.
    const int facets = config.cone_facets;
    const int rows_per = facets + 2;
    const int n_blocks = n / 3;
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(rows_per * n_blocks, n);
    Eigen::VectorXd d = Eigen::VectorXd::Zero(rows_per * n_blocks);
    const double fz_max = config.max_normal_force_factor * config.mass * config.gravity.norm();
    for (int b = 0; b < n_blocks; ++b)
    {
        const int r0 = b * rows_per;
        const int c0 = 3 * b;
        for (int j = 0; j < facets; ++j)
        {
            const double theta = 2.0 * M_PI * j / facets;
            C(r0 + j, c0) = std::cos(theta);
            C(r0 + j, c0 + 1) = std::sin(theta);
            C(r0 + j, c0 + 2) = -config.friction;
        }
        C(r0 + facets, c0 + 2) = -1.0;
        C(r0 + facets + 1, c0 + 2) = 1.0;
        d(r0 + facets + 1) = fz_max;
    }

    out.problem.hessian = 0.5 * (H + H.transpose());
    out.problem.gradient = g;
    out.problem.ineq_matrix = C;
    out.problem.ineq_upper = d;
    return out;
}

namespace {

struct AxisSolution
{
    Eigen::VectorXd velocity;
    double residual{0.0};
    qp::Status status{qp::Status::Optimal};
};

/// One axis of one contact: p[k] = p0 + dt sum_{j<k} (1 - gamma_j) v_j.
AxisSolution solve_contact_axis(double p0, const std::vector<double>& nominal,
                                const std::vector<bool>& active, const MpcWeights& weights,
                                const MpcConfig& config)
{
    const int N = static_cast<int>(nominal.size());
    const double dt = config.sampling;
    qp::Problem p;
    p.hessian = 2.0 * config.contact_velocity_weight * Eigen::MatrixXd::Identity(N, N);
    p.gradient = Eigen::VectorXd::Zero(N);

    // suffix of (p0 - nominal[k]) for k > j
    std::vector<double> suffix(static_cast<size_t>(N + 1), 0.0);
    for (int k = N; k >= 1; --k)
    {
        suffix[static_cast<size_t>(k - 1)] = suffix[static_cast<size_t>(k)] + (p0 - nominal[static_cast<size_t>(k - 1)]);
    }
    for (int j = 0; j < N; ++j)
    {
        if (active[static_cast<size_t>(j)])
            continue;
        p.gradient(j) += 2.0 * weights.contact_position * dt * suffix[static_cast<size_t>(j)];
        for (int l = 0; l < N; ++l)
        {
            if (active[static_cast<size_t>(l)])
                continue;
            p.hessian(j, l) += 2.0 * weights.contact_position * (N - std::max(j, l)) * dt * dt;
        }
    }
    p.ineq_matrix.resize(2 * N, N);
    p.ineq_matrix << Eigen::MatrixXd::Identity(N, N), -Eigen::MatrixXd::Identity(N, N);
    p.ineq_upper = Eigen::VectorXd::Constant(2 * N, config.max_contact_speed);

    const qp::Result r = qp::solve(p, config.qp);
    AxisSolution out;
    out.status = r.status;
    out.velocity = r.ok() ? r.x : Eigen::VectorXd::Zero(N);
    out.residual = r.ok() ? qp::stationarity_residual(p, r) : 0.0;
    return out;
}

} // namespace

MpcSolution solve(const CentroidalState& state, const Window& window, const MpcWeights& weights,
                  const MpcConfig& config)
{
    if (!weights.valid())
    {
        throw std::invalid_argument("mpc: weights must be strictly positive");
    }
    MpcSolution sol;
    const int N = static_cast<int>(window.steps.size());

    const ForceQp fq = build_force_qp(state, window, weights, config);
    const qp::Result fr = qp::solve(fq.problem, config.qp);
    if (!fr.ok())
    {
        sol.status = fr.status == qp::Status::MaxIterations ? MpcStatus::NotConverged : MpcStatus::Infeasible;
        return sol;
    }
    sol.kkt_residual = qp::stationarity_residual(fq.problem, fr);

    Trajectory& traj = sol.predicted;
    traj.inputs.assign(static_cast<size_t>(N), ControlOutput{});
    for (int k = 0; k < N; ++k)
    {
        for (int i = 0; i < kNumContacts; ++i)
        {
            const int off = fq.index[static_cast<size_t>(k)][static_cast<size_t>(i)];
            if (off >= 0)
            {
                traj.inputs[static_cast<size_t>(k)].forces[static_cast<size_t>(i)] = fr.x.segment<3>(off);
            }
        }
    }
    sol.cone_slack = fq.problem.ineq_matrix.rows() > 0
                         ? (fq.problem.ineq_upper - fq.problem.ineq_matrix * fr.x).minCoeff()
                         : 0.0;

    for (int i = 0; i < kNumContacts; ++i)
    {
        std::vector<bool> active(static_cast<size_t>(N));
        for (int k = 0; k < N; ++k)
        {
            active[static_cast<size_t>(k)] = window.steps[static_cast<size_t>(k)].active[static_cast<size_t>(i)];
        }
        for (int a = 0; a < 3; ++a)
        {
            std::vector<double> nominal(static_cast<size_t>(N));
            for (int k = 0; k < N; ++k)
            {
                nominal[static_cast<size_t>(k)] = window.steps[static_cast<size_t>(k)].contact_nominal[static_cast<size_t>(i)](a);
            }
            const AxisSolution ax = solve_contact_axis(state.contacts[static_cast<size_t>(i)](a), nominal, active, weights, config);
            if (ax.status != qp::Status::Optimal)
            {
                sol.status = ax.status == qp::Status::MaxIterations ? MpcStatus::NotConverged : MpcStatus::Infeasible;
                return sol;
            }
            sol.kkt_residual = std::max(sol.kkt_residual, ax.residual);
            for (int k = 0; k < N; ++k)
            {
                traj.inputs[static_cast<size_t>(k)].velocities[static_cast<size_t>(i)](a) = ax.velocity(k);
            }
        }
    }

    traj.states.assign(1, state);
    for (int k = 0; k < N; ++k)
    {
        traj.states.push_back(integrate_with_lever_arms(traj.states.back(), traj.inputs[static_cast<size_t>(k)],
                                                        config.sampling, window.steps[static_cast<size_t>(k)].active,
                                                        fq.lever_arms[static_cast<size_t>(k)], config.mass,
                                                        config.gravity));
    }
    sol.first = traj.inputs.front();
    sol.cost = cost_terms(traj, window, weights, config);
    sol.status = MpcStatus::Ok;
    return sol;
}

CentroidalMpc::CentroidalMpc(MpcConfig config, MpcWeights weights)
    : m_config(std::move(config))
    , m_weights(weights)
{
    m_config.validate();
    if (!m_weights.valid())
    {
        throw std::invalid_argument("mpc: weights must be strictly positive");
    }
    const double half = 0.5 * m_config.mass * m_config.gravity.norm();
    m_previous = {Eigen::Vector3d(0.0, 0.0, half), Eigen::Vector3d(0.0, 0.0, half)};
}

void CentroidalMpc::reset(const ContactVectors& applied_forces)
{
    m_previous = applied_forces;
}

MpcSolution CentroidalMpc::step(const CentroidalState& state, Window window)
{
    window.previous_forces = m_previous;
    MpcSolution sol = solve(state, window, m_weights, m_config);
    if (sol.status == MpcStatus::Ok)
    {
        m_previous = sol.first.forces;
    }
    return sol;
}

} // namespace gaintune::mpc
