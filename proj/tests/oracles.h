#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary. Nothing here calls the solver under test.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include <gaintune/control/wholebody_qp.h>
#include <gaintune/math/kinematics.h>
#include <gaintune/mpc/centroidal_mpc.h>

#include "test_util.h"

namespace test {

// ---- centroidal MPC

inline gaintune::mpc::CentroidalState mpc_standing_state()
{
    gaintune::mpc::CentroidalState s;
    s.com = {0.0, 0.0, 0.7};
    s.contacts = {Eigen::Vector3d(0.0, 0.1, 0.0), Eigen::Vector3d(0.0, -0.1, 0.0)};
    return s;
}

/// Both feet down at their current positions, zero momentum target.
inline gaintune::mpc::Window mpc_standing_window(const gaintune::mpc::CentroidalState& s, int n)
{
    gaintune::mpc::Window w;
    gaintune::mpc::StepReference ref;
    ref.contact_nominal = s.contacts;
    w.steps.assign(static_cast<size_t>(n), ref);
    w.previous_forces = {Eigen::Vector3d(0, 0, 245.25), Eigen::Vector3d(0, 0, 245.25)};
    return w;
}

inline gaintune::mpc::MpcWeights mpc_random_weights(std::mt19937_64& rng)
{
    const auto u = [&] (double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    gaintune::mpc::MpcWeights w;
    w.force_symmetry = u(10, 150);
    w.force_rate_xy = u(10, 150);
    w.force_rate_z = u(10, 150);
    w.momentum_linear_xy = u(2, 50);
    w.momentum_linear_z = u(80, 140);
    w.momentum_angular = u(10, 150);
    w.contact_position = u(10, 150);
    return w;
}

/// A random gait pattern: alternating double and single support phases.
inline gaintune::mpc::Window mpc_random_window(std::mt19937_64& rng, const gaintune::mpc::CentroidalState& s, int n)
{
    const auto u = [&] (double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    gaintune::mpc::Window win;
    int phase = static_cast<int>(u(0, 3));
    int left_in_phase = static_cast<int>(u(1, 6));
    for (int k = 0; k < n; ++k)
    {
        gaintune::mpc::StepReference r;
        r.active = phase == 0 ? std::array<bool, 2>{true, true}
                              : (phase == 1 ? std::array<bool, 2>{true, false} : std::array<bool, 2>{false, true});
        for (size_t i = 0; i < 2; ++i)
            r.contact_nominal[i] = s.contacts[i] + Eigen::Vector3d(0.02 * k, 0.0, 0.0) + random_vector(rng, 0.02);
        r.momentum << u(-5, 15), u(-5, 5), u(-3, 3), u(-1, 1), u(-1, 1), u(-1, 1);
        r.com_offset = Eigen::Vector3d(0.02 * k, 0.0, 0.0);
        win.steps.push_back(r);
        if (--left_in_phase == 0)
        {
            phase = (phase + 1) % 3;
            left_in_phase = static_cast<int>(u(1, 6));
        }
    }
    for (size_t i = 0; i < 2; ++i)
        win.previous_forces[i] = Eigen::Vector3d(u(-30, 30), u(-30, 30), u(0, 500));
    return win;
}

inline gaintune::mpc::CentroidalState mpc_random_state(std::mt19937_64& rng)
{
    gaintune::mpc::CentroidalState s = mpc_standing_state();
    s.com += random_vector(rng, 0.05);
    s.momentum << random_vector(rng, 5.0), random_vector(rng, 1.0);
    s.contacts[0] += random_vector(rng, 0.05);
    s.contacts[1] += random_vector(rng, 0.05);
    return s;
}

/// Forward simulation with the given lever arms.
inline gaintune::mpc::Trajectory mpc_rollout(const gaintune::mpc::CentroidalState& s0,
                                             const std::vector<gaintune::mpc::ControlOutput>& inputs,
                                             const gaintune::mpc::Window& w,
                                             const std::vector<gaintune::mpc::ContactVectors>& arms,
                                             const gaintune::mpc::MpcConfig& cfg)
{
    gaintune::mpc::Trajectory t;
    t.states.push_back(s0);
    t.inputs = inputs;
    for (size_t k = 0; k < inputs.size(); ++k)
    {
        t.states.push_back(gaintune::mpc::integrate_with_lever_arms(t.states.back(), inputs[k], cfg.sampling,
                                                                    w.steps[k].active, arms[k], cfg.mass,
                                                                    cfg.gravity));
    }
    return t;
}

/// Two-step single-support instance small enough for exhaustive search.
struct TinyMpcInstance
{
    gaintune::mpc::MpcConfig cfg;
    gaintune::mpc::CentroidalState state;
    gaintune::mpc::Window window;
};

inline TinyMpcInstance mpc_tiny_instance(std::mt19937_64& rng)
{
    const auto u = [&] (double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    TinyMpcInstance in;
    in.cfg.horizon = 2;
    in.cfg.cone_facets = 4;
    in.state = mpc_standing_state();
    in.state.com.y() = u(0.0, 0.1);
    in.state.momentum << u(-2, 2), u(-2, 2), u(-1, 1), u(-0.5, 0.5), u(-0.5, 0.5), u(-0.5, 0.5);
    in.window = mpc_standing_window(in.state, 2);
    for (auto& step : in.window.steps)
    {
        step.active = {true, false};
        step.momentum << u(-3, 3), u(-1, 1), 0.0, 0.0, 0.0, 0.0;
    }
    in.window.previous_forces = {Eigen::Vector3d(u(-10, 10), u(-10, 10), u(300, 600)), Eigen::Vector3d::Zero()};
    return in;
}

/// Lowest cost over a grid of stance forces inside the 4-facet cone; the
/// remaining inputs are taken from `inputs`.
inline double mpc_grid_minimum(const TinyMpcInstance& in, const gaintune::mpc::MpcWeights& w,
                               std::vector<gaintune::mpc::ControlOutput> inputs)
{
    const auto arms = gaintune::mpc::frozen_lever_arms(in.state, in.window);
    const double mu = in.cfg.friction;
    const double fz_max = in.cfg.max_normal_force_factor * in.cfg.mass * -in.cfg.gravity.z();
    std::vector<Eigen::Vector3d> grid;
    for (int a = 0; a <= 8; ++a)
    {
        const double fz = fz_max * a / 8.0;
        for (int b = -2; b <= 2; ++b)
        {
            for (int c = -2; c <= 2; ++c)
            {
                // the 4-facet pyramid is the box |fx|, |fy| <= mu fz
                grid.emplace_back(mu * fz * b / 2.0, mu * fz * c / 2.0, fz);
            }
        }
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f0 : grid)
    {
        for (const auto& f1 : grid)
        {
            inputs[0].forces[0] = f0;
            inputs[1].forces[0] = f1;
            best = std::min(best,
                            gaintune::mpc::cost_terms(mpc_rollout(in.state, inputs, in.window, arms, in.cfg), in.window,
                                                      w, in.cfg)
                                .total());
        }
    }
    return best;
}

// ---- whole-body QP

struct WbqpInstance
{
    gaintune::RobotState state;
    gaintune::control::TaskReferences refs;
};

/// Equality targets come from a velocity inside the bounds, so every instance is feasible.
inline WbqpInstance wbqp_random_instance(std::mt19937_64& rng, const gaintune::RobotModel& model, double speed)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    WbqpInstance in;
    in.state = gaintune::RobotState::rest(model);
    for (int j = 0; j < model.dofs(); ++j)
        in.state.joint_positions(j) += 0.15 * u(rng);
    in.state.base.position += random_vector(rng, 0.1);
    in.state.base.rotation = gaintune::so3_exp(random_vector(rng, 0.2));
    Eigen::VectorXd nu(model.dofs() + 6);
    for (int j = 0; j < nu.size(); ++j)
        nu(j) = u(rng) * std::min(speed, 4.9);
    const gaintune::KinematicsCache kin(model, in.state);
    in.refs.com_velocity = (kin.com_jacobian() * nu).head<2>();
    in.refs.feet[gaintune::kLeft] = kin.jacobian(gaintune::FrameId::LeftFoot) * nu;
    in.refs.feet[gaintune::kRight] = kin.jacobian(gaintune::FrameId::RightFoot) * nu;
    in.refs.torso = Eigen::Vector4d::Random() * speed;
    in.refs.posture = Eigen::VectorXd::Random(model.dofs()) * 4.0 * speed;
    return in;
}

/// Equality-constrained minimizer from the dense KKT system, ignoring bounds.
inline Eigen::VectorXd kkt_solution(const gaintune::qp::Problem& p)
{
    const auto nv = p.hessian.rows();
    const auto m = p.eq_matrix.rows();
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nv + m, nv + m);
    K.topLeftCorner(nv, nv) = p.hessian;
    K.topRightCorner(nv, m) = p.eq_matrix.transpose();
    K.bottomLeftCorner(m, nv) = p.eq_matrix;
    Eigen::VectorXd rhs(nv + m);
    rhs << -p.gradient, p.eq_vector;
    return K.fullPivLu().solve(rhs).head(nv);
}

// ---- kinematics

inline gaintune::RobotState random_robot_state(const gaintune::RobotModel& model, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    gaintune::RobotState s = gaintune::RobotState::rest(model);
    s.base.position = random_vector(rng, 0.5);
    s.base.rotation = random_rotation(rng);
    for (int i = 0; i < model.dofs(); ++i)
        s.joint_positions(i) = u(rng);
    return s;
}

/// Finite-difference twist taking b to a over eps.
inline Eigen::Matrix<double, 6, 1> pose_difference(const gaintune::Pose& a, const gaintune::Pose& b, double eps)
{
    Eigen::Matrix<double, 6, 1> d;
    d.head<3>() = (a.position - b.position) / eps;
    d.tail<3>() = gaintune::so3_log(a.rotation * b.rotation.transpose()) / eps;
    return d;
}

/// Largest deviation between analytic Jacobians and finite differences.
inline double jacobian_fd_error(const gaintune::RobotModel& model, int states, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    const double eps = 1e-6;
    double worst = 0.0;
    for (int i = 0; i < states; ++i)
    {
        const gaintune::RobotState s = random_robot_state(model, rng);
        Eigen::VectorXd delta(model.dofs() + 6);
        for (Eigen::Index k = 0; k < delta.size(); ++k)
            delta(k) = n(rng);
        const gaintune::RobotState perturbed = gaintune::integrate_configuration(s, delta, eps);
        for (gaintune::FrameId f : {gaintune::FrameId::LeftFoot, gaintune::FrameId::RightFoot,
                                    gaintune::FrameId::Torso, gaintune::FrameId::Com})
        {
            const Eigen::VectorXd fd = pose_difference(gaintune::forward_kinematics(model, perturbed, f),
                                                       gaintune::forward_kinematics(model, s, f), eps);
            const Eigen::VectorXd an = gaintune::jacobian(model, s, f) * delta;
            worst = std::max(worst, (fd - an).cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

// ---- SO(3)

/// Rodrigues formula via Eigen::AngleAxis.
inline Eigen::Matrix3d rodrigues(const Eigen::Vector3d& w)
{
    const double angle = w.norm();
    if (angle == 0.0)
        return Eigen::Matrix3d::Identity();
    return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

/// Worst log/exp round-trip error over uniformly random rotations.
inline double so3_roundtrip_error(int rotations, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int i = 0; i < rotations; ++i)
    {
        const Eigen::Matrix3d R = random_rotation(rng);
        const Eigen::Vector3d w = gaintune::so3_log(R);
        if (w.norm() > M_PI + 1e-12)
            return std::numeric_limits<double>::infinity();
        worst = std::max(worst, (rodrigues(w) - R).cwiseAbs().maxCoeff());
        worst = std::max(worst, (gaintune::so3_exp(w) - R).cwiseAbs().maxCoeff());
    }
    return worst;
}

} // namespace test
