#pragma once

#include <array>

#include <Eigen/Dense>

#include <gaintune/math/kinematics.h>
#include <gaintune/math/schedule.h>
#include <gaintune/qp/dense_qp.h>

namespace gaintune::control {

using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Tuned task gains, in parameter-vector order.
struct QpGains
{
    double k_feet{4.0};          ///< k_F
    double k_feet_rotation{4.0}; ///< k_omegaF
    double k_com{3.0};           ///< k_p_CoM
    double k_torso_height{3.0};  ///< k_zT
    double k_torso_rotation{4.0}; ///< k_omegaT
};

/// Fixed (untuned) whole-body QP constants.
struct WbqpConfig
{
    Eigen::VectorXd posture_weight;  ///< Lambda, diagonal
    Eigen::VectorXd posture_gain;    ///< K_s, diagonal
    Eigen::VectorXd desired_posture; ///< s^d
    Eigen::Vector4d torso_weight{Eigen::Vector4d::Constant(5.0)}; ///< K_T over (z, wx, wy, wz)
    Eigen::VectorXd velocity_lower;
    Eigen::VectorXd velocity_upper;
    qp::Options qp;

    /// Lambda = 1, K_s = 2, s^d = rest posture, joint speed bounds of +-5 rad/s.
    static WbqpConfig defaults(const RobotModel& model);
    /// Throws std::invalid_argument on size or sign errors.
    void validate(int dofs) const;
};

/// Linear part pd* - k_F (p - p*), angular part w* - k_wF log(R R*^T).
Vector6d foot_velocity_reference(const Pose& desired, const Vector6d& desired_velocity, const Pose& measured,
                                 double k_position, double k_rotation);

/// Torso task over (z velocity, angular velocity).
Eigen::Vector4d torso_velocity_reference(double desired_height, double desired_height_rate,
                                         const Eigen::Matrix3d& desired_rotation,
                                         const Eigen::Vector3d& desired_angular_velocity, const Pose& measured,
                                         double k_height, double k_rotation);

/// sd* = -K_s (s - s^d)
Eigen::VectorXd postural_reference(const Eigen::VectorXd& s, const Eigen::VectorXd& desired,
                                   const Eigen::VectorXd& gain);

/// v*_CoM = xd* - k_p_CoM (x - x*) on the walking plane.
Eigen::Vector2d com_task_velocity(const Eigen::Vector2d& com_velocity_star, const Eigen::Vector2d& com,
                                  const Eigen::Vector2d& com_star, double k_com);

struct TaskReferences
{
    Eigen::Vector2d com_velocity{Eigen::Vector2d::Zero()};
    std::array<Vector6d, kNumContacts> feet{Vector6d::Zero(), Vector6d::Zero()};
    Eigen::Vector4d torso{Eigen::Vector4d::Zero()};
    Eigen::VectorXd posture; ///< joint velocity reference, size n
};

struct WbqpResult
{
    qp::Status status{qp::Status::Infeasible};
    Eigen::VectorXd nu;
    double equality_residual{0.0};

    bool ok() const { return status == qp::Status::Optimal; }
};

/// Assembles the velocity QP: torso and posture tasks in the cost; planar CoM
/// rows and both feet as equalities; joint speed bounds.
qp::Problem build_wholebody_qp(const KinematicsCache& kin, const TaskReferences& refs, const WbqpConfig& config);

WbqpResult solve(const KinematicsCache& kin, const TaskReferences& refs, const WbqpConfig& config);

RobotState integrate_velocity(const RobotState& state, const Eigen::VectorXd& nu, double dt);

} // namespace gaintune::control
