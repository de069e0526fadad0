#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <gaintune/math/so3.h>

namespace gaintune {

/// One revolute joint of the tree; its child link carries the inertial data.
struct JointSpec
{
    std::string name;
    int parent{-1}; ///< index of the parent joint, -1 for the base link
    Eigen::Vector3d origin{Eigen::Vector3d::Zero()}; ///< in the parent link frame
    Eigen::Vector3d axis{Eigen::Vector3d::UnitY()};
    double mass{0.0}; ///< [kg]
    Eigen::Vector3d com{Eigen::Vector3d::Zero()}; ///< child link CoM in the child frame
    double lower{-M_PI};
    double upper{M_PI};
};

/// A frame rigidly attached to a link (-1 = base).
struct FrameSpec
{
    std::string name;
    int link{-1};
    Eigen::Vector3d offset{Eigen::Vector3d::Zero()};
};

enum class FrameId
{
    LeftFoot,
    RightFoot,
    Torso,
    Com,
};

FrameId frame_from_name(const std::string& name);
const char* frame_name(FrameId id);

/// Reduced floating-base biped description.
struct RobotModel
{
    double base_mass{0.0};
    Eigen::Vector3d base_com{Eigen::Vector3d::Zero()};
    std::vector<JointSpec> joints;
    std::vector<FrameSpec> frames;
    double foot_length{0.2};
    double foot_width{0.1};
    Eigen::VectorXd rest_posture; ///< size n, zero if unset

    int dofs() const { return static_cast<int>(joints.size()); }
    double total_mass() const;
    const FrameSpec* find_frame(const std::string& name) const;

    /// Throws std::invalid_argument on structural errors (bad parents, axes, masses).
    void validate() const;
};

struct RobotState
{
    Pose base;
    Eigen::VectorXd joint_positions;
    Eigen::Matrix<double, 6, 1> base_velocity{Eigen::Matrix<double, 6, 1>::Zero()}; ///< (linear, angular), world frame
    Eigen::VectorXd joint_velocities;

    static RobotState rest(const RobotModel& model);
    bool all_finite() const;
};

/// World poses of every link plus world joint axes/origins for one configuration.
class KinematicsCache
{
public:
    KinematicsCache(const RobotModel& model, const RobotState& state);

    const Pose& link_pose(int link) const; ///< link -1 is the base
    Pose frame_pose(FrameId id) const;
    Eigen::Vector3d com() const { return m_com; }

    /// 6 x (n + 6) geometric Jacobian mapping nu = (v_B, s_dot) to (linear, angular) frame velocity.
    Eigen::MatrixXd jacobian(FrameId id) const;
    /// Jacobian of a point fixed on a link, given in world coordinates.
    Eigen::MatrixXd point_jacobian(int link, const Eigen::Vector3d& world_point) const;

    /// Linear velocity rows of the CoM Jacobian, 3 x (n + 6).
    Eigen::MatrixXd com_jacobian() const;

    const RobotModel& model() const { return *m_model; }

private:
    const FrameSpec& require_frame(FrameId id) const;

    const RobotModel* m_model;
    Pose m_base;
    std::vector<Pose> m_links;
    std::vector<Eigen::Vector3d> m_axes; ///< world joint axes
    std::vector<std::vector<int>> m_ancestors; ///< joints supporting each link, root first
    Eigen::Vector3d m_com;
};

Pose forward_kinematics(const RobotModel& model, const RobotState& state, FrameId frame);
Eigen::MatrixXd jacobian(const RobotModel& model, const RobotState& state, FrameId frame);

/// q (+) dt * nu with the base rotation updated by the exponential map.
RobotState integrate_configuration(const RobotState& state, const Eigen::VectorXd& nu, double dt);

/// Default 12-joint biped (hip yaw/roll/pitch, knee, ankle pitch/roll per leg), 50 kg.
RobotModel default_biped();

/// Loads a model description from YAML. Throws std::runtime_error on schema errors.
RobotModel load_model(const std::string& path);
RobotModel parse_model(const std::string& yaml_text);

} // namespace gaintune
