#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <gaintune/math/kinematics.h>
#include <gaintune/math/schedule.h>
#include <gaintune/util/random.h>

namespace gaintune::sim {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using ContactVectors = std::array<Eigen::Vector3d, kNumContacts>;

struct Push
{
    double time{8.0};
    Eigen::Vector3d force{0.0, 20.0, 0.0};
    double duration{0.1};
};

struct PlantParams
{
    double mass{50.0};
    Eigen::Vector3d gravity{0.0, 0.0, -9.81};
    double dt{0.001};
    double com_height{0.7}; ///< z0

    // model mismatch
    double actuator_lag{0.03};    ///< first-order time constant on nu [s]
    double velocity_noise{0.01};  ///< joint velocity noise std [rad/s]
    double contact_jitter{0.01};  ///< std of every contact transition time [s]
    std::vector<Push> pushes{Push{}};

    /// The body pulls the centroidal CoM toward the kinematic CoM through
    /// a spring-damper acting at the stance contacts [1/s^2], [1/s].
    double coupling_stiffness{400.0};
    double coupling_damping{40.0};
    double coupling_filter{0.03}; ///< low-pass time constant on the kinematic CoM velocity [s]
    double friction{0.7};

    double zmp_margin{0.02};     ///< support polygon inflation [m]
    double zmp_dwell{0.05};      ///< tolerated time outside the polygon [s]
    double min_height_ratio{0.6}; ///< fall below this fraction of z0

    /// Same parameters with lag, noise, jitter and pushes removed.
    PlantParams without_mismatch() const;
    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;
};

struct ContactState
{
    bool active{false};
    Eigen::Vector3d position{Eigen::Vector3d::Zero()};
    double yaw{0.0};
};

struct PlantState
{
    double time{0.0};
    RobotState body; ///< kinematic configuration and the realized (lagged) velocity
    Eigen::Vector3d com{Eigen::Vector3d::Zero()};  ///< centroidal CoM
    Vector6d momentum{Vector6d::Zero()};
    std::array<ContactState, kNumContacts> contacts;
    ContactVectors forces{Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()}; ///< applied ground forces
    std::optional<Eigen::Vector2d> zmp;
    Eigen::Vector3d kinematic_com{Eigen::Vector3d::Zero()};
    Eigen::Vector3d kinematic_com_rate{Eigen::Vector3d::Zero()}; ///< low-pass filtered
    double outside_since{-1.0}; ///< start of the current ZMP excursion, -1 when inside
};

enum class FallReason
{
    None,
    Zmp,
    Height,
    NonFinite,
    ControllerFailure,
    InfeasibleGains,
};

const char* to_string(FallReason reason);

/// Convex hull of the active foot rectangles, counter-clockwise.
std::vector<Eigen::Vector2d> support_polygon(const std::array<ContactState, kNumContacts>& contacts,
                                             double foot_length, double foot_width);

/// Distance from a point to a convex polygon, zero inside; infinity for an empty polygon.
double distance_to_polygon(const std::vector<Eigen::Vector2d>& polygon, const Eigen::Vector2d& point);

/// Evaluates the fall rules at the state's time and updates its ZMP excursion timer.
FallReason fall_check(PlantState& state, const std::vector<Eigen::Vector2d>& polygon, const PlantParams& params);

/// Joint rows of G(q) + sum_i J_i^T w_i, where w_i is the wrench the robot
/// exerts on the environment at contact i (minus the ground reaction).
Eigen::VectorXd estimate_torques(const Eigen::VectorXd& gravity_term, const std::vector<Eigen::MatrixXd>& jacobians,
                                 const std::vector<Vector6d>& wrenches, int dofs);

/// Quasi-static joint torques for the given ground reaction forces at the feet.
Eigen::VectorXd estimate_torques(const KinematicsCache& kin, const ContactVectors& ground_forces,
                                 const std::array<bool, kNumContacts>& active, const Eigen::Vector3d& gravity);

/// Contact schedule with every transition time perturbed by N(0, jitter^2).
ContactSchedule jitter_schedule(const ContactSchedule& nominal, double jitter, Philox& rng);

/// Reduced plant: kinematic body following lagged velocity commands and a
/// centroidal model driven by the commanded contact forces.
class Plant
{
public:
    Plant(const RobotModel& model, PlantParams params, ContactSchedule realized, std::uint64_t seed,
          const RobotState& initial);

    /// Advances one dt with the commanded velocity nu* and forces.
    void step(const Eigen::VectorXd& nu_command, const ContactVectors& force_command);

    const PlantState& state() const { return m_state; }
    PlantState& state() { return m_state; }
    const ContactSchedule& realized_schedule() const { return m_schedule; }
    const PlantParams& params() const { return m_params; }
    std::vector<Eigen::Vector2d> polygon() const;
    FallReason check() { return fall_check(m_state, polygon(), m_params); }

private:
    void update_contacts();
    Eigen::Vector3d foot_position(int contact) const;

    const RobotModel* m_model;
    PlantParams m_params;
    ContactSchedule m_schedule;
    Philox m_rng;
    PlantState m_state;
    long m_steps{0};
};

} // namespace gaintune::sim
