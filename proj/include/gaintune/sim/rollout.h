#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include <gaintune/control/wholebody_qp.h>
#include <gaintune/control/zmp_com.h>
#include <gaintune/math/kinematics.h>
#include <gaintune/math/schedule.h>
#include <gaintune/mpc/centroidal_mpc.h>
#include <gaintune/sim/plant.h>

namespace gaintune::sim {

/// Every tuned gain of the three control layers.
struct ControllerGains
{
    mpc::MpcWeights mpc;
    control::ZmpGains zmp;
    control::QpGains qp;
};

struct ScheduleParams
{
    std::string name{"train"};
    double step_length{0.1};
    double step_duration{0.8};
    int n_steps{24};
    double double_support_ratio{0.25};
    double step_width{0.2};
    double heading_change{0.0};
    /// Stand in double support for standing_duration instead of stepping.
    bool standing{false};
    double standing_duration{20.0};

    ContactSchedule build() const;

    /// Straight walk, t* = 20 s.
    static ScheduleParams train();
    /// Turning walk of the same length and duration.
    static ScheduleParams validation();
    static ScheduleParams stand(double duration);
};

struct RolloutConfig
{
    RobotModel model{default_biped()};
    PlantParams plant;
    mpc::MpcConfig mpc;
    ScheduleParams schedule{ScheduleParams::train()};
    double control_dt{0.01};
    double swing_height{0.05};
    /// Time constant of the CoM offset correction in the reference momentum [s].
    double com_recovery_time{0.3};
    /// Stop early at this time; the rollout then reports a truncated outcome.
    double max_time{std::numeric_limits<double>::infinity()};
    bool record_log{false};
};

enum class Outcome
{
    Completed,
    Fell,
    Truncated,
};

const char* to_string(Outcome outcome);

struct LogRow
{
    double time{0.0};
    Eigen::Vector3d com;
    Eigen::Vector2d zmp; ///< NaN when the vertical force is below the ZMP threshold
    Eigen::Vector2d zmp_ref{Eigen::Vector2d::Zero()};
    Eigen::Vector2d com_ref{Eigen::Vector2d::Zero()};
    Eigen::Vector3d kinematic_com{Eigen::Vector3d::Zero()};
    Vector6d momentum;
    ContactVectors forces;
    Eigen::VectorXd torques;
    bool fallen{false};
};

struct RolloutResult
{
    Outcome outcome{Outcome::Completed};
    FallReason reason{FallReason::None};
    double walked_time{0.0};
    double duration{0.0}; ///< t*
    Eigen::VectorXd mean_torque; ///< per-joint mean |tau|
    int mpc_solves{0};
    std::vector<LogRow> log;

    bool completed() const { return outcome == Outcome::Completed; }
    double torque_norm() const { return mean_torque.size() > 0 ? mean_torque.norm() : 0.0; }
};

/// Desired sole pose and twist at t: the foothold while the contact is
/// scheduled, otherwise a minimum-jerk swing with a height bump.
std::pair<Pose, Vector6d> foot_trajectory(const ContactSchedule& schedule, int contact, double t, double swing_height);

/// Closed-loop simulation: MPC at 1/sampling, ZMP-CoM and whole-body QP at
/// 1/control_dt, plant at 1/plant.dt. Controller failures end the rollout as a fall.
RolloutResult rollout(const ControllerGains& gains, const RolloutConfig& config, std::uint64_t seed);

/// CSV with time, CoM, ZMP, momentum, contact forces, joint torques and the fall flag.
void write_log_csv(std::ostream& out, const RolloutResult& result);

} // namespace gaintune::sim
