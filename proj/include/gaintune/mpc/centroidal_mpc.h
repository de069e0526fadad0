#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include <gaintune/math/schedule.h>
#include <gaintune/qp/dense_qp.h>

namespace gaintune::mpc {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using ContactVectors = std::array<Eigen::Vector3d, kNumContacts>;

/// Controller state: CoM, centroidal momentum (linear, angular) and contact locations.
struct CentroidalState
{
    Eigen::Vector3d com{Eigen::Vector3d::Zero()};
    Vector6d momentum{Vector6d::Zero()};
    ContactVectors contacts{Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};

    bool all_finite() const;
};

/// Controller output: contact forces and contact-point velocities.
struct ControlOutput
{
    ContactVectors forces{Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};
    ContactVectors velocities{Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};
};

/// Cost weights, in the order they appear in the tuned parameter vector.
struct MpcWeights
{
    double force_symmetry{50.0};     ///< W_f
    double force_rate_xy{50.0};      ///< W_fdot (x, y)
    double force_rate_z{50.0};       ///< W_fdot (z)
    double momentum_linear_xy{20.0}; ///< W_hp (x, y)
    double momentum_linear_z{100.0}; ///< W_hp (z)
    double momentum_angular{50.0};   ///< W_homega
    double contact_position{50.0};   ///< W_p

    bool valid() const;
};

struct MpcConfig
{
    int horizon{15};
    double sampling{0.1}; ///< Delta T [s]
    double friction{0.7};
    int cone_facets{4};
    double max_normal_force_factor{4.0}; ///< f_z <= factor * m * g
    double max_contact_speed{1.0};       ///< |v_i| component bound [m/s]
    double mass{50.0};
    Eigen::Vector3d gravity{0.0, 0.0, -9.81};
    /// Forces enter the force terms divided by this scale (body weight by default).
    double force_scale{50.0 * 9.81};
    /// Momentum enters the momentum terms divided by this scale (mass times 0.1 m/s).
    double momentum_scale{5.0};
    /// Fixed regularization on contact velocities; keeps the contact block strictly convex.
    double contact_velocity_weight{1.0};
    qp::Options qp;

    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;
};

/// References and schedule flags for one step of the horizon.
struct StepReference
{
    std::array<bool, kNumContacts> active{true, true};
    /// Nominal contact location at the end of the step (regularization target).
    ContactVectors contact_nominal{Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};
    /// Reference momentum at the end of the step.
    Vector6d momentum{Vector6d::Zero()};
    /// Nominal CoM displacement at the start of the step relative to step 0.
    Eigen::Vector3d com_offset{Eigen::Vector3d::Zero()};
};

struct Window
{
    std::vector<StepReference> steps; ///< one entry per horizon step
    ContactVectors previous_forces{Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};
};

/// One sampling period of the centroidal model: momentum from gravity and contact
/// forces with lever arms p_i - p_CoM, contacts moving only while inactive,
/// and the CoM driven by the linear momentum at the start of the period.
CentroidalState integrate_centroidal(const CentroidalState& state, const ControlOutput& input,
                                     double dt, const std::array<bool, kNumContacts>& active,
                                     double mass, const Eigen::Vector3d& gravity);

/// Same as integrate_centroidal but with externally given lever arms.
CentroidalState integrate_with_lever_arms(const CentroidalState& state, const ControlOutput& input,
                                          double dt, const std::array<bool, kNumContacts>& active,
                                          const ContactVectors& lever_arms, double mass,
                                          const Eigen::Vector3d& gravity);

struct Trajectory
{
    std::vector<CentroidalState> states; ///< N + 1 entries, states[0] is the initial state
    std::vector<ControlOutput> inputs;   ///< N entries
};

struct CostBreakdown
{
    double force_symmetry{0.0};
    double force_rate{0.0};
    double momentum_linear{0.0};
    double momentum_angular{0.0};
    double contact_position{0.0};
    double contact_velocity{0.0};

    double momentum() const { return momentum_linear + momentum_angular; }
    double total() const;
};

/// Evaluates every cost term of the OCP on a trajectory. Throws
/// std::invalid_argument when the trajectory and window lengths disagree.
CostBreakdown cost_terms(const Trajectory& trajectory, const Window& window, const MpcWeights& weights,
                         const MpcConfig& config);

/// Lever arms p_i - p_CoM used at every step: contacts that stay in their
/// current phase use the measured location, later contacts their nominal
/// landing point; the CoM follows the nominal displacement from the measurement.
std::vector<ContactVectors> frozen_lever_arms(const CentroidalState& state, const Window& window);

/// Force block of the OCP as a dense QP over the active-contact forces.
struct ForceQp
{
    qp::Problem problem;
    /// variable offset of (step, contact), -1 when the contact is inactive
    std::vector<std::array<int, kNumContacts>> index;
    std::vector<ContactVectors> lever_arms;
};

ForceQp build_force_qp(const CentroidalState& state, const Window& window, const MpcWeights& weights,
                       const MpcConfig& config);

enum class MpcStatus
{
    Ok,
    Infeasible,
    NotConverged,
};

const char* to_string(MpcStatus status);

struct MpcSolution
{
    MpcStatus status{MpcStatus::Infeasible};
    ControlOutput first;
    Trajectory predicted;
    double kkt_residual{0.0};
    double cone_slack{0.0}; ///< smallest facet slack of the returned forces
    CostBreakdown cost;
};

/// Solves the OCP over the window. The dynamics are linear once the lever
/// arms are frozen, and the force and contact-velocity blocks decouple; each
/// is solved exactly as a strictly convex QP.
MpcSolution solve(const CentroidalState& state, const Window& window, const MpcWeights& weights,
                  const MpcConfig& config);

/// Receding-horizon wrapper holding the previously applied forces.
class CentroidalMpc
{
public:
    CentroidalMpc(MpcConfig config, MpcWeights weights);

    void reset(const ContactVectors& applied_forces);
    /// Fills window.previous_forces from the last applied output and solves.
    MpcSolution step(const CentroidalState& state, Window window);

    const MpcConfig& config() const { return m_config; }
    const MpcWeights& weights() const { return m_weights; }

private:
    MpcConfig m_config;
    MpcWeights m_weights;
    ContactVectors m_previous;
};

} // namespace gaintune::mpc
