#pragma once

#include <array>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include <gaintune/sim/rollout.h>
#include <gaintune/util/random.h>

namespace gaintune::objective {

constexpr int kMpcParams = 7;
constexpr int kZmpParams = 2;
constexpr int kQpParams = 5;
constexpr int kNumParams = kMpcParams + kZmpParams + kQpParams;

/// Tuned vector: MPC weights, ZMP-CoM gains, whole-body QP gains.
using ParamVector = Eigen::Matrix<double, kNumParams, 1>;

/// Entry names in vector order.
extern const std::array<const char*, kNumParams> kParamNames;

/// Index of a named entry, or -1.
int param_index(const std::string& name);

struct Components
{
    Eigen::VectorXd mpc;
    Eigen::VectorXd zmp;
    Eigen::VectorXd qp;
};

/// Throws std::invalid_argument unless the lengths are 7, 2 and 5.
ParamVector pack(const Eigen::VectorXd& mpc, const Eigen::VectorXd& zmp, const Eigen::VectorXd& qp);
Components unpack(const ParamVector& xi);

sim::ControllerGains to_gains(const ParamVector& xi);
ParamVector from_gains(const sim::ControllerGains& gains);

/// Axis-aligned box of admissible parameter vectors, bounds inclusive.
struct SearchSpace
{
    ParamVector lower;
    ParamVector upper;

    /// Default tuning box.
    static SearchSpace table();

    ParamVector centroid() const { return 0.5 * (lower + upper); }
    bool contains(const ParamVector& xi) const;
    /// Throws std::invalid_argument unless lower < upper elementwise and all finite.
    void validate() const;
};

ParamVector sample_uniform(const SearchSpace& space, Philox& rng);

enum class ObjectiveKind
{
    G1, ///< walked time only
    G2, ///< walked time and mean joint torque
};

const char* to_string(ObjectiveKind kind);
/// Accepts "g1"/"g2" in either case; throws std::invalid_argument otherwise.
ObjectiveKind parse_objective(const std::string& text);

struct ObjectiveSpec
{
    ObjectiveKind kind{ObjectiveKind::G2};
    double duration{20.0};  ///< t*
    double time_weight{100.0};  ///< W1
    double torque_weight{0.001}; ///< W2
    double floor{std::numeric_limits<double>::epsilon()};
    /// Torque norm charged to gains that are rejected before simulating [N m].
    double infeasible_torque{1000.0};

    static ObjectiveSpec g1();
    static ObjectiveSpec g2();
    static ObjectiveSpec of(ObjectiveKind kind);

    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;
};

/// 1 / max(W1 (t* - t) + W2 |tau|, floor).
double evaluate(const ObjectiveSpec& spec, double walked_time, double torque_norm);

/// Scores a rollout; rejected gains count as t = 0 with the infeasible torque.
double evaluate(const ObjectiveSpec& spec, const sim::RolloutResult& result);

} // namespace gaintune::objective
