#include <gaintune/control/wholebody_qp.h>

#include <stdexcept>

namespace gaintune::control {

WbqpConfig WbqpConfig::defaults(const RobotModel& model)
{
    const int n = model.dofs();
    WbqpConfig c;
    c.posture_weight = Eigen::VectorXd::Ones(n);
    c.posture_gain = Eigen::VectorXd::Constant(n, 2.0);
    c.desired_posture = model.rest_posture.size() == n ? model.rest_posture : Eigen::VectorXd::Zero(n);
    c.velocity_lower = Eigen::VectorXd::Constant(n, -5.0);
    c.velocity_upper = Eigen::VectorXd::Constant(n, 5.0);
    return c;
}

void WbqpConfig::validate(int dofs) const
{
    if (posture_weight.size() != dofs || posture_gain.size() != dofs || desired_posture.size() != dofs
        || velocity_lower.size() != dofs || velocity_upper.size() != dofs)
    {
        throw std::invalid_argument("wbqp: config vectors must have one entry per joint");
    }
    if ((posture_weight.array() <= 0.0).any() || (posture_gain.array() < 0.0).any()
        || (torso_weight.array() <= 0.0).any())
    {
        throw std::invalid_argument("wbqp: weights must be positive");
    }
    if ((velocity_lower.array() >= velocity_upper.array()).any())
    {
        throw std::invalid_argument("wbqp: velocity bounds must satisfy lower < upper");
    }
}

Vector6d foot_velocity_reference(const Pose& desired, const Vector6d& desired_velocity, const Pose& measured,
                                 double k_position, double k_rotation)
{
    Vector6d v;
    v.head<3>() = desired_velocity.head<3>() - k_position * (measured.position - desired.position);
    v.tail<3>() = desired_velocity.tail<3>()
                  - k_rotation * so3_log(measured.rotation * desired.rotation.transpose());
    return v;
}

Eigen::Vector4d torso_velocity_reference(double desired_height, double desired_height_rate,
                                         const Eigen::Matrix3d& desired_rotation,
                                         const Eigen::Vector3d& desired_angular_velocity, const Pose& measured,
                                         double k_height, double k_rotation)
{
    Eigen::Vector4d v;
    v(0) = desired_height_rate - k_height * (measured.position.z() - desired_height);
    v.tail<3>() = desired_angular_velocity - k_rotation * so3_log(measured.rotation * desired_rotation.transpose());
    return v;
}

Eigen::VectorXd postural_reference(const Eigen::VectorXd& s, const Eigen::VectorXd& desired,
                                   const Eigen::VectorXd& gain)
{
    if (s.size() != desired.size() || s.size() != gain.size())
    {
        throw std::invalid_argument("postural_reference: size mismatch");
    }
    return -gain.cwiseProduct(s - desired);
}

Eigen::Vector2d com_task_velocity(const Eigen::Vector2d& com_velocity_star, const Eigen::Vector2d& com,
                                  const Eigen::Vector2d& com_star, double k_com)
{
    return com_velocity_star - k_com * (com - com_star);
}

qp::Problem build_wholebody_qp(const KinematicsCache& kin, const TaskReferences& refs, const WbqpConfig& config)
{
    const int n = kin.model().dofs();
    const int nv = n + 6;
    config.validate(n);
    if (refs.posture.size() != n)
    {
        throw std::invalid_argument("wbqp: posture reference must have one entry per joint");
    }

    const Eigen::MatrixXd torso_full = kin.jacobian(FrameId::Torso);
    Eigen::MatrixXd Jt(4, nv);
    Jt.row(0) = torso_full.row(2);
    Jt.bottomRows<3>() = torso_full.bottomRows<3>();

    qp::Problem p;
    const Eigen::MatrixXd KJ = config.torso_weight.asDiagonal() * Jt;
    p.hessian = 2.0 * Jt.transpose() * KJ;
    p.gradient = -2.0 * KJ.transpose() * refs.torso;
    p.hessian.bottomRightCorner(n, n).diagonal() += 2.0 * config.posture_weight;
    p.gradient.tail(n) -= 2.0 * config.posture_weight.cwiseProduct(refs.posture);

    p.eq_matrix.resize(14, nv);
    p.eq_vector.resize(14);
    p.eq_matrix.topRows<2>() = kin.com_jacobian().topRows<2>();
    p.eq_vector.head<2>() = refs.com_velocity;
    p.eq_matrix.middleRows<6>(2) = kin.jacobian(FrameId::LeftFoot);
    p.eq_vector.segment<6>(2) = refs.feet[kLeft];
    p.eq_matrix.middleRows<6>(8) = kin.jacobian(FrameId::RightFoot);
    p.eq_vector.segment<6>(8) = refs.feet[kRight];

    p.ineq_matrix = Eigen::MatrixXd::Zero(2 * n, nv);
    p.ineq_matrix.topRightCorner(n, n).setIdentity();
    p.ineq_matrix.bottomRightCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
    p.ineq_upper.resize(2 * n);
    p.ineq_upper << config.velocity_upper, -config.velocity_lower;
    return p;
}

WbqpResult solve(const KinematicsCache& kin, const TaskReferences& refs, const WbqpConfig& config)
{
    const qp::Problem p = build_wholebody_qp(kin, refs, config);
    const qp::Result r = qp::solve(p, config.qp);
    WbqpResult out;
    out.status = r.status;
    if (r.ok())
    {
        out.nu = r.x;
        // The bounds are exact: clip the round-off left by the active-set solve.
        const int n = kin.model().dofs();
        out.nu.tail(n) = out.nu.tail(n).cwiseMax(config.velocity_lower).cwiseMin(config.velocity_upper);
        out.equality_residual = (p.eq_matrix * out.nu - p.eq_vector).cwiseAbs().maxCoeff();
    }
    return out;
}

RobotState integrate_velocity(const RobotState& state, const Eigen::VectorXd& nu, double dt)
{
    if (!(dt > 0.0))
    {
        throw std::invalid_argument("integrate_velocity: dt must be > 0");
    }
    return integrate_configuration(state, nu, dt);
}

} // namespace gaintune::control
