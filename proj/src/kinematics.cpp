#include <gaintune/math/kinematics.h>

#include <cmath>
#include <stdexcept>

namespace gaintune {

FrameId frame_from_name(const std::string& name)
{
    if (name == "left_foot")
        return FrameId::LeftFoot;
    if (name == "right_foot")
        return FrameId::RightFoot;
    if (name == "torso")
        return FrameId::Torso;
    if (name == "com")
        return FrameId::Com;
    throw std::invalid_argument("unknown frame '" + name + "'");
}

const char* frame_name(FrameId id)
{
    switch (id)
    {
    case FrameId::LeftFoot:
        return "left_foot";
    case FrameId::RightFoot:
        return "right_foot";
    case FrameId::Torso:
        return "torso";
    case FrameId::Com:
        return "com";
    }
    return "?";
}

double RobotModel::total_mass() const
{
    double m = base_mass;
    for (const auto& j : joints)
    {
        m += j.mass;
    }
    return m;
}

const FrameSpec* RobotModel::find_frame(const std::string& name) const
{
    for (const auto& f : frames)
    {
        if (f.name == name)
        {
            return &f;
        }
    }
    return nullptr;
}

void RobotModel::validate() const
{
    if (!(base_mass >= 0.0) || !(total_mass() > 0.0))
    {
        throw std::invalid_argument("model: total mass must be positive");
    }
    for (int i = 0; i < dofs(); ++i)
    {
        const auto& j = joints[static_cast<size_t>(i)];
        if (j.parent < -1 || j.parent >= i)
        {
            throw std::invalid_argument("model: joint '" + j.name
                                        + "' must reference an earlier parent joint or the base");
        }
        if (std::abs(j.axis.norm() - 1.0) > 1e-9)
        {
            throw std::invalid_argument("model: joint '" + j.name + "' axis is not a unit vector");
        }
        if (j.mass < 0.0 || !(j.lower < j.upper))
        {
            throw std::invalid_argument("model: joint '" + j.name + "' has invalid mass or limits");
        }
    }
    for (const auto& f : frames)
    {
        if (f.link < -1 || f.link >= dofs())
        {
            throw std::invalid_argument("model: frame '" + f.name + "' references a missing link");
        }
    }
    if (rest_posture.size() != 0 && rest_posture.size() != dofs())
    {
        throw std::invalid_argument("model: rest posture size does not match joint count");
    }
    if (!(foot_length > 0.0) || !(foot_width > 0.0))
    {
        throw std::invalid_argument("model: foot dimensions must be positive");
    }
}

RobotState RobotState::rest(const RobotModel& model)
{
    RobotState s;
    const int n = model.dofs();
    s.joint_positions = model.rest_posture.size() == n ? model.rest_posture : Eigen::VectorXd::Zero(n);
    s.joint_velocities = Eigen::VectorXd::Zero(n);
    return s;
}

bool RobotState::all_finite() const
{
    return base.position.allFinite() && base.rotation.allFinite() && joint_positions.allFinite()
           && base_velocity.allFinite() && joint_velocities.allFinite();
}

KinematicsCache::KinematicsCache(const RobotModel& model, const RobotState& state)
    : m_model(&model)
    , m_base(state.base)
{
    const int n = model.dofs();
    if (state.joint_positions.size() != n)
    {
        throw std::invalid_argument("kinematics: joint vector size does not match the model");
    }
    m_links.resize(static_cast<size_t>(n));
    m_axes.resize(static_cast<size_t>(n));
    m_ancestors.resize(static_cast<size_t>(n));

    double mass = model.base_mass;
    Eigen::Vector3d weighted = model.base_mass * (m_base.position + m_base.rotation * model.base_com);

    for (int i = 0; i < n; ++i)
    {
        const auto& j = model.joints[static_cast<size_t>(i)];
        const Pose& parent = j.parent < 0 ? m_base : m_links[static_cast<size_t>(j.parent)];
        Pose& link = m_links[static_cast<size_t>(i)];
        link.position = parent.position + parent.rotation * j.origin;
        m_axes[static_cast<size_t>(i)] = parent.rotation * j.axis;
        link.rotation = parent.rotation
                        * Eigen::AngleAxisd(state.joint_positions(i), j.axis).toRotationMatrix();

        auto& chain = m_ancestors[static_cast<size_t>(i)];
        if (j.parent >= 0)
        {
            chain = m_ancestors[static_cast<size_t>(j.parent)];
        }
        chain.push_back(i);

        mass += j.mass;
        weighted += j.mass * (link.position + link.rotation * j.com);
    }
    m_com = weighted / mass;
}

const Pose& KinematicsCache::link_pose(int link) const
{
    return link < 0 ? m_base : m_links.at(static_cast<size_t>(link));
}

const FrameSpec& KinematicsCache::require_frame(FrameId id) const
{
    const FrameSpec* f = m_model->find_frame(frame_name(id));
    if (f == nullptr)
    {
        throw std::invalid_argument(std::string("kinematics: model has no frame '") + frame_name(id)
                                    + "'");
    }
    return *f;
}

Pose KinematicsCache::frame_pose(FrameId id) const
{
    if (id == FrameId::Com)
    {
        return Pose{m_com, m_base.rotation};
    }
    const FrameSpec& f = require_frame(id);
    const Pose& link = link_pose(f.link);
    return Pose{link.position + link.rotation * f.offset, link.rotation};
}

Eigen::MatrixXd KinematicsCache::point_jacobian(int link, const Eigen::Vector3d& p) const
{
    const int n = m_model->dofs();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(6, n + 6);
    J.block<3, 3>(0, 0).setIdentity();
    J.block<3, 3>(0, 3) = -skew(p - m_base.position);
    J.block<3, 3>(3, 3).setIdentity();
    if (link < 0)
    {
        return J;
    }
    for (int i : m_ancestors.at(static_cast<size_t>(link)))
    {
        const Eigen::Vector3d& a = m_axes[static_cast<size_t>(i)];
        const Eigen::Vector3d& o = m_links[static_cast<size_t>(i)].position;
        J.block<3, 1>(0, 6 + i) = a.cross(p - o);
        J.block<3, 1>(3, 6 + i) = a;
    }
    return J;
}

Eigen::MatrixXd KinematicsCache::jacobian(FrameId id) const
{
    if (id == FrameId::Com)
    {
        const int n = m_model->dofs();
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(6, n + 6);
        J.topRows(3) = com_jacobian();
        J.block<3, 3>(3, 3).setIdentity();
        return J;
    }
    const FrameSpec& f = require_frame(id);
    return point_jacobian(f.link, frame_pose(id).position);
}

Eigen::MatrixXd KinematicsCache::com_jacobian() const
{
    const RobotModel& model = *m_model;
    const int n = model.dofs();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(3, n + 6);
    const double total = model.total_mass();

    // Base columns: every link translates with the base and rotates about p_B.
    J.block<3, 3>(0, 0).setIdentity();
    J.block<3, 3>(0, 3) = -skew(m_com - m_base.position);

    // Joint i moves all mass distal to it: accumulate subtree mass and first moment.
    std::vector<double> sub_mass(static_cast<size_t>(n), 0.0);
    std::vector<Eigen::Vector3d> sub_moment(static_cast<size_t>(n), Eigen::Vector3d::Zero());
    for (int i = n - 1; i >= 0; --i)
    {
        const auto& j = model.joints[static_cast<size_t>(i)];
        const Pose& link = m_links[static_cast<size_t>(i)];
        sub_mass[static_cast<size_t>(i)] += j.mass;
        sub_moment[static_cast<size_t>(i)] += j.mass * (link.position + link.rotation * j.com);
        if (j.parent >= 0)
        {
            sub_mass[static_cast<size_t>(j.parent)] += sub_mass[static_cast<size_t>(i)];
            sub_moment[static_cast<size_t>(j.parent)] += sub_moment[static_cast<size_t>(i)];
        }
    }
    for (int i = 0; i < n; ++i)
    {
        const double m = sub_mass[static_cast<size_t>(i)];
        if (m <= 0.0)
        {
            continue;
        }
        const Eigen::Vector3d c = sub_moment[static_cast<size_t>(i)] / m;
        const Eigen::Vector3d& a = m_axes[static_cast<size_t>(i)];
        const Eigen::Vector3d& o = m_links[static_cast<size_t>(i)].position;
        J.block<3, 1>(0, 6 + i) = (m / total) * a.cross(c - o);
    }
    return J;
}

Pose forward_kinematics(const RobotModel& model, const RobotState& state, FrameId frame)
{
    return KinematicsCache(model, state).frame_pose(frame);
}

Eigen::MatrixXd jacobian(const RobotModel& model, const RobotState& state, FrameId frame)
{
    return KinematicsCache(model, state).jacobian(frame);
}

RobotState integrate_configuration(const RobotState& state, const Eigen::VectorXd& nu, double dt)
{
    const Eigen::Index n = state.joint_positions.size();
    if (nu.size() != n + 6)
    {
        throw std::invalid_argument("integrate: velocity size must be n + 6");
    }
    RobotState next = state;
    next.base.position += dt * nu.head<3>();
    next.base.rotation = so3_exp(dt * nu.segment<3>(3)) * state.base.rotation;
    next.joint_positions += dt * nu.tail(n);
    next.base_velocity = nu.head<6>();
    next.joint_velocities = nu.tail(n);
    return next;
}

RobotModel default_biped()
{
    RobotModel m;
    m.base_mass = 36.0;
    m.base_com = {-0.0201117918422, 0.0, 0.086};
    m.foot_length = 0.2;
    m.foot_width = 0.1;

    const double hip_offset = 0.1;
    const double thigh = 0.35;
    const double shank = 0.35;
    const double sole = 0.05;

    for (int side = 0; side < 2; ++side)
    {
        const std::string prefix = side == 0 ? "l_" : "r_";
        const double y = side == 0 ? hip_offset : -hip_offset;
        const int first = m.dofs();
        m.joints.push_back({prefix + "hip_yaw", -1, {0.0, y, 0.0}, Eigen::Vector3d::UnitZ(), 0.0, {0, 0, 0}, -0.6, 0.6});
        m.joints.push_back({prefix + "hip_roll", first, {0, 0, 0}, Eigen::Vector3d::UnitX(), 0.0, {0, 0, 0}, -0.5, 0.5});
        m.joints.push_back({prefix + "hip_pitch", first + 1, {0, 0, 0}, Eigen::Vector3d::UnitY(), 4.5, {0, 0, -thigh / 2}, -1.6, 0.8});
        m.joints.push_back({prefix + "knee", first + 2, {0, 0, -thigh}, Eigen::Vector3d::UnitY(), 2.5, {0, 0, -shank / 2}, 0.0, 2.3});
        m.joints.push_back({prefix + "ankle_pitch", first + 3, {0, 0, -shank}, Eigen::Vector3d::UnitY(), 0.0, {0, 0, 0}, -1.0, 1.0});
        m.joints.push_back({prefix + "ankle_roll", first + 4, {0, 0, 0}, Eigen::Vector3d::UnitX(), 0.0, {0, 0, 0}, -0.5, 0.5});
        m.frames.push_back({side == 0 ? "left_foot" : "right_foot", first + 5, {0.0, 0.0, -sole}});
    }
    m.frames.push_back({"torso", -1, {0.0, 0.0, 0.3}});

    m.rest_posture = Eigen::VectorXd::Zero(12);
    for (int side = 0; side < 2; ++side)
    {
        m.rest_posture(side * 6 + 2) = -0.3;
        m.rest_posture(side * 6 + 3) = 0.6;
        m.rest_posture(side * 6 + 4) = -0.3;
    }
    return m;
}

} // namespace gaintune
