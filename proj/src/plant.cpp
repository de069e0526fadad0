#include <gaintune/sim/plant.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <gaintune/control/zmp_com.h>

namespace gaintune::sim {

PlantParams PlantParams::without_mismatch() const
{
    PlantParams p = *this;
    p.actuator_lag = 0.0;
    p.velocity_noise = 0.0;
    p.contact_jitter = 0.0;
    p.pushes.clear();
    return p;
}

void PlantParams::validate() const
{
    if (!(mass > 0.0) || !(dt > 0.0) || !(com_height > 0.0))
        throw std::invalid_argument("plant: mass, dt and com_height must be > 0");
    if (actuator_lag < 0.0 || velocity_noise < 0.0 || contact_jitter < 0.0)
        throw std::invalid_argument("plant: lag, noise and jitter must be >= 0");
    if (coupling_stiffness < 0.0 || coupling_damping < 0.0 || coupling_filter < 0.0 || !(friction > 0.0))
        throw std::invalid_argument("plant: coupling gains must be >= 0 and friction > 0");
    if (zmp_margin < 0.0 || zmp_dwell < 0.0 || min_height_ratio < 0.0)
        throw std::invalid_argument("plant: fall thresholds must be >= 0");
    for (const Push& p : pushes)
    {
        if (!(p.duration >= 0.0) || !p.force.allFinite())
            throw std::invalid_argument("plant: push durations must be >= 0 and forces finite");
    }
}

const char* to_string(FallReason reason)
{
    switch (reason)
    {
    case FallReason::None:
        return "none";
    case FallReason::Zmp:
        return "zmp";
    case FallReason::Height:
        return "height";
    case FallReason::NonFinite:
        return "non_finite";
    case FallReason::ControllerFailure:
        return "controller_failure";
    case FallReason::InfeasibleGains:
        return "infeasible_gains";
    }
    return "?";
}

namespace {

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c)
{
    return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

double segment_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& p)
{
    const Eigen::Vector2d ab = b - a;
    const double len2 = ab.squaredNorm();
    const double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (a + s * ab - p).norm();
}

} // namespace

std::vector<Eigen::Vector2d> support_polygon(const std::array<ContactState, kNumContacts>& contacts,
                                             double foot_length, double foot_width)
{
    std::vector<Eigen::Vector2d> pts;
    for (const ContactState& c : contacts)
    {
        if (!c.active)
            continue;
        const Eigen::Rotation2Dd R(c.yaw);
        for (double sx : {-0.5, 0.5})
        {
            for (double sy : {-0.5, 0.5})
            {
                pts.push_back(c.position.head<2>() + R * Eigen::Vector2d(sx * foot_length, sy * foot_width));
            }
        }
    }
    if (pts.size() < 3)
        return pts;

    // Andrew's monotone chain
    std::sort(pts.begin(), pts.end(), [] (const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    std::vector<Eigen::Vector2d> hull(2 * pts.size());
    size_t k = 0;
    for (size_t i = 0; i < pts.size(); ++i)
    {
        while (k >= 2 && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0)
            --k;
        hull[k++] = pts[i];
    }
    for (size_t i = pts.size() - 1, t = k + 1; i-- > 0;)
    {
        while (k >= t && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0)
            --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

double distance_to_polygon(const std::vector<Eigen::Vector2d>& polygon, const Eigen::Vector2d& point)
{
    if (polygon.empty())
        return std::numeric_limits<double>::infinity();
    if (polygon.size() == 1)
        return (polygon[0] - point).norm();
    const size_t n = polygon.size();
    bool inside = n >= 3;
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; ++i)
    {
        const Eigen::Vector2d& a = polygon[i];
        const Eigen::Vector2d& b = polygon[(i + 1) % n];
        if (cross2(a, b, point) < 0.0)
            inside = false;
        best = std::min(best, segment_distance(a, b, point));
    }
    return inside ? 0.0 : best;
}

FallReason fall_check(PlantState& state, const std::vector<Eigen::Vector2d>& polygon, const PlantParams& params)
{
    if (!state.com.allFinite() || !state.momentum.allFinite() || !state.body.all_finite())
        return FallReason::NonFinite;
    if (state.com.z() < params.min_height_ratio * params.com_height)
        return FallReason::Height;

    const bool outside = !state.zmp || distance_to_polygon(polygon, *state.zmp) > params.zmp_margin;
    if (!outside)
    {
        state.outside_since = -1.0;
        return FallReason::None;
    }
    if (state.outside_since < 0.0)
        state.outside_since = state.time;
    // half a step of slack so the dwell is not shortened by accumulated round-off
    if (state.time - state.outside_since > params.zmp_dwell + 0.5 * params.dt)
        return FallReason::Zmp;
    return FallReason::None;
}

Eigen::VectorXd estimate_torques(const Eigen::VectorXd& gravity_term, const std::vector<Eigen::MatrixXd>& jacobians,
                                 const std::vector<Vector6d>& wrenches, int dofs)
{
    if (jacobians.size() != wrenches.size())
        throw std::invalid_argument("estimate_torques: one wrench per Jacobian");
    Eigen::VectorXd tau = gravity_term;
    for (size_t i = 0; i < jacobians.size(); ++i)
    {
        tau.noalias() += jacobians[i].transpose() * wrenches[i];
    }
    return tau.tail(dofs);
}

Eigen::VectorXd estimate_torques(const KinematicsCache& kin, const ContactVectors& ground_forces,
                                 const std::array<bool, kNumContacts>& active, const Eigen::Vector3d& gravity)
{
    const int n = kin.model().dofs();
    const Eigen::VectorXd G = -kin.model().total_mass() * kin.com_jacobian().transpose() * gravity;
    std::vector<Eigen::MatrixXd> jac;
    std::vector<Vector6d> wrenches;
    for (int i = 0; i < kNumContacts; ++i)
    {
        if (!active[static_cast<size_t>(i)])
            continue;
        jac.push_back(kin.jacobian(i == kLeft ? FrameId::LeftFoot : FrameId::RightFoot));
        Vector6d w = Vector6d::Zero();
        w.head<3>() = -ground_forces[static_cast<size_t>(i)];
        wrenches.push_back(w);
    }
    return estimate_torques(G, jac, wrenches, n);
}

ContactSchedule jitter_schedule(const ContactSchedule& nominal, double jitter, Philox& rng)
{
    ContactSchedule s = nominal;
    for (Foothold& f : s.footholds)
    {
        const double a = rng.normal();
        const double b = rng.normal();
        if (f.t_begin > 0.0)
            f.t_begin = std::max(0.0, f.t_begin + jitter * a);
        if (f.t_end < nominal.duration)
            f.t_end = std::min(nominal.duration, f.t_end + jitter * b);
        f.t_end = std::max(f.t_end, f.t_begin);
    }
    return s;
}

Plant::Plant(const RobotModel& model, PlantParams params, ContactSchedule realized, std::uint64_t seed,
             const RobotState& initial)
    : m_model(&model)
    , m_params(std::move(params))
    , m_schedule(std::move(realized))
    , m_rng(seed, 1)
{
    m_params.validate();
    m_state.body = initial;
    const KinematicsCache kin(model, initial);
    m_state.kinematic_com = kin.com();
    m_state.com = kin.com();
    for (int i = 0; i < kNumContacts; ++i)
    {
        const Pose foot = kin.frame_pose(i == kLeft ? FrameId::LeftFoot : FrameId::RightFoot);
        m_state.contacts[static_cast<size_t>(i)].position = foot.position;
        m_state.contacts[static_cast<size_t>(i)].yaw = yaw_of(foot.rotation);
    }
    update_contacts();
}

Eigen::Vector3d Plant::foot_position(int contact) const
{
    return forward_kinematics(*m_model, m_state.body, contact == kLeft ? FrameId::LeftFoot : FrameId::RightFoot)
        .position;
}

void Plant::update_contacts()
{
    for (int i = 0; i < kNumContacts; ++i)
    {
        ContactState& c = m_state.contacts[static_cast<size_t>(i)];
        const bool now = m_schedule.active(i, m_state.time);
        if (now && !c.active)
        {
            const Pose foot = forward_kinematics(*m_model, m_state.body, i == kLeft ? FrameId::LeftFoot : FrameId::RightFoot);
            c.position = {foot.position.x(), foot.position.y(), 0.0};
            c.yaw = yaw_of(foot.rotation);
        }
        c.active = now;
    }
}

std::vector<Eigen::Vector2d> Plant::polygon() const
{
    return support_polygon(m_state.contacts, m_model->foot_length, m_model->foot_width);
}

void Plant::step(const Eigen::VectorXd& nu_command, const ContactVectors& force_command)
{
    const int n = m_model->dofs();
    const double dt = m_params.dt;
    update_contacts();

    // Realized velocity: exact first-order response toward the noisy command.
    Eigen::VectorXd target = nu_command;
    if (m_params.velocity_noise > 0.0)
    {
        for (int j = 0; j < n; ++j)
            target(6 + j) += m_params.velocity_noise * m_rng.normal();
    }
    const double decay = m_params.actuator_lag > 0.0 ? std::exp(-dt / m_params.actuator_lag) : 0.0;
    Eigen::VectorXd nu(n + 6);
    nu << m_state.body.base_velocity, m_state.body.joint_velocities;
    nu = target + decay * (nu - target);

    const Eigen::Vector3d kin_com_before = m_state.kinematic_com;
    m_state.body = integrate_configuration(m_state.body, nu, dt);
    m_state.body.base_velocity = nu.head<6>();
    m_state.body.joint_velocities = nu.tail(n);
    m_state.kinematic_com = KinematicsCache(*m_model, m_state.body).com();
    const Eigen::Vector3d raw_rate = (m_state.kinematic_com - kin_com_before) / dt;
    const double smooth = m_params.coupling_filter > 0.0 ? std::exp(-dt / m_params.coupling_filter) : 0.0;
    m_state.kinematic_com_rate = raw_rate + smooth * (m_state.kinematic_com_rate - raw_rate);

    // Ground forces at the realized contacts: commanded forces plus the body's pull.
    const double m = m_params.mass;
    const Eigen::Vector3d pull
        = m * (m_params.coupling_stiffness * (m_state.kinematic_com - m_state.com)
               + m_params.coupling_damping * (m_state.kinematic_com_rate - m_state.momentum.head<3>() / m));
    int n_active = 0;
    for (const ContactState& c : m_state.contacts)
        n_active += c.active ? 1 : 0;

    // The body is treated as rigid: the ground reaction passes through the CoM,
    // so the ZMP follows from the total force and the angular momentum stays zero.
    Eigen::Vector3d ground = Eigen::Vector3d::Zero();
    for (size_t i = 0; i < kNumContacts; ++i)
    {
        Eigen::Vector3d f = Eigen::Vector3d::Zero();
        if (m_state.contacts[i].active)
        {
            f = force_command[i] + pull / n_active;
            if (f.z() <= 0.0)
            {
                f.setZero();
            } else
            {
                const double tangential = f.head<2>().norm();
                const double limit = m_params.friction * f.z();
                if (tangential > limit)
                    f.head<2>() *= limit / tangential;
            }
            ground += f;
        }
        m_state.forces[i] = f;
    }
    Eigen::Vector3d total = m * m_params.gravity + ground;
    for (const Push& p : m_params.pushes)
    {
        if (m_state.time >= p.time && m_state.time < p.time + p.duration)
            total += p.force;
    }

    m_state.zmp.reset();
    if (ground.z() > control::kZmpForceThreshold)
    {
        m_state.zmp = m_state.com.head<2>() - (m_state.com.z() / ground.z()) * ground.head<2>();
    }
    m_state.com += dt * m_state.momentum.head<3>() / m;
    m_state.momentum.head<3>() += dt * total;
    m_state.time = static_cast<double>(++m_steps) * dt;
}

} // namespace gaintune::sim
