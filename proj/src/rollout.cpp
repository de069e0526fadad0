#include <gaintune/sim/rollout.h>

#include <cmath>
#include <ostream>

namespace gaintune::sim {

ContactSchedule ScheduleParams::build() const
{
    if (standing)
    {
        return make_standing_schedule(standing_duration, step_width);
    }
    StepPlanOptions opt;
    opt.step_width = step_width;
    opt.heading_change = heading_change;
    return make_schedule(step_length, step_duration, n_steps, double_support_ratio, opt);
}

ScheduleParams ScheduleParams::train()
{
    return {};
}

ScheduleParams ScheduleParams::validation()
{
    ScheduleParams p;
    p.name = "validation";
    p.heading_change = 0.05;
    return p;
}

ScheduleParams ScheduleParams::stand(double duration)
{
    ScheduleParams p;
    p.name = "stand";
    p.standing = true;
    p.standing_duration = duration;
    return p;
}

const char* to_string(Outcome outcome)
{
    switch (outcome)
    {
    case Outcome::Completed:
        return "completed";
    case Outcome::Fell:
        return "fell";
    case Outcome::Truncated:
        return "truncated";
    }
    return "?";
}

namespace {

double wrap_angle(double a)
{
    return std::atan2(std::sin(a), std::cos(a));
}

FrameId foot_frame(int contact)
{
    return contact == kLeft ? FrameId::LeftFoot : FrameId::RightFoot;
}

} // namespace

std::pair<Pose, Vector6d> foot_trajectory(const ContactSchedule& schedule, int contact, double t, double swing_height)
{
    const double tc = std::min(t, schedule.duration);
    if (const Foothold* f = schedule.current(contact, tc))
    {
        return {f->pose, Vector6d::Zero()};
    }
    const Foothold& from = schedule.latest(contact, tc);
    const Foothold* to = schedule.next(contact, tc);
    if (to == nullptr)
    {
        return {from.pose, Vector6d::Zero()};
    }
    const double T = to->t_begin - from.t_end;
    const double s = std::clamp((tc - from.t_end) / T, 0.0, 1.0);
    const double a = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    const double da = 30.0 * s * s * (1.0 - s) * (1.0 - s) / T;
    const double bump = 16.0 * s * s * (1.0 - s) * (1.0 - s);
    const double dbump = 32.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / T;

    const Eigen::Vector3d delta = to->pose.position - from.pose.position;
    const double yaw0 = yaw_of(from.pose.rotation);
    const double dyaw = wrap_angle(yaw_of(to->pose.rotation) - yaw0);

    Pose p;
    p.position = from.pose.position + a * delta;
    p.position.z() += swing_height * bump;
    p.rotation = rot_z(yaw0 + a * dyaw);
    Vector6d v = Vector6d::Zero();
    v.head<3>() = da * delta;
    v(2) += swing_height * dbump;
    v(5) = da * dyaw;
    return {p, v};
}

RolloutResult rollout(const ControllerGains& gains, const RolloutConfig& config, std::uint64_t seed)
{
    const RobotModel& model = config.model;
    const int n = model.dofs();
    RolloutResult result;
    result.mean_torque = Eigen::VectorXd::Zero(n);

    const ContactSchedule schedule = config.schedule.build();
    result.duration = schedule.duration;
    if (schedule.duration <= 0.0)
    {
        return result;
    }

    PlantParams plant_params = config.plant;
    plant_params.mass = model.total_mass();
    const double g = -plant_params.gravity.z();
    const control::LipmParams lipm{plant_params.com_height, g};
    if (!control::validate_gains(gains.zmp, lipm).ok() || !gains.mpc.valid())
    {
        result.outcome = Outcome::Fell;
        result.reason = FallReason::InfeasibleGains;
        return result;
    }

    mpc::MpcConfig mpc_config = config.mpc;
    mpc_config.mass = plant_params.mass;
    mpc_config.gravity = plant_params.gravity;
    mpc::CentroidalMpc controller(mpc_config, gains.mpc);
    const control::WbqpConfig wbqp = control::WbqpConfig::defaults(model);
    const NominalPlan plan(schedule, plant_params.com_height, g, config.control_dt);

    // Initial configuration: rest posture with the soles on the initial footholds.
    RobotState initial = RobotState::rest(model);
    initial.base.position = schedule.latest(kLeft, 0.0).pose.position
                            - forward_kinematics(model, initial, FrameId::LeftFoot).position;
    const double torso_height = forward_kinematics(model, initial, FrameId::Torso).position.z();
    const double initial_com_height = KinematicsCache(model, initial).com().z();

    Philox jitter_rng(seed, 0);
    Plant plant(model, plant_params, jitter_schedule(schedule, plant_params.contact_jitter, jitter_rng),
                derive_seed(seed, 1), initial);

    const double dt = plant_params.dt;
    const double end_time = std::min(schedule.duration, config.max_time);
    const long total_steps = std::lround(end_time / dt);
    const long control_every = std::max(1L, std::lround(config.control_dt / dt));
    const long mpc_every = std::max(1L, std::lround(mpc_config.sampling / dt));
    const double mass = plant_params.mass;

    Eigen::VectorXd nu_star = Eigen::VectorXd::Zero(n + 6);
    ContactVectors force_command{Eigen::Vector3d(0, 0, 0.5 * mass * g), Eigen::Vector3d(0, 0, 0.5 * mass * g)};
    controller.reset(force_command);
    mpc::MpcSolution solution;
    mpc::CentroidalState mpc_state;
    double mpc_time = 0.0;
    Eigen::Vector2d com_star = plant.state().kinematic_com.head<2>();
    Eigen::VectorXd torque_sum = Eigen::VectorXd::Zero(n);
    long torque_samples = 0;

    auto fail = [&] (FallReason reason) {
        result.outcome = Outcome::Fell;
        result.reason = reason;
        result.walked_time = plant.state().time;
    };

    bool fallen = false;
    for (long k = 0; k < total_steps && !fallen; ++k)
    {
        const double t = static_cast<double>(k) * dt;
        const PlantState& ps = plant.state();

        if (k % mpc_every == 0)
        {
            const KinematicsCache kin(model, ps.body);
            mpc_state.com = ps.com;
            mpc_state.momentum = ps.momentum;
            for (int i = 0; i < kNumContacts; ++i)
            {
                const auto ui = static_cast<size_t>(i);
                mpc_state.contacts[ui] = ps.contacts[ui].active ? ps.contacts[ui].position
                                                                : kin.frame_pose(foot_frame(i)).position;
            }
            mpc::Window window;
            const double T = mpc_config.sampling;
            const Eigen::Vector2d c_now = plan.com(t);
            const Eigen::Vector3d com_offset
                = Eigen::Vector3d(c_now.x(), c_now.y(), initial_com_height) - ps.com;
            for (int s = 0; s < mpc_config.horizon; ++s)
            {
                mpc::StepReference r;
                const double ts = t + s * T;
                const double te = ts + T;
                const double tm = std::min(ts + 0.5 * T, schedule.duration);
                for (int i = 0; i < kNumContacts; ++i)
                {
                    const auto ui = static_cast<size_t>(i);
                    r.active[ui] = schedule.active(i, tm);
                    r.contact_nominal[ui] = r.active[ui] ? schedule.target(i, tm).pose.position
                                                         : foot_trajectory(schedule, i, te, config.swing_height).first.position;
                }
                // Nominal momentum plus a decaying correction that removes the current CoM offset.
                const double decay = std::exp(-(te - t) / config.com_recovery_time) / config.com_recovery_time;
                r.momentum.head<3>() = mass * decay * com_offset;
                r.momentum.head<2>() += mass * plan.com_velocity(te);
                r.com_offset.head<2>() = plan.com(ts) - c_now;
                window.steps.push_back(r);
            }
            solution = controller.step(mpc_state, window);
            ++result.mpc_solves;
            if (solution.status != mpc::MpcStatus::Ok)
            {
                fail(FallReason::ControllerFailure);
                break;
            }
            force_command = solution.first.forces;
            mpc_time = t;
        }

        if (k % control_every == 0)
        {
            const KinematicsCache kin(model, ps.body);
            const Eigen::Vector3d c_kin = kin.com();

            // References from the MPC prediction over the current sampling period.
            const mpc::CentroidalState& s0 = solution.predicted.states[0];
            const mpc::CentroidalState& s1 = solution.predicted.states[1];
            const double tau = t - mpc_time;
            const double a = tau / mpc_config.sampling;
            const Eigen::Vector2d x_ref = s0.com.head<2>() + tau * s0.momentum.head<2>() / mass;
            const Eigen::Vector2d xd_ref = ((1.0 - a) * s0.momentum.head<2>() + a * s1.momentum.head<2>()) / mass;

            // Desired ZMP: the planned total force acting through the planned CoM.
            const Eigen::Vector3d desired_force = force_command[0] + force_command[1];
            const Eigen::Vector3d com_ref(x_ref.x(), x_ref.y(), s0.com.z());
            const Eigen::Vector2d zmp_ref
                = control::compute_zmp({{com_ref, desired_force, Eigen::Vector3d::Zero()}}).value_or(plan.zmp(t));
            const Eigen::Vector2d zmp = ps.zmp.value_or(zmp_ref);

            const Eigen::Vector2d xd_star
                = control::com_velocity_reference(xd_ref, x_ref, c_kin.head<2>(), zmp_ref, zmp, gains.zmp);

            control::TaskReferences refs;
            refs.com_velocity = control::com_task_velocity(xd_star, c_kin.head<2>(), com_star, gains.qp.k_com);
            com_star += config.control_dt * xd_star;
            for (int i = 0; i < kNumContacts; ++i)
            {
                const auto [pose, twist] = foot_trajectory(schedule, i, t, config.swing_height);
                refs.feet[static_cast<size_t>(i)] = control::foot_velocity_reference(
                    pose, twist, kin.frame_pose(foot_frame(i)), gains.qp.k_feet, gains.qp.k_feet_rotation);
            }
            const double heading_rate = (plan.heading(t + config.control_dt) - plan.heading(t)) / config.control_dt;
            refs.torso = control::torso_velocity_reference(torso_height, 0.0, rot_z(plan.heading(t)),
                                                           Eigen::Vector3d(0.0, 0.0, heading_rate),
                                                           kin.frame_pose(FrameId::Torso), gains.qp.k_torso_height,
                                                           gains.qp.k_torso_rotation);
            refs.posture = control::postural_reference(ps.body.joint_positions, wbqp.desired_posture, wbqp.posture_gain);

            const control::WbqpResult w = control::solve(kin, refs, wbqp);
            if (!w.ok())
            {
                fail(FallReason::ControllerFailure);
                break;
            }
            nu_star = w.nu;

            std::array<bool, kNumContacts> active{ps.contacts[0].active, ps.contacts[1].active};
            const Eigen::VectorXd tau_joint = estimate_torques(kin, ps.forces, active, plant_params.gravity);
            torque_sum += tau_joint.cwiseAbs();
            ++torque_samples;

            if (config.record_log)
            {
                LogRow row;
                row.time = t;
                row.com = ps.com;
                row.zmp = ps.zmp.value_or(Eigen::Vector2d::Constant(std::numeric_limits<double>::quiet_NaN()));
                row.momentum = ps.momentum;
                row.forces = ps.forces;
                row.torques = tau_joint;
                row.zmp_ref = zmp_ref;
                row.com_ref = x_ref;
                row.kinematic_com = c_kin;
                result.log.push_back(row);
            }
        }

        plant.step(nu_star, force_command);
        const FallReason reason = plant.check();
        if (reason != FallReason::None)
        {
            fail(reason);
            fallen = true;
        }
    }

    if (torque_samples > 0)
    {
        result.mean_torque = torque_sum / static_cast<double>(torque_samples);
    }
    if (result.outcome == Outcome::Fell)
    {
        if (config.record_log)
        {
            const PlantState& ps = plant.state();
            LogRow row;
            row.time = ps.time;
            row.com = ps.com;
            row.zmp = ps.zmp.value_or(Eigen::Vector2d::Constant(std::numeric_limits<double>::quiet_NaN()));
            row.momentum = ps.momentum;
            row.forces = ps.forces;
            row.torques = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
            row.fallen = true;
            result.log.push_back(row);
        }
        return result;
    }
    result.walked_time = plant.state().time;
    result.outcome = result.walked_time >= schedule.duration - dt ? Outcome::Completed : Outcome::Truncated;
    return result;
}

void write_log_csv(std::ostream& out, const RolloutResult& result)
{
    out << "time,com_x,com_y,com_z,zmp_x,zmp_y,h_x,h_y,h_z,l_x,l_y,l_z,"
           "f_left_x,f_left_y,f_left_z,f_right_x,f_right_y,f_right_z,zmp_ref_x,zmp_ref_y,com_ref_x,com_ref_y,"
           "com_kin_x,com_kin_y,com_kin_z";
    const int n = static_cast<int>(result.mean_torque.size());
    for (int j = 0; j < n; ++j)
        out << ",tau_" << j;
    out << ",fallen\n";
    out.precision(17);
    for (const LogRow& r : result.log)
    {
        out << r.time;
        for (int i = 0; i < 3; ++i)
            out << ',' << r.com(i);
        for (int i = 0; i < 2; ++i)
            out << ',' << r.zmp(i);
        for (int i = 0; i < 6; ++i)
            out << ',' << r.momentum(i);
        for (const auto& f : r.forces)
            for (int i = 0; i < 3; ++i)
                out << ',' << f(i);
        for (int i = 0; i < 2; ++i)
            out << ',' << r.zmp_ref(i);
        for (int i = 0; i < 2; ++i)
            out << ',' << r.com_ref(i);
        for (int i = 0; i < 3; ++i)
            out << ',' << r.kinematic_com(i);
        for (int j = 0; j < n; ++j)
            out << ',' << (j < r.torques.size() ? r.torques(j) : 0.0);
        out << ',' << (r.fallen ? 1 : 0) << '\n';
    }
}

} // namespace gaintune::sim
