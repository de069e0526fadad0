#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include <gaintune/mpc/centroidal_mpc.h>
#include <gaintune/sim/plant.h>

#include "test_util.h"

using namespace gaintune;
using namespace gaintune::sim;
using Eigen::Vector2d;
using Eigen::Vector3d;

namespace {

RobotState standing_pose(const RobotModel& model)
{
    RobotState s = RobotState::rest(model);
    s.base.position = Vector3d(0.0, 0.1, 0.0) - forward_kinematics(model, s, FrameId::LeftFoot).position;
    return s;
}

ContactVectors equilibrium_forces(double mass, double g)
{
    return {Vector3d(0, 0, 0.5 * mass * g), Vector3d(0, 0, 0.5 * mass * g)};
}

} // namespace

TEST_CASE("equilibrium is a fixed point without mismatch")
{
    const RobotModel model = default_biped();
    PlantParams p = PlantParams().without_mismatch();
    p.mass = model.total_mass();
    const RobotState initial = standing_pose(model);
    Plant plant(model, p, make_standing_schedule(5.0), 1, initial);
    const PlantState start = plant.state();

    const Eigen::VectorXd nu = Eigen::VectorXd::Zero(model.dofs() + 6);
    for (int k = 0; k < 2000; ++k)
    {
        plant.step(nu, equilibrium_forces(p.mass, 9.81));
        REQUIRE(plant.check() == FallReason::None);
    }
    const PlantState& end = plant.state();
    CHECK((end.com - start.com).norm() <= 1e-12);
    CHECK(end.momentum.norm() <= 1e-12);
    CHECK((end.body.joint_positions - start.body.joint_positions).norm() == 0.0);
    CHECK(end.time == doctest::Approx(2.0));
    REQUIRE(end.zmp.has_value());
    CHECK((*end.zmp - end.com.head<2>()).norm() <= 1e-12);
}

TEST_CASE("actuator lag follows the closed-form first-order response")
{
    const RobotModel model = default_biped();
    PlantParams p = PlantParams().without_mismatch();
    p.mass = model.total_mass();
    p.actuator_lag = 0.03;
    Plant plant(model, p, make_standing_schedule(5.0), 1, standing_pose(model));

    Eigen::VectorXd nu = Eigen::VectorXd::Zero(model.dofs() + 6);
    nu(6 + 2) = 0.2;
    nu(6 + 9) = -0.1;
    for (int k = 1; k <= 200; ++k)
    {
        plant.step(nu, equilibrium_forces(p.mass, 9.81));
        const double t = k * p.dt;
        const double response = 1.0 - std::exp(-t / p.actuator_lag);
        CHECK(std::abs(plant.state().body.joint_velocities(2) - 0.2 * response) <= 1e-6);
        CHECK(std::abs(plant.state().body.joint_velocities(9) + 0.1 * response) <= 1e-6);
    }
}

TEST_CASE("velocity noise is zero mean with the configured spread")
{
    const RobotModel model = default_biped();
    PlantParams p = PlantParams().without_mismatch();
    p.mass = model.total_mass();
    p.velocity_noise = 0.01;
    Plant plant(model, p, make_standing_schedule(5.0), 3, standing_pose(model));
    const Eigen::VectorXd nu = Eigen::VectorXd::Zero(model.dofs() + 6);
    double sum = 0.0;
    double sq = 0.0;
    int count = 0;
    for (int k = 0; k < 400; ++k)
    {
        plant.step(nu, equilibrium_forces(p.mass, 9.81));
        for (int j = 0; j < model.dofs(); ++j)
        {
            const double v = plant.state().body.joint_velocities(j);
            sum += v;
            sq += v * v;
            ++count;
        }
    }
    const double mean = sum / count;
    const double sd = std::sqrt(sq / count - mean * mean);
    CHECK(std::abs(mean) < 5e-4);
    CHECK(sd == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("without mismatch and coupling the plant reproduces the controller model")
{
    const RobotModel model = default_biped();
    PlantParams p = PlantParams().without_mismatch();
    p.mass = model.total_mass();
    p.coupling_stiffness = 0.0;
    p.coupling_damping = 0.0;
    p.dt = 0.1;
    const Vector3d gravity(0, 0, -9.81);
    Plant plant(model, p, make_standing_schedule(10.0), 1, standing_pose(model));

    mpc::CentroidalState s;
    s.com = plant.state().com;
    s.momentum = mpc::Vector6d::Zero();
    s.contacts = {plant.state().contacts[0].position, plant.state().contacts[1].position};

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Eigen::VectorXd nu = Eigen::VectorXd::Zero(model.dofs() + 6);
    for (int k = 0; k < 20; ++k)
    {
        mpc::ControlOutput in;
        for (auto& f : in.forces)
            f = Vector3d(30.0 * u(rng), 30.0 * u(rng), 245.25 + 40.0 * u(rng));
        plant.step(nu, in.forces);
        s = mpc::integrate_centroidal(s, in, p.dt, {true, true}, p.mass, gravity);
        CHECK((plant.state().com - s.com).norm() <= 1e-9);
        CHECK((plant.state().momentum.head<3>() - s.momentum.head<3>()).norm() <= 1e-9);
    }
}

TEST_CASE("contact forces are clipped to the friction cone and unilateral")
{
    const RobotModel model = default_biped();
    PlantParams p = PlantParams().without_mismatch();
    p.mass = model.total_mass();
    p.coupling_stiffness = 0.0;
    p.coupling_damping = 0.0;
    Plant plant(model, p, make_standing_schedule(1.0), 1, standing_pose(model));
    const Eigen::VectorXd nu = Eigen::VectorXd::Zero(model.dofs() + 6);
    plant.step(nu, {Vector3d(300.0, 400.0, 100.0), Vector3d(10.0, 0.0, -5.0)});
    const ContactVectors& f = plant.state().forces;
    CHECK(f[0].head<2>().norm() == doctest::Approx(70.0));
    CHECK(f[0].z() == 100.0);
    CHECK(f[0].x() / f[0].y() == doctest::Approx(0.75));
    CHECK(f[1].norm() == 0.0);
}

TEST_CASE("support polygon and distance")
{
    std::array<ContactState, kNumContacts> contacts;
    contacts[0] = {true, Vector3d(0.0, 0.1, 0.0), 0.0};
    contacts[1] = {true, Vector3d(0.0, -0.1, 0.0), 0.0};
    const auto poly = support_polygon(contacts, 0.2, 0.1);
    REQUIRE(poly.size() == 4);
    double area = 0.0;
    for (size_t i = 0; i < poly.size(); ++i)
    {
        const Vector2d& a = poly[i];
        const Vector2d& b = poly[(i + 1) % poly.size()];
        area += a.x() * b.y() - a.y() * b.x();
    }
    CHECK(0.5 * area == doctest::Approx(0.2 * 0.3));
    CHECK(distance_to_polygon(poly, {0.0, 0.0}) == 0.0);
    CHECK(distance_to_polygon(poly, {0.15, 0.0}) == doctest::Approx(0.05));
    CHECK(distance_to_polygon(poly, {0.13, 0.19}) == doctest::Approx(0.05));

    contacts[1].active = false;
    contacts[0].yaw = M_PI / 2.0;
    const auto single = support_polygon(contacts, 0.2, 0.1);
    REQUIRE(single.size() == 4);
    CHECK(distance_to_polygon(single, {0.0, 0.19}) == 0.0);
    CHECK(distance_to_polygon(single, {0.07, 0.1}) == doctest::Approx(0.02));

    contacts[0].active = false;
    CHECK(std::isinf(distance_to_polygon(support_polygon(contacts, 0.2, 0.1), {0.0, 0.0})));
}

TEST_CASE("fall rules")
{
    const PlantParams p;
    std::array<ContactState, kNumContacts> contacts;
    contacts[0] = {true, Vector3d(0.0, 0.1, 0.0), 0.0};
    contacts[1] = {true, Vector3d(0.0, -0.1, 0.0), 0.0};
    const auto poly = support_polygon(contacts, 0.2, 0.1);

    PlantState s;
    s.body = RobotState::rest(default_biped());
    s.com = {0.0, 0.0, 0.7};
    s.zmp = Vector2d(0.0, 0.0);
    CHECK(fall_check(s, poly, p) == FallReason::None);

    SUBCASE("low CoM")
    {
        s.com.z() = 0.3;
        CHECK(fall_check(s, poly, p) == FallReason::Height);
    }
    SUBCASE("non-finite state")
    {
        s.momentum(4) = std::numeric_limits<double>::quiet_NaN();
        CHECK(fall_check(s, poly, p) == FallReason::NonFinite);
    }
    SUBCASE("ZMP 5 cm outside for 60 ms")
    {
        s.zmp = Vector2d(0.15, 0.0);
        FallReason first_fall = FallReason::None;
        double fall_time = -1.0;
        for (int k = 0; k <= 60 && first_fall == FallReason::None; ++k)
        {
            s.time = 1.0 + k * p.dt;
            first_fall = fall_check(s, poly, p);
            if (first_fall != FallReason::None)
                fall_time = s.time - 1.0;
        }
        CHECK(first_fall == FallReason::Zmp);
        CHECK(fall_time == doctest::Approx(0.051));
    }
    SUBCASE("short excursions and the margin are tolerated")
    {
        for (int k = 0; k < 40; ++k)
        {
            s.time = k * p.dt;
            s.zmp = Vector2d(0.15, 0.0);
            CHECK(fall_check(s, poly, p) == FallReason::None);
        }
        s.zmp = Vector2d(0.115, 0.0);
        for (int k = 40; k < 200; ++k)
        {
            s.time = k * p.dt;
            CHECK(fall_check(s, poly, p) == FallReason::None);
        }
        CHECK(s.outside_since < 0.0);
    }
}

TEST_CASE("torque estimate")
{
    SUBCASE("massless links and no forces")
    {
        RobotModel model = default_biped();
        for (auto& j : model.joints)
            j.mass = 0.0;
        const KinematicsCache kin(model, RobotState::rest(model));
        const Eigen::VectorXd tau = estimate_torques(kin, {Vector3d::Zero(), Vector3d::Zero()}, {true, true},
                                                     Vector3d(0, 0, -9.81));
        CHECK(tau.size() == model.dofs());
        CHECK(tau.norm() <= 1e-12);
    }
    SUBCASE("identity joint rows expose the wrench")
    {
        const int n = 6;
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(6, 6 + n);
        J.rightCols(n).setIdentity();
        Vector6d w;
        w << 1.0, -2.0, 3.0, 0.5, -0.25, 4.0;
        const Eigen::VectorXd tau = estimate_torques(Eigen::VectorXd::Zero(6 + n), {J}, {w}, n);
        CHECK((tau - w).norm() == 0.0);
    }
    SUBCASE("random instances against an explicit product")
    {
        std::mt19937_64 rng(5);
        std::normal_distribution<double> nd;
        for (int trial = 0; trial < 50; ++trial)
        {
            const int n = 12;
            Eigen::VectorXd G(6 + n);
            for (int i = 0; i < G.size(); ++i)
                G(i) = nd(rng);
            std::vector<Eigen::MatrixXd> J(2, Eigen::MatrixXd(6, 6 + n));
            std::vector<Vector6d> w(2);
            for (int c = 0; c < 2; ++c)
            {
                for (int r = 0; r < 6; ++r)
                {
                    w[c](r) = 100.0 * nd(rng);
                    for (int k = 0; k < 6 + n; ++k)
                        J[c](r, k) = nd(rng);
                }
            }
            const Eigen::VectorXd tau = estimate_torques(G, J, w, n);
            for (int j = 0; j < n; ++j)
            {
                double expected = G(6 + j);
                for (int c = 0; c < 2; ++c)
                    for (int r = 0; r < 6; ++r)
                        expected += J[c](r, 6 + j) * w[c](r);
                CHECK(std::abs(tau(j) - expected) <= 1e-10);
            }
        }
    }
    SUBCASE("standing load is carried by the knees")
    {
        const RobotModel model = default_biped();
        const RobotState s = standing_pose(model);
        const KinematicsCache kin(model, s);
        const double half = 0.5 * model.total_mass() * 9.81;
        const Eigen::VectorXd tau
            = estimate_torques(kin, equilibrium_forces(model.total_mass(), 9.81), {true, true}, Vector3d(0, 0, -9.81));
        CHECK(std::abs(tau(3)) > 0.1 * half * 0.35);
        CHECK(tau(3) == doctest::Approx(tau(9)).epsilon(1e-9));
    }
}

TEST_CASE("contact timing jitter")
{
    const ContactSchedule nominal = make_schedule(0.1, 0.8, 6, 0.25, {});
    Philox a(9, 0);
    const ContactSchedule zero = jitter_schedule(nominal, 0.0, a);
    REQUIRE(zero.footholds.size() == nominal.footholds.size());
    for (size_t i = 0; i < zero.footholds.size(); ++i)
    {
        CHECK(zero.footholds[i].t_begin == nominal.footholds[i].t_begin);
        CHECK(zero.footholds[i].t_end == nominal.footholds[i].t_end);
    }

    Philox b(9, 0);
    Philox c(9, 0);
    const ContactSchedule j1 = jitter_schedule(nominal, 0.01, b);
    const ContactSchedule j2 = jitter_schedule(nominal, 0.01, c);
    bool moved = false;
    for (size_t i = 0; i < j1.footholds.size(); ++i)
    {
        CHECK(j1.footholds[i].t_begin == j2.footholds[i].t_begin);
        CHECK(j1.footholds[i].t_end == j2.footholds[i].t_end);
        CHECK(j1.footholds[i].t_begin <= j1.footholds[i].t_end);
        CHECK(std::abs(j1.footholds[i].t_begin - nominal.footholds[i].t_begin) < 0.06);
        moved = moved || j1.footholds[i].t_end != nominal.footholds[i].t_end;
    }
    CHECK(moved);
    // Start and end of the task are not perturbed.
    CHECK(j1.footholds.front().t_begin == 0.0);
    CHECK(j1.footholds.back().t_end == nominal.duration);
}

TEST_CASE("plant parameter validation")
{
    PlantParams p;
    CHECK_NOTHROW(p.validate());
    p.velocity_noise = -1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = PlantParams();
    p.dt = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    const PlantParams q = PlantParams().without_mismatch();
    CHECK(q.actuator_lag == 0.0);
    CHECK(q.velocity_noise == 0.0);
    CHECK(q.contact_jitter == 0.0);
    CHECK(q.pushes.empty());
}
