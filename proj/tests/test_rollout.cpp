#include <doctest.h>

#include <cstring>
#include <sstream>

#include <gaintune/sim/rollout.h>

using namespace gaintune;
using namespace gaintune::sim;

namespace {

bool same_bits(double a, double b)
{
    return std::memcmp(&a, &b, sizeof(double)) == 0;
}

bool same_row(const LogRow& a, const LogRow& b)
{
    if (!same_bits(a.time, b.time) || a.fallen != b.fallen || a.torques.size() != b.torques.size())
        return false;
    for (int i = 0; i < 3; ++i)
        if (!same_bits(a.com(i), b.com(i)) || !same_bits(a.forces[0](i), b.forces[0](i))
            || !same_bits(a.forces[1](i), b.forces[1](i)))
            return false;
    for (int i = 0; i < 6; ++i)
        if (!same_bits(a.momentum(i), b.momentum(i)))
            return false;
    for (int i = 0; i < 2; ++i)
        if (!same_bits(a.zmp(i), b.zmp(i)))
            return false;
    for (int j = 0; j < a.torques.size(); ++j)
        if (!same_bits(a.torques(j), b.torques(j)))
            return false;
    return true;
}

} // namespace

TEST_CASE("vacuous task completes immediately")
{
    RolloutConfig cfg;
    cfg.schedule = ScheduleParams::stand(0.0);
    const RolloutResult r = rollout(ControllerGains{}, cfg, 1);
    CHECK(r.completed());
    CHECK(r.walked_time == 0.0);
    CHECK(r.duration == 0.0);
    CHECK(r.mpc_solves == 0);
}

TEST_CASE("gains violating the LIPM constraints are rejected without simulating")
{
    RolloutConfig cfg;
    ControllerGains g;
    g.zmp.k_com = 3.6;
    RolloutResult r = rollout(g, cfg, 1);
    CHECK(r.outcome == Outcome::Fell);
    CHECK(r.reason == FallReason::InfeasibleGains);
    CHECK(r.walked_time == 0.0);
    CHECK(r.mpc_solves == 0);

    g = ControllerGains{};
    g.zmp.k_zmp = 4.0;
    r = rollout(g, cfg, 1);
    CHECK(r.reason == FallReason::InfeasibleGains);
}

TEST_CASE("default gains walk the training and validation paths")
{
    for (const ScheduleParams& schedule : {ScheduleParams::train(), ScheduleParams::validation()})
    {
        CAPTURE(schedule.name);
        RolloutConfig cfg;
        cfg.schedule = schedule;
        const RolloutResult r = rollout(ControllerGains{}, cfg, 7);
        CHECK(r.completed());
        CHECK(r.walked_time == doctest::Approx(20.0));
        CHECK(r.mpc_solves == 200);
        CHECK(r.torque_norm() > 0.0);
        CHECK(r.mean_torque.allFinite());
    }
}

TEST_CASE("equilibrium standing conserves momentum")
{
    RolloutConfig cfg;
    cfg.plant = cfg.plant.without_mismatch();
    cfg.schedule = ScheduleParams::stand(20.0);
    cfg.record_log = true;
    const RolloutResult r = rollout(ControllerGains{}, cfg, 2);
    REQUIRE(r.completed());
    const double h0 = r.log.front().momentum.norm();
    double worst = 0.0;
    for (const LogRow& row : r.log)
        worst = std::max(worst, row.momentum.norm() - h0);
    CHECK(worst <= 1e-6);
    CHECK(r.log.size() == 2000);
}

TEST_CASE("rollouts are deterministic and truncation yields a prefix")
{
    RolloutConfig cfg;
    cfg.record_log = true;
    cfg.max_time = 3.0;
    const RolloutResult a = rollout(ControllerGains{}, cfg, 42);
    const RolloutResult b = rollout(ControllerGains{}, cfg, 42);
    CHECK(a.outcome == Outcome::Truncated);
    REQUIRE(a.log.size() == b.log.size());
    for (size_t i = 0; i < a.log.size(); ++i)
        REQUIRE(same_row(a.log[i], b.log[i]));
    CHECK(same_bits(a.walked_time, b.walked_time));
    for (int j = 0; j < a.mean_torque.size(); ++j)
        CHECK(same_bits(a.mean_torque(j), b.mean_torque(j)));

    cfg.max_time = 1.5;
    const RolloutResult shorter = rollout(ControllerGains{}, cfg, 42);
    REQUIRE(shorter.log.size() < a.log.size());
    for (size_t i = 0; i < shorter.log.size(); ++i)
        REQUIRE(same_row(shorter.log[i], a.log[i]));

    const RolloutResult other = rollout(ControllerGains{}, cfg, 43);
    bool differs = false;
    for (size_t i = 0; i < other.log.size() && !differs; ++i)
        differs = !same_row(other.log[i], shorter.log[i]);
    CHECK(differs);
}

TEST_CASE("a fallen rollout log is a prefix of a longer allowed run")
{
    // Weak momentum tracking with a slow ZMP loop loses balance.
    ControllerGains g;
    g.mpc = {150.0, 10.0, 10.0, 2.0, 80.0, 150.0, 10.0};
    g.zmp = {1.0, 3.8};
    g.qp = {2.5, 1.0, 1.0, 1.0, 1.0};
    RolloutConfig cfg;
    cfg.record_log = true;
    const RolloutResult full = rollout(g, cfg, 4);
    REQUIRE(full.outcome == Outcome::Fell);
    CHECK(full.walked_time < 20.0);
    CHECK(full.log.back().fallen);
    cfg.max_time = 0.5 * full.walked_time;
    const RolloutResult part = rollout(g, cfg, 4);
    REQUIRE(part.log.size() <= full.log.size());
    for (size_t i = 0; i < part.log.size(); ++i)
        REQUIRE(same_row(part.log[i], full.log[i]));
}

TEST_CASE("swing foot trajectory")
{
    const ContactSchedule s = make_schedule(0.1, 0.8, 4, 0.25, {});
    const Foothold& first = s.latest(kLeft, 0.0);
    const auto [at_start, v0] = foot_trajectory(s, kLeft, 0.1, 0.05);
    CHECK((at_start.position - first.pose.position).norm() == 0.0);
    CHECK(v0.norm() == 0.0);

    // Left foot swings between lift-off at 0.2 and touchdown at 0.8.
    const double h = 1e-6;
    for (double t : {0.3, 0.5, 0.7})
    {
        const auto [p, v] = foot_trajectory(s, kLeft, t, 0.05);
        const auto [pp, vp] = foot_trajectory(s, kLeft, t + h, 0.05);
        const auto [pm, vm] = foot_trajectory(s, kLeft, t - h, 0.05);
        const Eigen::Vector3d fd = (pp.position - pm.position) / (2.0 * h);
        CHECK((fd - v.head<3>()).norm() <= 1e-6);
    }
    const auto [mid, vmid] = foot_trajectory(s, kLeft, 0.5, 0.05);
    CHECK(mid.position.z() == doctest::Approx(0.05));
    CHECK(vmid(2) == doctest::Approx(0.0).epsilon(1e-9));
    const auto [land, vland] = foot_trajectory(s, kLeft, 0.8, 0.05);
    CHECK((land.position - s.target(kLeft, 0.8).pose.position).norm() <= 1e-12);
}

TEST_CASE("log CSV has one column per declared field")
{
    RolloutConfig cfg;
    cfg.record_log = true;
    cfg.max_time = 0.2;
    const RolloutResult r = rollout(ControllerGains{}, cfg, 1);
    std::ostringstream out;
    write_log_csv(out, r);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    const auto columns = std::count(header.begin(), header.end(), ',') + 1;
    CHECK(columns == 25 + 12 + 1);
    std::string line;
    int rows = 0;
    while (std::getline(in, line))
    {
        CHECK(std::count(line.begin(), line.end(), ',') + 1 == columns);
        ++rows;
    }
    CHECK(rows == 20);
}
