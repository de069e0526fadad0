#include <gaintune/objective/objective.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace gaintune::objective {

const std::array<const char*, kNumParams> kParamNames{
    "w_force",          "w_force_rate_xy", "w_force_rate_z", "w_momentum_xy", "w_momentum_z",
    "w_momentum_angular", "w_contact",     "k_zmp",          "k_com",         "k_feet",
    "k_feet_rotation",  "k_com_qp",        "k_torso_height", "k_torso_rotation",
};

int param_index(const std::string& name)
{
    for (int i = 0; i < kNumParams; ++i)
    {
        if (name == kParamNames[static_cast<size_t>(i)])
            return i;
    }
    return -1;
}

ParamVector pack(const Eigen::VectorXd& mpc, const Eigen::VectorXd& zmp, const Eigen::VectorXd& qp)
{
    if (mpc.size() != kMpcParams || zmp.size() != kZmpParams || qp.size() != kQpParams)
    {
        throw std::invalid_argument("pack: component lengths must be 7, 2 and 5");
    }
    ParamVector xi;
    xi << mpc, zmp, qp;
    return xi;
}

Components unpack(const ParamVector& xi)
{
    return {xi.head<kMpcParams>(), xi.segment<kZmpParams>(kMpcParams), xi.tail<kQpParams>()};
}

sim::ControllerGains to_gains(const ParamVector& xi)
{
    sim::ControllerGains g;
    g.mpc = {xi(0), xi(1), xi(2), xi(3), xi(4), xi(5), xi(6)};
    g.zmp = {xi(7), xi(8)};
    g.qp = {xi(9), xi(10), xi(11), xi(12), xi(13)};
    return g;
}

ParamVector from_gains(const sim::ControllerGains& g)
{
    ParamVector xi;
    xi << g.mpc.force_symmetry, g.mpc.force_rate_xy, g.mpc.force_rate_z, g.mpc.momentum_linear_xy,
        g.mpc.momentum_linear_z, g.mpc.momentum_angular, g.mpc.contact_position, g.zmp.k_zmp, g.zmp.k_com,
        g.qp.k_feet, g.qp.k_feet_rotation, g.qp.k_com, g.qp.k_torso_height, g.qp.k_torso_rotation;
    return xi;
}

SearchSpace SearchSpace::table()
{
    SearchSpace s;
    s.lower << 10, 10, 10, 2, 80, 10, 10, 0.5, 3.5, 2.5, 1.0, 1.0, 1.0, 1.0;
    s.upper << 150, 150, 150, 50, 140, 150, 150, 1.0, 5.0, 5.0, 10.0, 5.0, 5.0, 10.0;
    return s;
}

bool SearchSpace::contains(const ParamVector& xi) const
{
    return (xi.array() >= lower.array()).all() && (xi.array() <= upper.array()).all();
}

void SearchSpace::validate() const
{
    if (!lower.allFinite() || !upper.allFinite() || !(lower.array() < upper.array()).all())
    {
        for (int i = 0; i < kNumParams; ++i)
        {
            if (!(lower(i) < upper(i)) || !std::isfinite(lower(i)) || !std::isfinite(upper(i)))
            {
                throw std::invalid_argument(std::string("search space: lower < upper required for ")
                                            + kParamNames[static_cast<size_t>(i)]);
            }
        }
    }
}

ParamVector sample_uniform(const SearchSpace& space, Philox& rng)
{
    ParamVector xi;
    for (int i = 0; i < kNumParams; ++i)
        xi(i) = rng.uniform(space.lower(i), space.upper(i));
    return xi;
}

const char* to_string(ObjectiveKind kind)
{
    return kind == ObjectiveKind::G1 ? "g1" : "g2";
}

ObjectiveKind parse_objective(const std::string& text)
{
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [] (unsigned char c) { return std::tolower(c); });
    if (t == "g1")
        return ObjectiveKind::G1;
    if (t == "g2")
        return ObjectiveKind::G2;
    throw std::invalid_argument("unknown objective '" + text + "' (expected g1 or g2)");
}

ObjectiveSpec ObjectiveSpec::g1()
{
    ObjectiveSpec s;
    s.kind = ObjectiveKind::G1;
    s.time_weight = 1.0;
    s.torque_weight = 0.0;
    return s;
}

ObjectiveSpec ObjectiveSpec::g2()
{
    return {};
}

ObjectiveSpec ObjectiveSpec::of(ObjectiveKind kind)
{
    return kind == ObjectiveKind::G1 ? g1() : g2();
}

void ObjectiveSpec::validate() const
{
    if (!(duration >= 0.0) || !(time_weight >= 0.0) || !(torque_weight >= 0.0) || !(floor > 0.0)
        || !(infeasible_torque >= 0.0))
    {
        throw std::invalid_argument("objective: t*, weights and infeasible torque must be >= 0 and floor > 0");
    }
    if (kind == ObjectiveKind::G1 && (time_weight != 1.0 || torque_weight != 0.0))
    {
        throw std::invalid_argument("objective: g1 requires W1 = 1 and W2 = 0");
    }
}

double evaluate(const ObjectiveSpec& spec, double walked_time, double torque_norm)
{
    const double t = std::clamp(std::isfinite(walked_time) ? walked_time : 0.0, 0.0, spec.duration);
    const double tau = std::isfinite(torque_norm) ? torque_norm : spec.infeasible_torque;
    const double d = spec.time_weight * (spec.duration - t) + spec.torque_weight * tau;
    return 1.0 / std::max(d, spec.floor);
}

double evaluate(const ObjectiveSpec& spec, const sim::RolloutResult& result)
{
    if (result.reason == sim::FallReason::InfeasibleGains)
    {
        return evaluate(spec, 0.0, spec.infeasible_torque);
    }
    const double t = result.completed() ? spec.duration : result.walked_time;
    return evaluate(spec, t, result.torque_norm());
}

} // namespace gaintune::objective
