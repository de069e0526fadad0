#include <gaintune/control/zmp_com.h>

#include <cmath>

namespace gaintune::control {

double LipmParams::omega() const
{
    return std::sqrt(gravity / com_height);
}

std::string GainCheck::describe() const
{
    if (ok())
        return "ok";
    std::string out;
    if (!zmp_ok)
        out += "k_zmp outside (0, omega)";
    if (!com_ok)
        out += std::string(out.empty() ? "" : "; ") + "k_com not above omega";
    return out;
}

GainCheck validate_gains(const ZmpGains& gains, const LipmParams& lipm)
{
    const double w = lipm.omega();
    GainCheck c;
    c.zmp_ok = gains.k_zmp > 0.0 && gains.k_zmp < w;
    c.com_ok = gains.k_com > w;
    return c;
}

Eigen::Vector2d com_velocity_reference(const Eigen::Vector2d& com_velocity_ref, const Eigen::Vector2d& com_ref,
                                       const Eigen::Vector2d& com, const Eigen::Vector2d& zmp_ref,
                                       const Eigen::Vector2d& zmp, const ZmpGains& gains)
{
    return com_velocity_ref - gains.k_zmp * (zmp_ref - zmp) + gains.k_com * (com_ref - com);
}

std::optional<Eigen::Vector2d> compute_zmp(const std::vector<ContactWrench>& wrenches, double ground_height,
                                           double force_threshold)
{
    const Eigen::Vector3d origin(0.0, 0.0, ground_height);
    Eigen::Vector3d force = Eigen::Vector3d::Zero();
    Eigen::Vector3d moment = Eigen::Vector3d::Zero();
    for (const ContactWrench& w : wrenches)
    {
        force += w.force;
        moment += w.moment + (w.point - origin).cross(w.force);
    }
    if (!(force.z() > force_threshold))
    {
        return std::nullopt;
    }
    return Eigen::Vector2d(-moment.y() / force.z(), moment.x() / force.z());
}

} // namespace gaintune::control
