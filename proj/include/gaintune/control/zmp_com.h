#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gaintune::control {

struct LipmParams
{
    double com_height{0.7};
    double gravity{9.81};

    double omega() const;
};

/// Scalar gains shared by the x and y channels.
struct ZmpGains
{
    double k_zmp{0.8};
    double k_com{4.0};
};

struct GainCheck
{
    bool zmp_ok{true}; ///< 0 < k_zmp < omega
    bool com_ok{true}; ///< k_com > omega

    bool ok() const { return zmp_ok && com_ok; }
    std::string describe() const;
};

GainCheck validate_gains(const ZmpGains& gains, const LipmParams& lipm);

/// xd* = xd_ref - k_zmp (r_ref - r) + k_com (x_ref - x), planar.
Eigen::Vector2d com_velocity_reference(const Eigen::Vector2d& com_velocity_ref, const Eigen::Vector2d& com_ref,
                                       const Eigen::Vector2d& com, const Eigen::Vector2d& zmp_ref,
                                       const Eigen::Vector2d& zmp, const ZmpGains& gains);

/// Force and moment applied at a point; the moment is taken about that point.
struct ContactWrench
{
    Eigen::Vector3d point{Eigen::Vector3d::Zero()};
    Eigen::Vector3d force{Eigen::Vector3d::Zero()};
    Eigen::Vector3d moment{Eigen::Vector3d::Zero()};
};

constexpr double kZmpForceThreshold = 10.0;

/// Point on the ground plane z = ground_height where the horizontal moment of
/// the total wrench vanishes. Empty when the total vertical force is below the threshold.
std::optional<Eigen::Vector2d> compute_zmp(const std::vector<ContactWrench>& wrenches, double ground_height = 0.0,
                                           double force_threshold = kZmpForceThreshold);

} // namespace gaintune::control
