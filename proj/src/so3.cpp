#include <gaintune/math/so3.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gaintune {

Eigen::Matrix3d skew(const Eigen::Vector3d& u)
{
    Eigen::Matrix3d m;
    m << 0.0, -u.z(), u.y(), //
        u.z(), 0.0, -u.x(),  //
        -u.y(), u.x(), 0.0;
    return m;
}

Eigen::Vector3d vee(const Eigen::Matrix3d& m)
{
    return {m(2, 1), m(0, 2), m(1, 0)};
}

bool is_rotation(const Eigen::Matrix3d& rotation, double tolerance)
{
    if (!rotation.allFinite())
    {
        return false;
    }
    const double orthonormality = (rotation * rotation.transpose() - Eigen::Matrix3d::Identity())
                                      .cwiseAbs()
                                      .maxCoeff();
    return orthonormality <= tolerance && std::abs(rotation.determinant() - 1.0) <= tolerance;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& axis_angle)
{
    const double angle = axis_angle.norm();
    const Eigen::Matrix3d k = skew(axis_angle);
    if (angle < 1e-8)
    {
        // second-order Taylor expansion
        return Eigen::Matrix3d::Identity() + k + 0.5 * k * k;
    }
    const double a = std::sin(angle) / angle;
    const double b = (1.0 - std::cos(angle)) / (angle * angle);
    return Eigen::Matrix3d::Identity() + a * k + b * k * k;
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& rotation)
{
    // Slightly looser than the Rotation invariant so that rotations built by
    // chained products in double precision are still accepted.
    if (!is_rotation(rotation, 1e-6))
    {
        throw std::invalid_argument("so3_log: input is not a proper rotation matrix");
    }

    const double cos_angle = std::clamp((rotation.trace() - 1.0) / 2.0, -1.0, 1.0);
    const Eigen::Vector3d w = vee(rotation - rotation.transpose()) / 2.0; // sin(angle) * axis
    const double sin_angle = w.norm();
    const double angle = std::atan2(sin_angle, cos_angle);

    if (angle < 1e-6)
    {
        // angle / sin(angle) ~ 1 + angle^2 / 6
        return w * (1.0 + angle * angle / 6.0);
    }

    if (angle < M_PI - 1e-3)
    {
        return w * (angle / sin_angle);
    }

    // Near pi: sym(R) - cos(angle) I = (1 - cos(angle)) n n^T. The column with
    // the largest diagonal entry gives the best-conditioned axis estimate.
    const Eigen::Matrix3d nn = (0.5 * (rotation + rotation.transpose())
                                - cos_angle * Eigen::Matrix3d::Identity())
                               / (1.0 - cos_angle);
    Eigen::Index k = 0;
    nn.diagonal().maxCoeff(&k);
    Eigen::Vector3d axis = nn.col(k) / std::sqrt(std::max(nn(k, k), 1e-300));
    axis.normalize();
    if (axis.dot(w) < 0.0)
    {
        axis = -axis;
    }
    return axis * angle;
}

Eigen::Matrix3d rot_x(double angle)
{
    return Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitX()).toRotationMatrix();
}

Eigen::Matrix3d rot_y(double angle)
{
    return Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitY()).toRotationMatrix();
}

Eigen::Matrix3d rot_z(double angle)
{
    return Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

double yaw_of(const Eigen::Matrix3d& rotation)
{
    return std::atan2(rotation(1, 0), rotation(0, 0));
}

} // namespace gaintune
