#pragma once

#include <Eigen/Dense>

namespace gaintune {

/// Returns the matrix u^ such that u^ * v = u x v.
Eigen::Matrix3d skew(const Eigen::Vector3d& u);

/// Inverse of skew(); reads the off-diagonal entries of a skew-symmetric matrix.
Eigen::Vector3d vee(const Eigen::Matrix3d& m);

/// Orthonormality test used by every entry point that accepts a rotation.
bool is_rotation(const Eigen::Matrix3d& rotation, double tolerance = 1e-9);

/// Rodrigues exponential of an axis-angle vector.
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& axis_angle);

/// Logarithm map returning an axis-angle vector with angle in [0, pi].
///
/// Near pi the axis is read from the column of the symmetric part of R with
/// the largest diagonal entry, so the result is a deterministic function of R. Throws
/// std::invalid_argument if R is not a proper rotation.
Eigen::Vector3d so3_log(const Eigen::Matrix3d& rotation);

Eigen::Matrix3d rot_x(double angle);
Eigen::Matrix3d rot_y(double angle);
Eigen::Matrix3d rot_z(double angle);

/// Yaw angle of the x axis of R projected on the ground plane.
double yaw_of(const Eigen::Matrix3d& rotation);

struct Pose
{
    Eigen::Vector3d position{Eigen::Vector3d::Zero()};
    Eigen::Matrix3d rotation{Eigen::Matrix3d::Identity()};
};

} // namespace gaintune
