#pragma once

#include <cstdlib>
#include <random>
#include <string>

#include <Eigen/Dense>

#include <gaintune/math/so3.h>

namespace test {

inline std::string source_dir()
{
    const char* dir = std::getenv("GAINTUNE_SOURCE_DIR");
    return dir != nullptr ? dir : ".";
}

inline Eigen::Vector3d random_vector(std::mt19937_64& rng, double scale = 1.0)
{
    std::uniform_real_distribution<double> u(-scale, scale);
    return {u(rng), u(rng), u(rng)};
}

/// Uniformly distributed rotation from a normalized Gaussian quaternion.
inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return q.toRotationMatrix();
}

} // namespace test
