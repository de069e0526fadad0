#include <doctest.h>

#include <cmath>
#include <random>

#include <gaintune/math/so3.h>

#include "oracles.h"

using namespace gaintune;

using test::rodrigues;

TEST_CASE("so3_log of identity and of an axis rotation")
{
    CHECK(so3_log(Eigen::Matrix3d::Identity()).norm() == 0.0);
    const Eigen::Vector3d w = so3_log(rot_z(0.3));
    CHECK(w.x() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(w.y() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(w.z() == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("so3_log / Rodrigues round trip over random rotations")
{
    CHECK(test::so3_roundtrip_error(10000, 7) <= 1e-9);
}

TEST_CASE("so3_log near pi uses the largest-diagonal axis")
{
    for (const Eigen::Vector3d axis : {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0),
                                       Eigen::Vector3d(1, 2, -2).normalized()})
    {
        for (const double angle : {M_PI, M_PI - 1e-10, M_PI - 1e-7, M_PI - 1e-5})
        {
            const Eigen::Matrix3d R = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
            const Eigen::Vector3d w = so3_log(R);
            CHECK(w.norm() <= M_PI + 1e-12);
            CHECK((rodrigues(w) - R).cwiseAbs().maxCoeff() <= 1e-9);
            CHECK(std::abs(std::abs(w.normalized().dot(axis)) - 1.0) < 1e-6);
        }
    }
    // exactly pi is resolved deterministically
    const Eigen::Matrix3d R = Eigen::AngleAxisd(M_PI, Eigen::Vector3d(0, 0, 1)).toRotationMatrix();
    CHECK(so3_log(R).isApprox(so3_log(R)));
}

TEST_CASE("so3_log rejects non-orthonormal input")
{
    Eigen::Matrix3d bad = Eigen::Matrix3d::Identity();
    bad(0, 1) = 0.1;
    CHECK_THROWS_AS(so3_log(bad), std::invalid_argument);
    CHECK_THROWS_AS(so3_log(-Eigen::Matrix3d::Identity()), std::invalid_argument); // det = -1
}

TEST_CASE("skew and vee are inverse")
{
    const Eigen::Vector3d u(0.3, -1.2, 2.0);
    const Eigen::Vector3d v(-0.5, 0.25, 1.0);
    CHECK((vee(skew(u)) - u).norm() == 0.0);
    CHECK((skew(u) * v - u.cross(v)).norm() < 1e-15);
}
