#include <doctest.h>

#include <random>

#include <gaintune/control/zmp_com.h>

using namespace gaintune::control;
using Eigen::Vector2d;
using Eigen::Vector3d;

TEST_CASE("LIPM gain validation")
{
    const LipmParams lipm;
    CHECK(lipm.omega() == doctest::Approx(3.7436).epsilon(1e-4));
    CHECK(validate_gains({0.8, 4.0}, lipm).ok());

    const GainCheck zero = validate_gains({0.0, 4.0}, lipm);
    CHECK_FALSE(zero.zmp_ok);
    CHECK(zero.com_ok);
    const GainCheck edge = validate_gains({0.8, lipm.omega()}, lipm);
    CHECK(edge.zmp_ok);
    CHECK_FALSE(edge.com_ok);
    CHECK_FALSE(validate_gains({lipm.omega(), 5.0}, lipm).zmp_ok);
    CHECK(validate_gains({0.0, 1.0}, lipm).describe() == "k_zmp outside (0, omega); k_com not above omega");
    CHECK(validate_gains({0.8, 4.0}, lipm).describe() == "ok");
}

TEST_CASE("CoM velocity reference arithmetic")
{
    const ZmpGains g{0.8, 4.0};
    const Vector2d v(0.1, -0.03);
    const Vector2d x(0.3, 0.2);
    const Vector2d r(0.25, 0.1);
    CHECK((com_velocity_reference(v, x, x, r, r, g) - v).cwiseAbs().maxCoeff() <= 1e-12);

    const Vector2d out = com_velocity_reference({0.1, 0.0}, {0.02, 0.0}, {0.0, 0.0}, {0.01, 0.0}, {0.0, 0.0}, g);
    CHECK(std::abs(out.x() - 0.172) <= 1e-12);
    CHECK(std::abs(out.y()) <= 1e-12);

    // A positive ZMP error alone lowers the reference.
    const Vector2d z = com_velocity_reference(v, x, x, r + Vector2d(0.01, 0.0), r, g);
    CHECK(z.x() < v.x());

    // Doubling both errors doubles the deviation.
    const Vector2d ex(0.013, -0.004);
    const Vector2d er(-0.02, 0.007);
    const Vector2d d1 = com_velocity_reference(v, x + ex, x, r + er, r, g) - v;
    const Vector2d d2 = com_velocity_reference(v, x + 2 * ex, x, r + 2 * er, r, g) - v;
    CHECK((d2 - 2 * d1).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("ZMP from contact wrenches")
{
    const Vector3d foot(0.12, -0.1, 0.0);
    const auto single = compute_zmp({{foot, {0, 0, 300}, Vector3d::Zero()}});
    REQUIRE(single);
    CHECK((*single - foot.head<2>()).norm() < 1e-14);

    const Vector3d left(0.0, 0.1, 0.0);
    const Vector3d right(0.2, -0.1, 0.0);
    const auto both = compute_zmp({{left, {0, 0, 200}, {}}, {right, {0, 0, 200}, {}}});
    REQUIRE(both);
    CHECK((*both - Vector2d(0.1, 0.0)).norm() < 1e-14);

    const auto moment = compute_zmp({{Vector3d::Zero(), {0, 0, 100}, {0, 5, 0}}});
    REQUIRE(moment);
    CHECK(moment->x() == doctest::Approx(-0.05));
    CHECK(moment->y() == doctest::Approx(0.0));

    CHECK_FALSE(compute_zmp({{foot, {0, 0, 5}, {}}}));
    CHECK_FALSE(compute_zmp({}));
}

TEST_CASE("ZMP of a convex combination lies in the hull of the individual ZMPs")
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 200; ++t)
    {
        const ContactWrench a{{u(rng) * 0.3, u(rng) * 0.3, 0.0}, {u(rng) * 30, u(rng) * 30, 300 + 100 * u(rng)}, {u(rng) * 5, u(rng) * 5, u(rng)}};
        const ContactWrench b{{u(rng) * 0.3, u(rng) * 0.3, 0.0}, {u(rng) * 30, u(rng) * 30, 300 + 100 * u(rng)}, {u(rng) * 5, u(rng) * 5, u(rng)}};
        const auto za = compute_zmp({a});
        const auto zb = compute_zmp({b});
        const auto zab = compute_zmp({a, b});
        REQUIRE((za && zb && zab));
        // The combined point lies on the segment between the two, weighted by vertical force.
        const double w = a.force.z() / (a.force.z() + b.force.z());
        CHECK((*zab - (w * *za + (1 - w) * *zb)).norm() < 1e-12);
    }
}
