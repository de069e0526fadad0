#include <doctest.h>

#include <cmath>
#include <vector>

#include <gaintune/util/random.h>

using namespace gaintune;

TEST_CASE("Philox4x32-10 known-answer vectors")
{
    // Reference vectors published with the Random123 library.
    CHECK(Philox::block({0, 0, 0, 0}, {0, 0}) == std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff})
          == std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0})
          == std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct")
{
    Philox a(42, 7);
    Philox b(42, 7);
    Philox c(42, 8);
    int same = 0;
    for (int i = 0; i < 100; ++i)
    {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        same += x == c.next_u64();
    }
    CHECK(same == 0);
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
}

TEST_CASE("uniform and normal moments")
{
    Philox rng(3);
    const int n = 200000;
    double s = 0, s2 = 0, ns = 0, ns2 = 0;
    double lo = 1, hi = 0;
    for (int i = 0; i < n; ++i)
    {
        const double u = rng.uniform();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        s += u;
        s2 += u * u;
        const double z = rng.normal();
        ns += z;
        ns2 += z * z;
    }
    CHECK(lo >= 0.0);
    CHECK(hi < 1.0);
    CHECK(s / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(s2 / n - (s / n) * (s / n) == doctest::Approx(1.0 / 12).epsilon(0.02));
    CHECK(std::abs(ns / n) < 0.01);
    CHECK(ns2 / n == doctest::Approx(1.0).epsilon(0.02));

    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i)
        ++counts[rng.below(7)];
    for (int c : counts)
        CHECK(std::abs(c - 10000) < 500);
}
