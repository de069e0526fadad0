#pragma once

#include <array>
#include <cstdint>

namespace gaintune {

/// Mixes a 64-bit value (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

/// Seed for a sub-stream identified by up to three indices.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

/// Philox4x32-10 counter-based generator. The output depends only on
/// (seed, stream, draw index), never on the platform's standard library.
class Philox
{
public:
    explicit Philox(std::uint64_t seed = 0, std::uint64_t stream = 0);

    std::uint32_t next_u32();
    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi);
    /// Integer uniform on [0, n) by rejection; n > 0.
    std::uint64_t below(std::uint64_t n);
    /// Standard normal by the Box-Muller transform (pairs are cached).
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Raw block function, exposed for known-answer tests.
    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

private:
    void refill();

    std::array<std::uint32_t, 2> m_key;
    std::array<std::uint32_t, 4> m_counter;
    std::array<std::uint32_t, 4> m_buffer{};
    int m_used{4};
    bool m_has_spare{false};
    double m_spare{0.0};
};

} // namespace gaintune
