#include <gaintune/util/random.h>

#include <cmath>

namespace gaintune {

std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b, std::uint64_t c)
{
    return mix64(mix64(mix64(mix64(master) ^ a) ^ b) ^ c);
}

std::array<std::uint32_t, 4> Philox::block(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key)
{
    constexpr std::uint64_t M0 = 0xD2511F53;
    constexpr std::uint64_t M1 = 0xCD9E8D57;
    constexpr std::uint32_t W0 = 0x9E3779B9;
    constexpr std::uint32_t W1 = 0xBB67AE85;
    for (int round = 0; round < 10; ++round)
    {
        const std::uint64_t p0 = M0 * ctr[0];
        const std::uint64_t p1 = M1 * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

Philox::Philox(std::uint64_t seed, std::uint64_t stream)
    : m_key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}
    , m_counter{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)}
{
}

void Philox::refill()
{
    m_buffer = block(m_counter, m_key);
    if (++m_counter[0] == 0)
    {
        ++m_counter[1];
    }
    m_used = 0;
}

std::uint32_t Philox::next_u32()
{
    if (m_used == 4)
    {
        refill();
    }
    return m_buffer[static_cast<size_t>(m_used++)];
}

std::uint64_t Philox::next_u64()
{
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
}

double Philox::uniform()
{
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Philox::uniform(double lo, double hi)
{
    return lo + (hi - lo) * uniform();
}

std::uint64_t Philox::below(std::uint64_t n)
{
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do
    {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

double Philox::normal()
{
    if (m_has_spare)
    {
        m_has_spare = false;
        return m_spare;
    }
    double u1;
    do
    {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    m_spare = r * std::sin(2.0 * M_PI * u2);
    m_has_spare = true;
    return r * std::cos(2.0 * M_PI * u2);
}

} // namespace gaintune
