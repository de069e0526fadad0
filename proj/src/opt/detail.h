#pragma once

#include <memory>

#include <gaintune/opt/optimizer.h>

namespace gaintune::opt::detail {

std::unique_ptr<Optimizer> make_ga(const OptimizerConfig& config, const Bounds& bounds);
std::unique_ptr<Optimizer> make_cmaes(const OptimizerConfig& config, const Bounds& bounds);
std::unique_ptr<Optimizer> make_de(const OptimizerConfig& config, const Bounds& bounds);
std::unique_ptr<Optimizer> make_es(const OptimizerConfig& config, const Bounds& bounds);

/// Mean of the points, or the fallback when there are none.
inline Vector mean_of(const std::vector<Vector>& xs, const Vector& fallback)
{
    if (xs.empty())
        return fallback;
    Vector m = Vector::Zero(xs.front().size());
    for (const Vector& x : xs)
        m += x;
    return m / static_cast<double>(xs.size());
}

} // namespace gaintune::opt::detail
