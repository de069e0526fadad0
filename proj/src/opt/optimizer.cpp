#include <gaintune/opt/optimizer.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "detail.h"

namespace gaintune::opt {

bool Bounds::contains(const Vector& x) const
{
    return x.size() == lower.size() && (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

Vector Bounds::clip(const Vector& x) const
{
    Vector y = x.cwiseMax(lower).cwiseMin(upper);
    // NaN coordinates fall back to the centre
    for (int i = 0; i < y.size(); ++i)
    {
        if (std::isnan(y(i)))
            y(i) = 0.5 * (lower(i) + upper(i));
    }
    return y;
}

void Bounds::validate() const
{
    if (lower.size() == 0 || lower.size() != upper.size())
        throw std::invalid_argument("bounds: lower and upper must be non-empty and of equal size");
    if (!lower.allFinite() || !upper.allFinite() || !(lower.array() < upper.array()).all())
        throw std::invalid_argument("bounds: lower < upper required in every coordinate");
}

Vector sample_uniform(const Bounds& bounds, Philox& rng)
{
    Vector x(bounds.dim());
    for (int i = 0; i < x.size(); ++i)
        x(i) = rng.uniform(bounds.lower(i), bounds.upper(i));
    return x;
}

const char* to_string(Algorithm algorithm)
{
    switch (algorithm)
    {
    case Algorithm::GA:
        return "ga";
    case Algorithm::CMAES:
        return "cmaes";
    case Algorithm::DE:
        return "de";
    case Algorithm::ES:
        return "es";
    }
    return "?";
}

Algorithm parse_algorithm(const std::string& text)
{
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [] (unsigned char c) { return std::tolower(c); });
    for (Algorithm a : {Algorithm::GA, Algorithm::CMAES, Algorithm::DE, Algorithm::ES})
    {
        if (t == to_string(a))
            return a;
    }
    throw std::invalid_argument("unknown algorithm '" + text + "' (expected ga, cmaes, de or es)");
}

void OptimizerConfig::validate() const
{
    if (population < 1)
        throw std::invalid_argument("optimizer: population must be >= 1");
    if (budget < 1)
        throw std::invalid_argument("optimizer: budget must be > 0");
    switch (algorithm)
    {
    case Algorithm::GA:
        if (ga.tournament < 1 || ga.tournament > population)
            throw std::invalid_argument("optimizer: ga tournament size must lie in [1, population]");
        if (ga.elitism < 0 || ga.elitism >= population)
            throw std::invalid_argument("optimizer: ga elitism must lie in [0, population)");
        if (!(ga.mutation_probability >= 0.0 && ga.mutation_probability <= 1.0)
            || !(ga.crossover_probability >= 0.0 && ga.crossover_probability <= 1.0))
            throw std::invalid_argument("optimizer: ga probabilities must lie in [0, 1]");
        break;
    case Algorithm::CMAES:
        if (population < 2 || !(cmaes.initial_variance > 0.0) || cmaes.resample_limit < 1)
            throw std::invalid_argument("optimizer: cmaes needs population >= 2, variance > 0, resample limit >= 1");
        break;
    case Algorithm::DE:
        if (population < 4)
            throw std::invalid_argument("optimizer: de needs population >= 4");
        if (!(de.crossover_rate >= 0.0 && de.crossover_rate <= 1.0) || !(de.differential_weight > 0.0)
            || de.resample_limit < 1)
            throw std::invalid_argument("optimizer: de needs CR in [0, 1], F > 0, resample limit >= 1");
        break;
    case Algorithm::ES:
        if (es.offspring < 1 || es.parents < 1 || es.parents > population || es.parents > es.offspring + 1)
            throw std::invalid_argument("optimizer: es needs 1 <= parents <= min(population, offspring + 1)");
        if (!(es.recombination > 0.0 && es.recombination <= 1.0) || !(es.initial_step > 0.0)
            || es.resample_limit < 1)
            throw std::invalid_argument("optimizer: es needs recombination in (0, 1], step > 0, resample limit >= 1");
        break;
    }
}

Optimizer::Optimizer(const OptimizerConfig& config, Bounds bounds)
    : m_config(config)
    , m_bounds(std::move(bounds))
    , m_rng(config.seed, static_cast<std::uint64_t>(config.algorithm) + 1)
    , m_best_fitness(-std::numeric_limits<double>::infinity())
{
    m_config.validate();
    m_bounds.validate();
    m_best = m_bounds.centroid();
}

const std::vector<Vector>& Optimizer::ask()
{
    if (m_pending)
        return m_batch;
    m_batch.clear();
    if (finished())
        return m_batch;
    m_batch = propose();
    m_proposed = m_batch.size();
    const long remaining = m_config.budget - m_evaluations;
    if (static_cast<long>(m_batch.size()) > remaining)
        m_batch.resize(static_cast<size_t>(remaining));
    m_pending = true;
    return m_batch;
}

void Optimizer::tell(const std::vector<double>& fitness)
{
    if (!m_pending)
        throw std::logic_error("tell without a matching ask");
    if (fitness.size() != m_batch.size())
        throw std::invalid_argument("tell: expected " + std::to_string(m_batch.size()) + " fitness values, got "
                                    + std::to_string(fitness.size()));
    std::vector<double> f = fitness;
    for (double& v : f)
    {
        if (std::isnan(v))
            v = -std::numeric_limits<double>::infinity();
    }
    for (size_t i = 0; i < f.size(); ++i)
    {
        if (f[i] > m_best_fitness)
        {
            m_best_fitness = f[i];
            m_best = m_batch[i];
        }
    }
    m_evaluations += static_cast<long>(f.size());
    m_pending = false;
    ++m_generation;
    // A budget-truncated batch ends the run; the search state is left as is.
    std::vector<Vector> batch = std::move(m_batch);
    m_batch.clear();
    if (!batch.empty() && batch.size() == m_proposed)
        update(batch, f);
}

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config, const Bounds& bounds)
{
    switch (config.algorithm)
    {
    case Algorithm::GA:
        return detail::make_ga(config, bounds);
    case Algorithm::CMAES:
        return detail::make_cmaes(config, bounds);
    case Algorithm::DE:
        return detail::make_de(config, bounds);
    case Algorithm::ES:
        return detail::make_es(config, bounds);
    }
    throw std::invalid_argument("make_optimizer: unknown algorithm");
}

int tournament_winner(const std::vector<double>& fitness, const std::vector<int>& candidates)
{
    if (candidates.empty())
        throw std::invalid_argument("tournament: no candidates");
    int best = candidates.front();
    for (int c : candidates)
    {
        if (fitness[static_cast<size_t>(c)] > fitness[static_cast<size_t>(best)]
            || (fitness[static_cast<size_t>(c)] == fitness[static_cast<size_t>(best)] && c < best))
            best = c;
    }
    return best;
}

int tournament_select(const std::vector<double>& fitness, int k, Philox& rng)
{
    if (fitness.empty())
        throw std::invalid_argument("tournament: empty population");
    std::vector<int> candidates(static_cast<size_t>(k));
    for (int& c : candidates)
        c = static_cast<int>(rng.below(fitness.size()));
    return tournament_winner(fitness, candidates);
}

std::pair<Vector, Vector> crossover_two_point(const Vector& a, const Vector& b, int c1, int c2)
{
    if (a.size() != b.size())
        throw std::invalid_argument("crossover: parents differ in length");
    Vector x = a;
    Vector y = b;
    for (int i = c1; i < c2; ++i)
        std::swap(x(i), y(i));
    return {x, y};
}

std::pair<Vector, Vector> crossover_two_point(const Vector& a, const Vector& b, Philox& rng)
{
    const auto n = static_cast<std::uint64_t>(a.size());
    if (n < 2)
        return {a, b};
    // pairs 1 <= c1 < c2 <= n
    const std::uint64_t c1 = 1 + rng.below(n);
    std::uint64_t c2 = 1 + rng.below(n - 1);
    if (c2 >= c1)
        ++c2;
    return crossover_two_point(a, b, static_cast<int>(std::min(c1, c2)), static_cast<int>(std::max(c1, c2)));
}

Vector mutate_uniform(const Vector& x, const Bounds& bounds, double probability, Philox& rng)
{
    Vector y = x;
    for (int i = 0; i < y.size(); ++i)
    {
        if (rng.uniform() < probability)
            y(i) = rng.uniform(bounds.lower(i), bounds.upper(i));
    }
    return y;
}

std::vector<int> rank_descending(const std::vector<double>& fitness)
{
    std::vector<int> order(fitness.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&] (int a, int b) {
        return fitness[static_cast<size_t>(a)] > fitness[static_cast<size_t>(b)];
    });
    return order;
}

Vector de_donor(const Vector& a, const Vector& b, const Vector& c, double f)
{
    return a + f * (b - c);
}

Vector de_crossover(const Vector& target, const Vector& donor, double cr, int forced, Philox& rng)
{
    Vector trial = target;
    for (int j = 0; j < trial.size(); ++j)
    {
        if (j == forced || rng.uniform() < cr)
            trial(j) = donor(j);
    }
    return trial;
}

std::pair<Vector, Vector> es_offspring(const Vector& mean, const Vector& steps, Philox& rng)
{
    const double n = static_cast<double>(mean.size());
    const double global_rate = 1.0 / std::sqrt(2.0 * n);
    const double local_rate = 1.0 / std::sqrt(2.0 * std::sqrt(n));
    const double common = global_rate * rng.normal();
    Vector s(steps.size());
    Vector x(mean.size());
    for (int i = 0; i < s.size(); ++i)
    {
        s(i) = steps(i) * std::exp(common + local_rate * rng.normal());
        x(i) = mean(i) + s(i) * rng.normal();
    }
    return {x, s};
}

} // namespace gaintune::opt
