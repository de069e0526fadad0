#include "detail.h"

namespace gaintune::opt::detail {

namespace {

/// Generational GA: elites survive with their fitness, the rest of the
/// population is bred by tournament selection, two-point crossover and
/// uniform gene mutation. Only the offspring are evaluated.
class Ga final : public Optimizer
{
public:
    using Optimizer::Optimizer;

    std::string variant() const override { return "ga-tournament-twopoint-uniform-elitist"; }

    std::vector<double> population_fitness() const override { return m_fitness; }
    Vector center() const override { return mean_of(m_population, m_bounds.centroid()); }

protected:
    std::vector<Vector> propose() override
    {
        const auto n = static_cast<size_t>(m_config.population);
        std::vector<Vector> batch;
        if (m_population.empty())
        {
            for (size_t i = 0; i < n; ++i)
                batch.push_back(sample_uniform(m_bounds, m_rng));
            return batch;
        }
        const GaConfig& ga = m_config.ga;
        const size_t children = n - static_cast<size_t>(ga.elitism);
        while (batch.size() < children)
        {
            const Vector& a = m_population[static_cast<size_t>(tournament_select(m_fitness, ga.tournament, m_rng))];
            const Vector& b = m_population[static_cast<size_t>(tournament_select(m_fitness, ga.tournament, m_rng))];
            std::pair<Vector, Vector> pair{a, b};
            if (m_rng.uniform() < ga.crossover_probability)
                pair = crossover_two_point(a, b, m_rng);
            batch.push_back(mutate_uniform(pair.first, m_bounds, ga.mutation_probability, m_rng));
            if (batch.size() < children)
                batch.push_back(mutate_uniform(pair.second, m_bounds, ga.mutation_probability, m_rng));
        }
        return batch;
    }

    void update(const std::vector<Vector>& batch, const std::vector<double>& fitness) override
    {
        if (m_population.empty())
        {
            m_population = batch;
            m_fitness = fitness;
            return;
        }
        const std::vector<int> order = rank_descending(m_fitness);
        std::vector<Vector> next;
        std::vector<double> next_fitness;
        for (int e = 0; e < m_config.ga.elitism; ++e)
        {
            next.push_back(m_population[static_cast<size_t>(order[static_cast<size_t>(e)])]);
            next_fitness.push_back(m_fitness[static_cast<size_t>(order[static_cast<size_t>(e)])]);
        }
        next.insert(next.end(), batch.begin(), batch.end());
        next_fitness.insert(next_fitness.end(), fitness.begin(), fitness.end());
        m_population = std::move(next);
        m_fitness = std::move(next_fitness);
    }

private:
    std::vector<Vector> m_population;
    std::vector<double> m_fitness;
};

} // namespace

std::unique_ptr<Optimizer> make_ga(const OptimizerConfig& config, const Bounds& bounds)
{
    return std::make_unique<Ga>(config, bounds);
}

} // namespace gaintune::opt::detail
