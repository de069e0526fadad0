#include "detail.h"

namespace gaintune::opt::detail {

namespace {

/// DE/rand/1/bin with greedy one-to-one replacement.
class De final : public Optimizer
{
public:
    using Optimizer::Optimizer;

    std::string variant() const override { return "de-rand-1-bin"; }

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
        const DeConfig& de = m_config.de;
        for (size_t i = 0; i < n; ++i)
        {
            batch.push_back(draw_in_box(
                [&] () {
                    size_t r[3];
                    for (int k = 0; k < 3; ++k)
                    {
                        bool clash = true;
                        while (clash)
                        {
                            r[k] = static_cast<size_t>(m_rng.below(n));
                            clash = r[k] == i;
                            for (int j = 0; j < k; ++j)
                                clash = clash || r[k] == r[j];
                        }
                    }
                    const Vector donor
                        = de_donor(m_population[r[0]], m_population[r[1]], m_population[r[2]], de.differential_weight);
                    const int forced = static_cast<int>(m_rng.below(static_cast<std::uint64_t>(m_bounds.dim())));
                    return de_crossover(m_population[i], donor, de.crossover_rate, forced, m_rng);
                },
                de.resample_limit));
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
        for (size_t i = 0; i < batch.size(); ++i)
        {
            if (fitness[i] >= m_fitness[i])
            {
                m_population[i] = batch[i];
                m_fitness[i] = fitness[i];
            }
        }
    }

private:
    std::vector<Vector> m_population;
    std::vector<double> m_fitness;
};

} // namespace

std::unique_ptr<Optimizer> make_de(const OptimizerConfig& config, const Bounds& bounds)
{
    return std::make_unique<De>(config, bounds);
}

} // namespace gaintune::opt::detail
