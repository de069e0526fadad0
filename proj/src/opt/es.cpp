#include <algorithm>
#include <cmath>

#include "detail.h"

namespace gaintune::opt::detail {

namespace {

/// Self-adaptive ES: each offspring mutates the intermediate recombinant of
/// a share of the parents with log-normally adapted per-coordinate steps.
/// The next parents are the best offspring plus the best previous parent.
class Es final : public Optimizer
{
public:
    using Optimizer::Optimizer;

    std::string variant() const override { return "es-global-intermediate-self-adaptive-elitist1"; }

    std::vector<double> population_fitness() const override { return m_fitness; }
    Vector center() const override { return mean_of(m_parents, m_bounds.centroid()); }

protected:
    std::vector<Vector> propose() override
    {
        std::vector<Vector> batch;
        m_offspring_steps.clear();
        const EsConfig& es = m_config.es;
        if (m_parents.empty())
        {
            const Vector step = es.initial_step * (m_bounds.upper - m_bounds.lower);
            for (int i = 0; i < m_config.population; ++i)
            {
                batch.push_back(sample_uniform(m_bounds, m_rng));
                m_offspring_steps.push_back(step);
            }
            return batch;
        }

        const auto mu = m_parents.size();
        const auto share = std::max<size_t>(1, static_cast<size_t>(std::lround(es.recombination * static_cast<double>(mu))));
        for (int k = 0; k < es.offspring; ++k)
        {
            // Recombinant from a random subset of the parents (all of them at rate 1).
            std::vector<size_t> pick(mu);
            for (size_t i = 0; i < mu; ++i)
                pick[i] = i;
            if (share < mu)
            {
                for (size_t i = 0; i < share; ++i)
                    std::swap(pick[i], pick[i + static_cast<size_t>(m_rng.below(mu - i))]);
            }
            Vector mean = Vector::Zero(m_bounds.dim());
            Vector steps = Vector::Zero(m_bounds.dim());
            for (size_t i = 0; i < share; ++i)
            {
                mean += m_parents[pick[i]];
                steps += m_steps[pick[i]];
            }
            mean /= static_cast<double>(share);
            steps /= static_cast<double>(share);

            Vector child_steps;
            batch.push_back(draw_in_box(
                [&] () {
                    auto [x, s] = es_offspring(mean, steps, m_rng);
                    child_steps = s;
                    return x;
                },
                es.resample_limit));
            m_offspring_steps.push_back(child_steps);
        }
        return batch;
    }

    void update(const std::vector<Vector>& batch, const std::vector<double>& fitness) override
    {
        const auto mu = static_cast<size_t>(m_config.es.parents);
        const std::vector<int> order = rank_descending(fitness);
        std::vector<Vector> parents;
        std::vector<Vector> steps;
        std::vector<double> parent_fitness;
        size_t take = mu;
        if (!m_parents.empty())
        {
            parents.push_back(m_parents.front());
            steps.push_back(m_steps.front());
            parent_fitness.push_back(m_fitness.front());
            take = mu - 1;
        }
        for (size_t i = 0; i < take && i < order.size(); ++i)
        {
            const auto j = static_cast<size_t>(order[i]);
            parents.push_back(batch[j]);
            steps.push_back(m_offspring_steps[j]);
            parent_fitness.push_back(fitness[j]);
        }
        // keep the best parent first
        const std::vector<int> rank = rank_descending(parent_fitness);
        m_parents.clear();
        m_steps.clear();
        m_fitness.clear();
        for (int r : rank)
        {
            m_parents.push_back(parents[static_cast<size_t>(r)]);
            m_steps.push_back(steps[static_cast<size_t>(r)]);
            m_fitness.push_back(parent_fitness[static_cast<size_t>(r)]);
        }
    }

private:
    std::vector<Vector> m_parents;
    std::vector<Vector> m_steps;
    std::vector<double> m_fitness;
    std::vector<Vector> m_offspring_steps;
};

} // namespace

std::unique_ptr<Optimizer> make_es(const OptimizerConfig& config, const Bounds& bounds)
{
    return std::make_unique<Es>(config, bounds);
}

} // namespace gaintune::opt::detail
