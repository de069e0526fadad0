#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <gaintune/util/random.h>

namespace gaintune::opt {

using Vector = Eigen::VectorXd;

/// Inclusive box of admissible points.
struct Bounds
{
    Vector lower;
    Vector upper;

    int dim() const { return static_cast<int>(lower.size()); }
    Vector centroid() const { return 0.5 * (lower + upper); }
    bool contains(const Vector& x) const;
    Vector clip(const Vector& x) const;
    /// Throws std::invalid_argument unless sizes agree and lower < upper.
    void validate() const;
};

Vector sample_uniform(const Bounds& bounds, Philox& rng);

enum class Algorithm
{
    GA,
    CMAES,
    DE,
    ES,
};

const char* to_string(Algorithm algorithm);
/// Accepts ga, cmaes, de, es in either case; throws std::invalid_argument otherwise.
Algorithm parse_algorithm(const std::string& text);

struct GaConfig
{
    int tournament{4};
    double crossover_probability{1.0};
    double mutation_probability{0.10}; ///< per gene
    int elitism{10};
};

struct CmaesConfig
{
    double initial_variance{10.0}; ///< sigma^2 of the initial isotropic search distribution
    int resample_limit{10};
    double max_condition{1e14}; ///< covariance restart threshold
};

struct DeConfig
{
    double crossover_rate{0.5};
    double differential_weight{0.8};
    int resample_limit{10};
};

struct EsConfig
{
    int offspring{99};
    int parents{25};
    double recombination{1.0}; ///< share of the parents averaged into each recombinant
    double initial_step{0.1};  ///< initial step size as a fraction of each bound width
    int resample_limit{10};
};

struct OptimizerConfig
{
    Algorithm algorithm{Algorithm::GA};
    int population{100};
    long budget{30000};
    std::uint64_t seed{1};
    GaConfig ga;
    CmaesConfig cmaes;
    DeConfig de;
    EsConfig es;

    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;
};

/// Ask/tell maximizer over a box. Every asked point lies inside the bounds,
/// and the batch is truncated so that the told evaluations never exceed the budget.
class Optimizer
{
public:
    Optimizer(const OptimizerConfig& config, Bounds bounds);
    virtual ~Optimizer() = default;

    /// Next batch to evaluate; empty once the budget is spent.
    /// Asking again before telling returns the same batch.
    const std::vector<Vector>& ask();
    /// Fitness of every member of the last batch, by batch index.
    void tell(const std::vector<double>& fitness);

    bool finished() const { return m_evaluations >= m_config.budget; }
    long evaluations() const { return m_evaluations; }
    int generation() const { return m_generation; }
    double best_fitness() const { return m_best_fitness; }
    const Vector& best() const { return m_best; }
    const Bounds& bounds() const { return m_bounds; }
    const OptimizerConfig& config() const { return m_config; }
    virtual std::string variant() const = 0;
    /// Number of search-distribution restarts so far.
    virtual int restarts() const { return 0; }
    /// Fitness of the current population (parents for ES), empty before the first tell.
    virtual std::vector<double> population_fitness() const = 0;
    /// Centre of the search: the sampling mean for CMA-ES, the population mean otherwise.
    virtual Vector center() const = 0;

protected:
    /// Full batch of the next generation.
    virtual std::vector<Vector> propose() = 0;
    /// Called only with complete batches; non-finite fitness arrives as -inf.
    virtual void update(const std::vector<Vector>& batch, const std::vector<double>& fitness) = 0;

    /// Draws until a point falls in the box, then clips the last draw.
    template <typename Draw>
    Vector draw_in_box(Draw&& draw, int limit)
    {
        Vector x = draw();
        for (int k = 1; k < limit && !m_bounds.contains(x); ++k)
            x = draw();
        return m_bounds.clip(x);
    }

    OptimizerConfig m_config;
    Bounds m_bounds;
    Philox m_rng;

private:
    std::vector<Vector> m_batch;
    size_t m_proposed{0};
    bool m_pending{false};
    long m_evaluations{0};
    int m_generation{0};
    double m_best_fitness;
    Vector m_best;
};

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config, const Bounds& bounds);

// Building blocks, exposed for testing.

/// Winner among the given candidate indices; ties go to the lowest index.
int tournament_winner(const std::vector<double>& fitness, const std::vector<int>& candidates);
/// k candidates drawn uniformly with replacement.
int tournament_select(const std::vector<double>& fitness, int k, Philox& rng);
/// Swaps genes in [c1, c2) between the parents.
std::pair<Vector, Vector> crossover_two_point(const Vector& a, const Vector& b, int c1, int c2);
/// Cut points 0 < c1 < c2 <= n drawn uniformly among all such pairs.
std::pair<Vector, Vector> crossover_two_point(const Vector& a, const Vector& b, Philox& rng);
/// Each gene is redrawn uniformly from its interval with the given probability.
Vector mutate_uniform(const Vector& x, const Bounds& bounds, double probability, Philox& rng);

/// Indices sorted by decreasing fitness; ties keep the lower index first.
std::vector<int> rank_descending(const std::vector<double>& fitness);

Vector de_donor(const Vector& a, const Vector& b, const Vector& c, double f);
/// Binomial crossover; the forced index always comes from the donor.
Vector de_crossover(const Vector& target, const Vector& donor, double cr, int forced, Philox& rng);

/// Self-adaptive mutation of a recombinant: log-normal step update, then a Gaussian step.
std::pair<Vector, Vector> es_offspring(const Vector& mean, const Vector& steps, Philox& rng);

} // namespace gaintune::opt
