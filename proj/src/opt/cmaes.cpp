#include <algorithm>
#include <cmath>

#include "detail.h"

namespace gaintune::opt::detail {

namespace {

/// (mu/mu_w, lambda)-CMA-ES with rank-one and rank-mu covariance updates
/// and cumulative step-size adaptation, mu = lambda / 2, log-linear weights.
class Cmaes final : public Optimizer
{
public:
    Cmaes(const OptimizerConfig& config, const Bounds& bounds)
        : Optimizer(config, bounds)
    {
        const int n = m_bounds.dim();
        const int lambda = m_config.population;
        m_mu = lambda / 2;
        m_weights.resize(m_mu);
        for (int i = 0; i < m_mu; ++i)
            m_weights(i) = std::log(m_mu + 0.5) - std::log(i + 1.0);
        m_weights /= m_weights.sum();
        m_mueff = 1.0 / m_weights.squaredNorm();

        const double dn = n;
        m_cc = (4.0 + m_mueff / dn) / (dn + 4.0 + 2.0 * m_mueff / dn);
        m_cs = (m_mueff + 2.0) / (dn + m_mueff + 5.0);
        m_c1 = 2.0 / ((dn + 1.3) * (dn + 1.3) + m_mueff);
        m_cmu = std::min(1.0 - m_c1, 2.0 * (m_mueff - 2.0 + 1.0 / m_mueff) / ((dn + 2.0) * (dn + 2.0) + m_mueff));
        m_damps = 1.0 + 2.0 * std::max(0.0, std::sqrt((m_mueff - 1.0) / (dn + 1.0)) - 1.0) + m_cs;
        m_chi = std::sqrt(dn) * (1.0 - 1.0 / (4.0 * dn) + 1.0 / (21.0 * dn * dn));

        m_mean = m_bounds.centroid();
        reset_distribution();
    }

    std::string variant() const override { return "cmaes-rank-mu-csa"; }
    int restarts() const override { return m_restarts; }
    std::vector<double> population_fitness() const override { return m_fitness; }
    Vector center() const override { return m_mean; }

protected:
    std::vector<Vector> propose() override
    {
        const int n = m_bounds.dim();
        std::vector<Vector> batch;
        for (int k = 0; k < m_config.population; ++k)
        {
            batch.push_back(draw_in_box(
                [&] () {
                    Vector z(n);
                    for (int i = 0; i < n; ++i)
                        z(i) = m_rng.normal();
                    return Vector(m_mean + m_sigma * (m_basis * m_scales.cwiseProduct(z)));
                },
                m_config.cmaes.resample_limit));
        }
        return batch;
    }

    void update(const std::vector<Vector>& batch, const std::vector<double>& fitness) override
    {
        const int n = m_bounds.dim();
        m_fitness = fitness;
        ++m_iteration;
        const auto [lo, hi] = std::minmax_element(fitness.begin(), fitness.end());
        if (*lo == *hi)
        {
            // Flat fitness carries no ranking information: widen and keep the mean.
            m_sigma *= std::exp(0.2 + m_cs / m_damps);
            check_degeneracy();
            return;
        }

        const std::vector<int> order = rank_descending(fitness);
        Vector y_w = Vector::Zero(n);
        Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < m_mu; ++i)
        {
            const Vector y = (batch[static_cast<size_t>(order[static_cast<size_t>(i)])] - m_mean) / m_sigma;
            y_w += m_weights(i) * y;
            rank_mu.noalias() += m_weights(i) * y * y.transpose();
        }
        m_mean += m_sigma * y_w;

        const Vector inv_sqrt_y = m_basis * (m_basis.transpose() * y_w).cwiseQuotient(m_scales);
        m_ps = (1.0 - m_cs) * m_ps + std::sqrt(m_cs * (2.0 - m_cs) * m_mueff) * inv_sqrt_y;
        const double ps_norm = m_ps.norm() / std::sqrt(1.0 - std::pow(1.0 - m_cs, 2.0 * m_iteration));
        const bool hsig = ps_norm / m_chi < 1.4 + 2.0 / (n + 1.0);
        m_pc = (1.0 - m_cc) * m_pc + (hsig ? std::sqrt(m_cc * (2.0 - m_cc) * m_mueff) : 0.0) * y_w;

        const double lost = hsig ? 0.0 : m_c1 * m_cc * (2.0 - m_cc);
        m_cov = (1.0 - m_c1 - m_cmu + lost) * m_cov + m_c1 * m_pc * m_pc.transpose() + m_cmu * rank_mu;
        m_cov = 0.5 * (m_cov + m_cov.transpose());
        m_sigma *= std::exp((m_cs / m_damps) * (m_ps.norm() / m_chi - 1.0));
        decompose();
        check_degeneracy();
    }

private:
    void reset_distribution()
    {
        const int n = m_bounds.dim();
        m_sigma = std::sqrt(m_config.cmaes.initial_variance);
        m_cov = Eigen::MatrixXd::Identity(n, n);
        m_pc = Vector::Zero(n);
        m_ps = Vector::Zero(n);
        m_iteration = 0;
        decompose();
    }

    void decompose()
    {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m_cov);
        m_basis = eig.eigenvectors();
        m_scales = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        m_condition = eig.eigenvalues().minCoeff() > 0.0
                          ? eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff()
                          : std::numeric_limits<double>::infinity();
    }

    void check_degeneracy()
    {
        const bool bad = !m_cov.allFinite() || !m_mean.allFinite() || !std::isfinite(m_sigma) || !(m_sigma > 0.0)
                         || !(m_condition <= m_config.cmaes.max_condition)
                         || !(m_sigma * m_scales.maxCoeff() > 1e-300);
        if (bad)
        {
            if (!m_mean.allFinite())
                m_mean = m_bounds.centroid();
            ++m_restarts;
            reset_distribution();
        }
    }

    int m_mu{0};
    Vector m_weights;
    double m_mueff{0.0};
    double m_cc{0.0}, m_cs{0.0}, m_c1{0.0}, m_cmu{0.0}, m_damps{0.0}, m_chi{0.0};

    Vector m_mean;
    double m_sigma{1.0};
    Eigen::MatrixXd m_cov;
    Eigen::MatrixXd m_basis;
    Vector m_scales;
    double m_condition{1.0};
    Vector m_pc;
    Vector m_ps;
    int m_iteration{0};
    int m_restarts{0};
    std::vector<double> m_fitness;
};

} // namespace

std::unique_ptr<Optimizer> make_cmaes(const OptimizerConfig& config, const Bounds& bounds)
{
    return std::make_unique<Cmaes>(config, bounds);
}

} // namespace gaintune::opt::detail
