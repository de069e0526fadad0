#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <gaintune/objective/objective.h>
#include <gaintune/opt/optimizer.h>
#include <gaintune/sim/rollout.h>

namespace gaintune::harness {

constexpr int kSchemaVersion = 1;

/// Invalid configuration; the message starts with the offending field path.
class ConfigError : public std::runtime_error
{
public:
    ConfigError(const std::string& path, const std::string& what)
        : std::runtime_error(path + ": " + what)
        , m_path(path)
    {
    }
    const std::string& path() const { return m_path; }

private:
    std::string m_path;
};

struct ExperimentConfig
{
    std::vector<opt::Algorithm> algorithms{opt::Algorithm::GA};
    objective::ObjectiveKind objective{objective::ObjectiveKind::G1};
    objective::ObjectiveSpec objective_spec{objective::ObjectiveSpec::g1()};
    int runs{10};
    long budget{30000};
    int population{100};
    std::uint64_t seed{1};
    /// Stop a run once the best objective reaches this value.
    double stop_at{std::numeric_limits<double>::infinity()};
    objective::SearchSpace space{objective::SearchSpace::table()};
    opt::GaConfig ga;
    opt::CmaesConfig cmaes;
    opt::DeConfig de;
    opt::EsConfig es;
    sim::RolloutConfig rollout;
    /// Evaluation threads; 0 uses every available core.
    int workers{0};
    std::filesystem::path output{"results"};

    opt::OptimizerConfig optimizer(opt::Algorithm algorithm, std::uint64_t seed) const;
    /// Throws ConfigError.
    void validate() const;
};

/// Reads a YAML config over the defaults. Unknown keys are errors.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& yaml_text, ExperimentConfig base = {});
/// Resolved config as YAML; parse_config reads it back to an equal config.
std::string dump_config(const ExperimentConfig& config);

sim::ScheduleParams schedule_by_name(const std::string& name);

/// Seed of evaluation `eval` in run `run`.
std::uint64_t evaluation_seed(std::uint64_t master, int run, long eval);
std::uint64_t optimizer_seed(std::uint64_t master, int run);

int resolve_workers(int workers);

/// Scores parameter vectors by closed-loop rollouts.
class Evaluator
{
public:
    Evaluator(sim::RolloutConfig rollout, objective::ObjectiveSpec spec, int workers = 0);

    double evaluate(const objective::ParamVector& xi, std::uint64_t seed) const;

    /// Entry i is scored with seeds[i], on `workers` OpenMP threads.
    std::vector<double> evaluate_batch(const std::vector<opt::Vector>& batch,
                                       const std::vector<std::uint64_t>& seeds) const;
    /// Single-threaded reference for evaluate_batch.
    std::vector<double> evaluate_batch_serial(const std::vector<opt::Vector>& batch,
                                              const std::vector<std::uint64_t>& seeds) const;

    int workers() const { return m_workers; }

private:
    sim::RolloutConfig m_rollout;
    objective::ObjectiveSpec m_spec;
    int m_workers;
};

struct GenerationStats
{
    int run{0};
    int generation{0};
    long evaluations{0};
    int batch_size{0};
    double batch_mean{0.0};
    double best{0.0};
    opt::Vector best_params;
};

struct RunResult
{
    opt::Algorithm algorithm{opt::Algorithm::GA};
    int run{0};
    std::uint64_t optimizer_seed{0};
    std::vector<GenerationStats> generations;
    double best{0.0};
    objective::ParamVector best_params;
    long evaluations{0};
    std::string variant;
    int restarts{0};
    double wall_time{0.0};
};

/// One seeded optimization run; evaluation seeds come from (seed, run, index).
RunResult run_optimization(const ExperimentConfig& config, opt::Algorithm algorithm, int run,
                           const Evaluator& evaluator);

void write_convergence_csv(std::ostream& out, const RunResult& result);

/// Directory of one run below the output directory.
std::filesystem::path run_directory(const ExperimentConfig& config, opt::Algorithm algorithm, int run);

/// Runs every (algorithm, run) and writes convergence.csv, best_params.yaml
/// and metadata.yaml per run. Throws std::runtime_error on unwritable output.
std::vector<RunResult> run_experiment(const ExperimentConfig& config, std::ostream* progress = nullptr);

struct ParamsFile
{
    objective::ParamVector params;
    std::optional<objective::ObjectiveKind> objective;
    std::optional<double> value;
};

/// Reads `params:` as a name map or a 14-entry list. Throws std::runtime_error.
ParamsFile load_params(const std::string& path);
void write_params(std::ostream& out, const objective::ParamVector& xi, objective::ObjectiveKind kind, double value);

struct SummaryRow
{
    std::string algorithm;
    std::string objective;
    int runs{0};
    double mean{0.0};
    double stddev{0.0};
    bool single_run{false};
};

struct Summary
{
    std::vector<SummaryRow> rows;
    int skipped{0};
    std::vector<std::string> warnings;
};

/// Mean and sample standard deviation of the final best objective per
/// (algorithm, objective) over every run directory found below `inputs`.
Summary aggregate(const std::vector<std::filesystem::path>& inputs);
void write_summary_csv(std::ostream& out, const Summary& summary);

struct EvaluationReport
{
    sim::RolloutResult result;
    double value{0.0};
    std::string schedule;
    std::uint64_t seed{0};
};

EvaluationReport evaluate_params(const objective::ParamVector& xi, const objective::ObjectiveSpec& spec,
                                 sim::RolloutConfig rollout, std::uint64_t seed);
void print_report(std::ostream& out, const EvaluationReport& report, objective::ObjectiveKind kind);

} // namespace gaintune::harness
