#include <gaintune/harness/experiment.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <omp.h>
#include <yaml-cpp/yaml.h>

namespace gaintune::harness {

namespace fs = std::filesystem;

namespace {

objective::ParamVector as_params(const opt::Vector& x)
{
    if (x.size() != objective::kNumParams)
        throw std::invalid_argument("expected " + std::to_string(objective::kNumParams) + " parameters, got "
                                    + std::to_string(x.size()));
    return x;
}

std::ofstream open_for_write(const fs::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::string read_text(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

Evaluator::Evaluator(sim::RolloutConfig rollout, objective::ObjectiveSpec spec, int workers)
    : m_rollout(std::move(rollout))
    , m_spec(spec)
    , m_workers(resolve_workers(workers))
{
    m_rollout.record_log = false;
    m_spec.validate();
}

double Evaluator::evaluate(const objective::ParamVector& xi, std::uint64_t seed) const
{
    return objective::evaluate(m_spec, sim::rollout(objective::to_gains(xi), m_rollout, seed));
}

std::vector<double> Evaluator::evaluate_batch(const std::vector<opt::Vector>& batch,
                                              const std::vector<std::uint64_t>& seeds) const
{
    if (seeds.size() != batch.size())
        throw std::invalid_argument("evaluate_batch: one seed per member is required");
    const auto n = static_cast<long>(batch.size());
    std::vector<double> fitness(batch.size(), 0.0);
    std::vector<std::exception_ptr> errors(batch.size());

#pragma omp parallel for schedule(dynamic, 1) num_threads(m_workers)
    for (long i = 0; i < n; ++i)
    {
        const auto k = static_cast<size_t>(i);
        try
        {
            fitness[k] = evaluate(as_params(batch[k]), seeds[k]);
        } catch (...)
        {
            errors[k] = std::current_exception();
        }
    }

    for (const auto& e : errors)
    {
        if (e)
            std::rethrow_exception(e);
    }
    return fitness;
}

std::vector<double> Evaluator::evaluate_batch_serial(const std::vector<opt::Vector>& batch,
                                                     const std::vector<std::uint64_t>& seeds) const
{
    if (seeds.size() != batch.size())
        throw std::invalid_argument("evaluate_batch: one seed per member is required");
    std::vector<double> fitness;
    fitness.reserve(batch.size());
    for (size_t i = 0; i < batch.size(); ++i)
        fitness.push_back(evaluate(as_params(batch[i]), seeds[i]));
    return fitness;
}

RunResult run_optimization(const ExperimentConfig& config, opt::Algorithm algorithm, int run,
                           const Evaluator& evaluator)
{
    const auto start = std::chrono::steady_clock::now();
    RunResult result;
    result.algorithm = algorithm;
    result.run = run;
    result.optimizer_seed = optimizer_seed(config.seed, run);

    const opt::Bounds bounds{config.space.lower, config.space.upper};
    auto optimizer = opt::make_optimizer(config.optimizer(algorithm, result.optimizer_seed), bounds);

    while (!optimizer->finished())
    {
        const std::vector<opt::Vector>& batch = optimizer->ask();
        if (batch.empty())
            break;
        std::vector<std::uint64_t> seeds(batch.size());
        for (size_t i = 0; i < batch.size(); ++i)
            seeds[i] = evaluation_seed(config.seed, run, optimizer->evaluations() + static_cast<long>(i));
        const std::vector<double> fitness = evaluator.evaluate_batch(batch, seeds);

        GenerationStats g;
        g.run = run;
        g.batch_size = static_cast<int>(batch.size());
        double sum = 0.0;
        for (double f : fitness)
            sum += f;
        g.batch_mean = sum / static_cast<double>(fitness.size());

        optimizer->tell(fitness);
        g.generation = optimizer->generation();
        g.evaluations = optimizer->evaluations();
        g.best = optimizer->best_fitness();
        g.best_params = optimizer->best();
        result.generations.push_back(g);
        if (g.best >= config.stop_at)
            break;
    }

    result.best = optimizer->best_fitness();
    result.best_params = as_params(optimizer->best());
    result.evaluations = optimizer->evaluations();
    result.variant = optimizer->variant();
    result.restarts = optimizer->restarts();
    result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

void write_convergence_csv(std::ostream& out, const RunResult& result)
{
    out << "run,generation,evaluations,batch_size,batch_mean,best";
    for (const char* name : objective::kParamNames)
        out << ',' << name;
    out << '\n';
    out << std::setprecision(17);
    for (const GenerationStats& g : result.generations)
    {
        out << g.run << ',' << g.generation << ',' << g.evaluations << ',' << g.batch_size << ',' << g.batch_mean
            << ',' << g.best;
        for (Eigen::Index i = 0; i < g.best_params.size(); ++i)
            out << ',' << g.best_params(i);
        out << '\n';
    }
}

fs::path run_directory(const ExperimentConfig& config, opt::Algorithm algorithm, int run)
{
    std::ostringstream name;
    name << "run_" << std::setw(2) << std::setfill('0') << run;
    return config.output / (std::string(opt::to_string(algorithm)) + "_" + objective::to_string(config.objective))
           / name.str();
}

namespace {

void write_metadata(const fs::path& path, const ExperimentConfig& config, const RunResult& r, int workers)
{
    YAML::Emitter e;
    e.SetDoublePrecision(17);
    e << YAML::BeginMap;
    e << YAML::Key << "schema_version" << YAML::Value << kSchemaVersion;
    e << YAML::Key << "algorithm" << YAML::Value << opt::to_string(r.algorithm);
    e << YAML::Key << "variant" << YAML::Value << r.variant;
    e << YAML::Key << "objective" << YAML::Value << objective::to_string(config.objective);
    e << YAML::Key << "run" << YAML::Value << r.run;
    e << YAML::Key << "master_seed" << YAML::Value << config.seed;
    e << YAML::Key << "optimizer_seed" << YAML::Value << r.optimizer_seed;
    e << YAML::Key << "evaluation_seeds" << YAML::Value << "derive_seed(master_seed, run, evaluation_index)";
    e << YAML::Key << "schedule" << YAML::Value << config.rollout.schedule.name;
    e << YAML::Key << "evaluations" << YAML::Value << r.evaluations;
    e << YAML::Key << "generations" << YAML::Value << r.generations.size();
    e << YAML::Key << "best" << YAML::Value << r.best;
    e << YAML::Key << "stopped_early" << YAML::Value << (r.evaluations < config.budget);
    e << YAML::Key << "restarts" << YAML::Value << r.restarts;
    e << YAML::Key << "workers" << YAML::Value << workers;
    e << YAML::Key << "wall_time_s" << YAML::Value << r.wall_time;
    e << YAML::Key << "config" << YAML::Value << YAML::Load(dump_config(config));
    e << YAML::EndMap;
    open_for_write(path) << e.c_str() << '\n';
}

} // namespace

std::vector<RunResult> run_experiment(const ExperimentConfig& config, std::ostream* progress)
{
    config.validate();
    const Evaluator evaluator(config.rollout, config.objective_spec, config.workers);
    std::vector<RunResult> results;
    for (opt::Algorithm algorithm : config.algorithms)
    {
        for (int run = 0; run < config.runs; ++run)
        {
            const fs::path dir = run_directory(config, algorithm, run);
            std::error_code ec;
            fs::create_directories(dir, ec);
            if (ec)
                throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

            RunResult r = run_optimization(config, algorithm, run, evaluator);
            {
                auto out = open_for_write(dir / "convergence.csv");
                write_convergence_csv(out, r);
            }
            {
                auto out = open_for_write(dir / "best_params.yaml");
                write_params(out, r.best_params, config.objective, r.best);
            }
            write_metadata(dir / "metadata.yaml", config, r, evaluator.workers());
            if (progress)
            {
                *progress << opt::to_string(algorithm) << " run " << run << ": best " << std::setprecision(6)
                          << r.best << " after " << r.evaluations << " evaluations (" << std::setprecision(3)
                          << r.wall_time << " s)\n";
            }
            results.push_back(std::move(r));
        }
    }
    return results;
}

void write_params(std::ostream& out, const objective::ParamVector& xi, objective::ObjectiveKind kind, double value)
{
    YAML::Emitter e;
    e.SetDoublePrecision(17);
    e << YAML::BeginMap;
    e << YAML::Key << "schema_version" << YAML::Value << kSchemaVersion;
    e << YAML::Key << "objective" << YAML::Value << objective::to_string(kind);
    e << YAML::Key << "value" << YAML::Value << value;
    e << YAML::Key << "params" << YAML::Value << YAML::BeginMap;
    for (int i = 0; i < objective::kNumParams; ++i)
        e << YAML::Key << objective::kParamNames[static_cast<size_t>(i)] << YAML::Value << xi(i);
    e << YAML::EndMap << YAML::EndMap;
    out << e.c_str() << '\n';
}

ParamsFile load_params(const std::string& path)
{
    const std::string text = read_text(path);
    ParamsFile file;
    try
    {
        const YAML::Node root = YAML::Load(text);
        if (!root.IsMap())
            throw std::runtime_error("expected a mapping");
        const YAML::Node params = root["params"];
        if (!params)
            throw std::runtime_error("missing 'params'");
        if (params.IsSequence())
        {
            if (params.size() != objective::kNumParams)
                throw std::runtime_error("'params' must list " + std::to_string(objective::kNumParams) + " values");
            for (int i = 0; i < objective::kNumParams; ++i)
                file.params(i) = params[static_cast<size_t>(i)].as<double>();
        } else if (params.IsMap())
        {
            for (const auto& kv : params)
            {
                if (objective::param_index(kv.first.as<std::string>()) < 0)
                    throw std::runtime_error("unknown parameter '" + kv.first.as<std::string>() + "'");
            }
            for (int i = 0; i < objective::kNumParams; ++i)
            {
                const char* name = objective::kParamNames[static_cast<size_t>(i)];
                if (!params[name])
                    throw std::runtime_error(std::string("missing parameter '") + name + "'");
                file.params(i) = params[name].as<double>();
            }
        } else
        {
            throw std::runtime_error("'params' must be a mapping or a list");
        }
        if (!file.params.allFinite())
            throw std::runtime_error("parameters must be finite");
        if (root["objective"])
            file.objective = objective::parse_objective(root["objective"].as<std::string>());
        if (root["value"])
            file.value = root["value"].as<double>();
    } catch (const YAML::Exception& e)
    {
        throw std::runtime_error(path + ": " + e.what());
    } catch (const std::exception& e)
    {
        throw std::runtime_error(path + ": " + e.what());
    }
    return file;
}

namespace {

struct RunRecord
{
    std::string algorithm;
    std::string objective;
    double best{0.0};
};

RunRecord read_run(const fs::path& dir)
{
    const YAML::Node meta = YAML::LoadFile((dir / "metadata.yaml").string());
    RunRecord r;
    r.algorithm = meta["algorithm"].as<std::string>();
    r.objective = meta["objective"].as<std::string>();

    std::ifstream csv(dir / "convergence.csv");
    if (!csv)
        throw std::runtime_error("missing convergence.csv");
    std::string line, last;
    std::getline(csv, line);
    if (line.rfind("run,generation,evaluations,batch_size,batch_mean,best", 0) != 0)
        throw std::runtime_error("unexpected convergence.csv header");
    while (std::getline(csv, line))
    {
        if (!line.empty())
            last = line;
    }
    if (last.empty())
        throw std::runtime_error("convergence.csv has no generations");
    std::stringstream fields(last);
    std::string cell;
    for (int i = 0; i < 6; ++i)
    {
        if (!std::getline(fields, cell, ','))
            throw std::runtime_error("truncated convergence.csv row");
    }
    size_t used = 0;
    r.best = std::stod(cell, &used);
    if (used != cell.size() || !std::isfinite(r.best))
        throw std::runtime_error("bad best value '" + cell + "'");
    return r;
}

} // namespace

Summary aggregate(const std::vector<fs::path>& inputs)
{
    Summary summary;
    std::map<std::pair<std::string, std::string>, std::vector<double>> cells;
    auto visit = [&] (const fs::path& dir) {
        try
        {
            const RunRecord r = read_run(dir);
            cells[{r.algorithm, r.objective}].push_back(r.best);
        } catch (const std::exception& e)
        {
            ++summary.skipped;
            summary.warnings.push_back(dir.string() + ": " + e.what());
        }
    };

    for (const fs::path& input : inputs)
    {
        if (!fs::is_directory(input))
        {
            ++summary.skipped;
            summary.warnings.push_back(input.string() + ": not a directory");
            continue;
        }
        std::vector<fs::path> dirs;
        if (fs::exists(input / "metadata.yaml"))
            dirs.push_back(input);
        for (const auto& entry : fs::recursive_directory_iterator(input))
        {
            if (entry.is_directory() && (fs::exists(entry.path() / "metadata.yaml") || fs::exists(entry.path() / "convergence.csv")))
                dirs.push_back(entry.path());
        }
        std::sort(dirs.begin(), dirs.end());
        for (const fs::path& d : dirs)
            visit(d);
    }

    for (const auto& [key, finals] : cells)
    {
        SummaryRow row;
        row.algorithm = key.first;
        row.objective = key.second;
        row.runs = static_cast<int>(finals.size());
        double sum = 0.0;
        for (double f : finals)
            sum += f;
        row.mean = sum / static_cast<double>(finals.size());
        if (finals.size() > 1)
        {
            double ss = 0.0;
            for (double f : finals)
                ss += (f - row.mean) * (f - row.mean);
            row.stddev = std::sqrt(ss / static_cast<double>(finals.size() - 1));
        } else
        {
            row.single_run = true;
        }
        summary.rows.push_back(row);
    }
    return summary;
}

void write_summary_csv(std::ostream& out, const Summary& summary)
{
    out << "algorithm,objective,runs,mean,std,single_run\n" << std::setprecision(17);
    for (const SummaryRow& r : summary.rows)
    {
        out << r.algorithm << ',' << r.objective << ',' << r.runs << ',' << r.mean << ',' << r.stddev << ','
            << (r.single_run ? 1 : 0) << '\n';
    }
}

EvaluationReport evaluate_params(const objective::ParamVector& xi, const objective::ObjectiveSpec& spec,
                                 sim::RolloutConfig rollout, std::uint64_t seed)
{
    EvaluationReport report;
    report.schedule = rollout.schedule.name;
    report.seed = seed;
    report.result = sim::rollout(objective::to_gains(xi), rollout, seed);
    report.value = objective::evaluate(spec, report.result);
    return report;
}

void print_report(std::ostream& out, const EvaluationReport& report, objective::ObjectiveKind kind)
{
    const sim::RolloutResult& r = report.result;
    out << std::setprecision(17);
    out << "schedule=" << report.schedule << '\n';
    out << "seed=" << report.seed << '\n';
    out << "outcome=" << sim::to_string(r.outcome) << '\n';
    out << "fall_reason=" << sim::to_string(r.reason) << '\n';
    out << "walked_time=" << r.walked_time << '\n';
    out << "duration=" << r.duration << '\n';
    out << "torque_norm=" << r.torque_norm() << '\n';
    out << "mpc_solves=" << r.mpc_solves << '\n';
    out << "objective=" << objective::to_string(kind) << '\n';
    out << "value=" << report.value << '\n';
}

} // namespace gaintune::harness
