// Command-line front end: optimize, aggregate, evaluate, replay.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include <gaintune/harness/experiment.h>

using namespace gaintune;

namespace {

enum ExitCode
{
    kOk = 0,
    kFailure = 1,
    kUsage = 2,
    kConfig = 3,
    kIo = 4,
};

std::string json_escape(const std::string& s)
{
    std::string out;
    for (char c : s)
    {
        switch (c)
        {
        case '"':
            out += "\\\"";
            break;
        case '\\':
            out += "\\\\";
            break;
        case '\n':
            out += "\\n";
            break;
        case '\t':
            out += "\\t";
            break;
        default:
            if (static_cast<unsigned char>(c) < 0x20)
            {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", c);
                out += buf;
            } else
            {
                out += c;
            }
        }
    }
    return out;
}

/// One JSON object per line on stderr.
int fail(int code, const std::string& kind, const std::string& message, const std::string& field = {})
{
    std::cerr << "{\"error\":\"" << kind << "\"";
    if (!field.empty())
        std::cerr << ",\"field\":\"" << json_escape(field) << "\"";
    std::cerr << ",\"message\":\"" << json_escape(message) << "\",\"exit_code\":" << code << "}\n";
    return code;
}

struct RolloutOptions
{
    std::string config;
    std::string schedule;
    std::uint64_t seed{0};
    bool no_mismatch{false};
};

void add_rollout_options(CLI::App* cmd, RolloutOptions& o, const std::string& default_schedule)
{
    o.schedule = default_schedule;
    cmd->add_option("--config", o.config, "Experiment config supplying plant, MPC and rollout settings")
        ->check(CLI::ExistingFile);
    cmd->add_option("--schedule", o.schedule, "Footstep plan")
        ->check(CLI::IsMember({"train", "validation"}))
        ->capture_default_str();
    cmd->add_option("--seed", o.seed, "Rollout seed")->capture_default_str();
    cmd->add_flag("--no-mismatch", o.no_mismatch, "Disable lag, noise, jitter and pushes");
}

harness::ExperimentConfig base_config(const RolloutOptions& o)
{
    harness::ExperimentConfig c = o.config.empty() ? harness::ExperimentConfig{} : harness::load_config(o.config);
    c.rollout.schedule = harness::schedule_by_name(o.schedule);
    if (o.no_mismatch)
        c.rollout.plant = c.rollout.plant.without_mismatch();
    return c;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Gain tuning of a hierarchical walking controller by gradient-free optimization"};
    app.require_subcommand(1);

    // optimize
    auto* optimize = app.add_subcommand("optimize", "Run seeded optimizations and write per-run logs");
    std::string algo = "ga";
    std::string objective_name = "g1";
    long budget = 30000;
    int population = 100;
    int runs = 10;
    std::uint64_t seed = 1;
    std::string out_dir;
    std::string config_path;
    int workers = 0;
    double stop_at = 0.0;
    std::vector<std::string> algos;
    optimize->add_option("--algo", algos, "Algorithm(s): ga, cmaes, de, es")
        ->check(CLI::IsMember({"ga", "cmaes", "de", "es"}, CLI::ignore_case));
    optimize->add_option("--objective", objective_name, "Objective: g1 or g2")
        ->check(CLI::IsMember({"g1", "g2"}, CLI::ignore_case));
    optimize->add_option("--budget", budget, "Evaluations per run");
    optimize->add_option("--pop", population, "Population size");
    optimize->add_option("--runs", runs, "Independent runs per algorithm");
    optimize->add_option("--seed", seed, "Master seed");
    optimize->add_option("--out", out_dir, "Output directory");
    optimize->add_option("--config", config_path, "YAML experiment config; flags override it")->check(CLI::ExistingFile);
    optimize->add_option("--workers", workers, "Evaluation threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    optimize->add_option("--stop-at", stop_at, "End a run once the best objective reaches this value");
    optimize->add_flag("--no-mismatch", "Disable lag, noise, jitter and pushes");

    // aggregate
    auto* aggregate = app.add_subcommand("aggregate", "Mean and sample std of final best objectives");
    std::vector<std::string> inputs;
    std::string summary_out;
    aggregate->add_option("--in", inputs, "Result directories")->required();
    aggregate->add_option("--out", summary_out, "Summary CSV")->required();

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Score a parameter file with one rollout");
    std::string params_path;
    std::string eval_objective;
    std::string log_path;
    RolloutOptions eval_opts;
    evaluate->add_option("--params", params_path, "Parameter file")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--objective", eval_objective, "Objective: g1 or g2 (default: from the file, else g1)")
        ->check(CLI::IsMember({"g1", "g2"}, CLI::ignore_case));
    evaluate->add_option("--log", log_path, "Write the rollout time series to this CSV");
    add_rollout_options(evaluate, eval_opts, "validation");

    // replay
    auto* replay = app.add_subcommand("replay", "Write the full rollout time series of a parameter file");
    std::string replay_params;
    std::string replay_out;
    RolloutOptions replay_opts;
    replay->add_option("--params", replay_params, "Parameter file")->required()->check(CLI::ExistingFile);
    replay->add_option("--out", replay_out, "Output CSV")->required();
    add_rollout_options(replay, replay_opts, "train");

    try
    {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e)
    {
        return app.exit(e);
    } catch (const CLI::ParseError& e)
    {
        return fail(kUsage, "usage", e.what());
    }

    try
    {
        if (optimize->parsed())
        {
            harness::ExperimentConfig c = config_path.empty() ? harness::ExperimentConfig{}
                                                              : harness::load_config(config_path);
            if (!algos.empty())
            {
                c.algorithms.clear();
                for (const auto& a : algos)
                    c.algorithms.push_back(opt::parse_algorithm(a));
            }
            if (optimize->count("--objective") || config_path.empty())
            {
                c.objective = objective::parse_objective(objective_name);
                c.objective_spec = objective::ObjectiveSpec::of(c.objective);
            }
            if (optimize->count("--budget"))
                c.budget = budget;
            if (optimize->count("--pop"))
                c.population = population;
            if (optimize->count("--runs"))
                c.runs = runs;
            if (optimize->count("--seed"))
                c.seed = seed;
            if (optimize->count("--out"))
                c.output = out_dir;
            if (optimize->count("--workers"))
                c.workers = workers;
            if (optimize->count("--stop-at"))
                c.stop_at = stop_at;
            if (optimize->count("--no-mismatch"))
                c.rollout.plant = c.rollout.plant.without_mismatch();
            c.validate();
            harness::run_experiment(c, &std::cout);
            std::cout << "results in " << c.output.string() << '\n';
        } else if (aggregate->parsed())
        {
            std::vector<std::filesystem::path> dirs(inputs.begin(), inputs.end());
            const harness::Summary summary = harness::aggregate(dirs);
            for (const auto& w : summary.warnings)
                std::cerr << "warning: skipped " << w << '\n';
            if (summary.rows.empty())
                return fail(kIo, "no_runs", "no readable runs found", "--in");
            std::ofstream out(summary_out);
            if (!out)
                return fail(kIo, "io", "cannot write " + summary_out, "--out");
            harness::write_summary_csv(out, summary);
            harness::write_summary_csv(std::cout, summary);
            std::cout << "skipped=" << summary.skipped << '\n';
        } else if (evaluate->parsed())
        {
            const harness::ParamsFile file = harness::load_params(params_path);
            harness::ExperimentConfig c = base_config(eval_opts);
            objective::ObjectiveKind kind = file.objective.value_or(objective::ObjectiveKind::G1);
            if (!eval_objective.empty())
                kind = objective::parse_objective(eval_objective);
            objective::ObjectiveSpec spec = objective::ObjectiveSpec::of(kind);
            if (!eval_opts.config.empty() && c.objective == kind)
                spec = c.objective_spec;
            c.rollout.record_log = !log_path.empty();
            const auto report = harness::evaluate_params(file.params, spec, c.rollout, eval_opts.seed);
            harness::print_report(std::cout, report, kind);
            if (!log_path.empty())
            {
                std::ofstream log(log_path);
                if (!log)
                    return fail(kIo, "io", "cannot write " + log_path, "--log");
                sim::write_log_csv(log, report.result);
                std::ofstream meta(log_path + ".meta.yaml");
                if (!meta)
                    return fail(kIo, "io", "cannot write " + log_path + ".meta.yaml", "--log");
                YAML::Emitter e;
                e.SetDoublePrecision(17);
                e << YAML::BeginMap;
                e << YAML::Key << "schema_version" << YAML::Value << harness::kSchemaVersion;
                e << YAML::Key << "params" << YAML::Value << params_path;
                e << YAML::Key << "schedule" << YAML::Value << report.schedule;
                e << YAML::Key << "seed" << YAML::Value << report.seed;
                e << YAML::Key << "mismatch" << YAML::Value << !eval_opts.no_mismatch;
                e << YAML::Key << "objective" << YAML::Value << objective::to_string(kind);
                e << YAML::Key << "value" << YAML::Value << report.value;
                e << YAML::Key << "outcome" << YAML::Value << sim::to_string(report.result.outcome);
                e << YAML::EndMap;
                meta << e.c_str() << '\n';
            }
        } else if (replay->parsed())
        {
            const harness::ParamsFile file = harness::load_params(replay_params);
            harness::ExperimentConfig c = base_config(replay_opts);
            c.rollout.record_log = true;
            const auto result = sim::rollout(objective::to_gains(file.params), c.rollout, replay_opts.seed);
            std::ofstream out(replay_out);
            if (!out)
                return fail(kIo, "io", "cannot write " + replay_out, "--out");
            sim::write_log_csv(out, result);
            std::cout << "outcome=" << sim::to_string(result.outcome) << '\n'
                      << "rows=" << result.log.size() << '\n';
        }
    } catch (const harness::ConfigError& e)
    {
        return fail(kConfig, "config", e.what(), e.path());
    } catch (const std::invalid_argument& e)
    {
        return fail(kConfig, "invalid_argument", e.what());
    } catch (const std::runtime_error& e)
    {
        return fail(kIo, "runtime", e.what());
    } catch (const std::exception& e)
    {
        return fail(kFailure, "internal", e.what());
    }
    return kOk;
}
