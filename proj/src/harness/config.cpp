#include <gaintune/harness/experiment.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <omp.h>
#include <yaml-cpp/yaml.h>

namespace gaintune::harness {

namespace {

/// A YAML mapping read under a dotted field path; keys never read are reported.
class Section
{
public:
    Section(YAML::Node node, std::string path)
        : m_node(std::move(node))
        , m_path(std::move(path))
    {
        if (m_node && !m_node.IsNull() && !m_node.IsMap())
            throw ConfigError(where(), "expected a mapping");
    }

    bool has(const std::string& key) const { return m_node && m_node.IsMap() && m_node[key]; }

    template <typename T>
    void read(const std::string& key, T& out)
    {
        m_known.insert(key);
        if (!has(key))
            return;
        try
        {
            out = m_node[key].as<T>();
        } catch (const YAML::Exception&)
        {
            throw ConfigError(field(key), "cannot convert '" + text(m_node[key]) + "'");
        }
    }

    void read_vec3(const std::string& key, Eigen::Vector3d& out)
    {
        std::vector<double> v;
        read(key, v);
        if (!has(key))
            return;
        if (v.size() != 3)
            throw ConfigError(field(key), "expected 3 numbers");
        out = Eigen::Vector3d(v[0], v[1], v[2]);
    }

    Section child(const std::string& key)
    {
        m_known.insert(key);
        return {has(key) ? m_node[key] : YAML::Node(YAML::NodeType::Undefined), field(key)};
    }

    YAML::Node raw(const std::string& key)
    {
        m_known.insert(key);
        return has(key) ? m_node[key] : YAML::Node(YAML::NodeType::Undefined);
    }

    void finish() const
    {
        if (!m_node || !m_node.IsMap())
            return;
        for (const auto& kv : m_node)
        {
            const auto key = kv.first.as<std::string>();
            if (!m_known.contains(key))
                throw ConfigError(field(key), "unknown key");
        }
    }

    std::string field(const std::string& key) const { return m_path.empty() ? key : m_path + "." + key; }
    std::string where() const { return m_path.empty() ? "<root>" : m_path; }

private:
    static std::string text(const YAML::Node& n)
    {
        std::ostringstream s;
        s << n;
        return s.str();
    }

    YAML::Node m_node;
    std::string m_path;
    std::set<std::string> m_known;
};

template <typename E, typename Parse>
E read_enum(Section& s, const std::string& key, E current, Parse parse)
{
    std::string text;
    s.read(key, text);
    if (text.empty())
        return current;
    try
    {
        return parse(text);
    } catch (const std::invalid_argument& e)
    {
        throw ConfigError(s.field(key), e.what());
    }
}

void read_plant(Section s, sim::PlantParams& p)
{
    s.read("dt", p.dt);
    s.read("com_height", p.com_height);
    s.read("actuator_lag", p.actuator_lag);
    s.read("velocity_noise", p.velocity_noise);
    s.read("contact_jitter", p.contact_jitter);
    s.read("coupling_stiffness", p.coupling_stiffness);
    s.read("coupling_damping", p.coupling_damping);
    s.read("coupling_filter", p.coupling_filter);
    s.read("friction", p.friction);
    s.read("zmp_margin", p.zmp_margin);
    s.read("zmp_dwell", p.zmp_dwell);
    s.read("min_height_ratio", p.min_height_ratio);
    bool mismatch = true;
    s.read("mismatch", mismatch);
    if (!mismatch)
        p = p.without_mismatch();
    if (const YAML::Node pushes = s.raw("pushes"))
    {
        if (!pushes.IsSequence())
            throw ConfigError(s.field("pushes"), "expected a list");
        p.pushes.clear();
        for (size_t i = 0; i < pushes.size(); ++i)
        {
            Section ps(pushes[i], s.field("pushes") + "[" + std::to_string(i) + "]");
            sim::Push push;
            ps.read("time", push.time);
            ps.read_vec3("force", push.force);
            ps.read("duration", push.duration);
            ps.finish();
            p.pushes.push_back(push);
        }
    }
    s.finish();
}

void read_schedule(YAML::Node node, const std::string& path, sim::ScheduleParams& p)
{
    if (node && node.IsScalar())
    {
        try
        {
            p = schedule_by_name(node.as<std::string>());
        } catch (const std::invalid_argument& e)
        {
            throw ConfigError(path, e.what());
        }
        return;
    }
    Section s(node, path);
    std::string base;
    s.read("base", base);
    if (!base.empty())
    {
        try
        {
            p = schedule_by_name(base);
        } catch (const std::invalid_argument& e)
        {
            throw ConfigError(s.field("base"), e.what());
        }
    }
    s.read("name", p.name);
    s.read("step_length", p.step_length);
    s.read("step_duration", p.step_duration);
    s.read("n_steps", p.n_steps);
    s.read("double_support_ratio", p.double_support_ratio);
    s.read("step_width", p.step_width);
    s.read("heading_change", p.heading_change);
    s.read("standing", p.standing);
    s.read("standing_duration", p.standing_duration);
    s.finish();
}

void read_mpc(Section s, mpc::MpcConfig& c)
{
    s.read("horizon", c.horizon);
    s.read("sampling", c.sampling);
    s.read("friction", c.friction);
    s.read("cone_facets", c.cone_facets);
    s.read("max_normal_force_factor", c.max_normal_force_factor);
    s.read("max_contact_speed", c.max_contact_speed);
    s.read("momentum_scale", c.momentum_scale);
    s.read("contact_velocity_weight", c.contact_velocity_weight);
    s.finish();
}

void read_space(Section s, objective::SearchSpace& space)
{
    for (int i = 0; i < objective::kNumParams; ++i)
    {
        const std::string name = objective::kParamNames[static_cast<size_t>(i)];
        std::vector<double> pair;
        s.read(name, pair);
        if (!s.has(name))
            continue;
        if (pair.size() != 2)
            throw ConfigError(s.field(name), "expected [lower, upper]");
        space.lower(i) = pair[0];
        space.upper(i) = pair[1];
    }
    s.finish();
}

void emit_vec3(YAML::Emitter& e, const Eigen::Vector3d& v)
{
    e << YAML::Flow << YAML::BeginSeq << v.x() << v.y() << v.z() << YAML::EndSeq;
}

} // namespace

sim::ScheduleParams schedule_by_name(const std::string& name)
{
    if (name == "train")
        return sim::ScheduleParams::train();
    if (name == "validation")
        return sim::ScheduleParams::validation();
    throw std::invalid_argument("unknown schedule '" + name + "' (expected train or validation)");
}

opt::OptimizerConfig ExperimentConfig::optimizer(opt::Algorithm algorithm, std::uint64_t optimizer_seed) const
{
    opt::OptimizerConfig c;
    c.algorithm = algorithm;
    c.population = population;
    c.budget = budget;
    c.seed = optimizer_seed;
    c.ga = ga;
    c.cmaes = cmaes;
    c.de = de;
    c.es = es;
    return c;
}

void ExperimentConfig::validate() const
{
    auto check = [&] (bool ok, const char* path, const std::string& what) {
        if (!ok)
            throw ConfigError(path, what);
    };
    check(!algorithms.empty(), "algorithms", "at least one algorithm is required");
    check(runs >= 1, "runs", "must be at least 1");
    check(population >= 1, "population", "must be at least 1");
    check(budget >= population, "budget", "must be at least the population size");
    check(workers >= 0, "workers", "must be non-negative");
    check(!std::isnan(stop_at), "stop_at", "must be a number");
    check(!output.empty(), "output", "must not be empty");
    auto wrap = [&] (const char* path, auto&& fn) {
        try
        {
            fn();
        } catch (const std::invalid_argument& e)
        {
            throw ConfigError(path, e.what());
        }
    };
    wrap("objective_weights", [&] () { objective_spec.validate(); });
    wrap("search_space", [&] () { space.validate(); });
    wrap("plant", [&] () { rollout.plant.validate(); });
    wrap("mpc", [&] () { rollout.mpc.validate(); });
    check(rollout.control_dt > 0.0, "rollout.control_dt", "must be positive");
    check(rollout.com_recovery_time > 0.0, "rollout.com_recovery_time", "must be positive");
    for (opt::Algorithm a : algorithms)
    {
        const std::string name = opt::to_string(a);
        wrap(name.c_str(), [&] () { optimizer(a, seed).validate(); });
    }
}

ExperimentConfig parse_config(const std::string& yaml_text, ExperimentConfig c)
{
    YAML::Node root;
    try
    {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e)
    {
        throw ConfigError("<root>", std::string("YAML error: ") + e.what());
    }
    Section s(root, "");

    if (const YAML::Node algos = s.raw("algorithms"))
    {
        std::vector<std::string> names;
        if (algos.IsScalar())
            names.push_back(algos.as<std::string>());
        else if (algos.IsSequence())
            names = algos.as<std::vector<std::string>>();
        else
            throw ConfigError("algorithms", "expected a name or a list of names");
        c.algorithms.clear();
        for (size_t i = 0; i < names.size(); ++i)
        {
            try
            {
                c.algorithms.push_back(opt::parse_algorithm(names[i]));
            } catch (const std::invalid_argument& e)
            {
                throw ConfigError("algorithms[" + std::to_string(i) + "]", e.what());
            }
        }
    }
    if (s.has("objective"))
    {
        c.objective = read_enum(s, "objective", c.objective, objective::parse_objective);
        c.objective_spec = objective::ObjectiveSpec::of(c.objective);
    }
    {
        Section w = s.child("objective_weights");
        w.read("duration", c.objective_spec.duration);
        w.read("time_weight", c.objective_spec.time_weight);
        w.read("torque_weight", c.objective_spec.torque_weight);
        w.read("floor", c.objective_spec.floor);
        w.read("infeasible_torque", c.objective_spec.infeasible_torque);
        w.finish();
    }
    s.read("runs", c.runs);
    s.read("budget", c.budget);
    s.read("population", c.population);
    s.read("seed", c.seed);
    s.read("stop_at", c.stop_at);
    s.read("workers", c.workers);
    std::string output;
    s.read("output", output);
    if (!output.empty())
        c.output = output;

    read_space(s.child("search_space"), c.space);
    {
        Section g = s.child("ga");
        g.read("tournament", c.ga.tournament);
        g.read("crossover_probability", c.ga.crossover_probability);
        g.read("mutation_probability", c.ga.mutation_probability);
        g.read("elitism", c.ga.elitism);
        g.finish();
    }
    {
        Section g = s.child("cmaes");
        g.read("initial_variance", c.cmaes.initial_variance);
        g.read("resample_limit", c.cmaes.resample_limit);
        g.read("max_condition", c.cmaes.max_condition);
        g.finish();
    }
    {
        Section g = s.child("de");
        g.read("crossover_rate", c.de.crossover_rate);
        g.read("differential_weight", c.de.differential_weight);
        g.read("resample_limit", c.de.resample_limit);
        g.finish();
    }
    {
        Section g = s.child("es");
        g.read("offspring", c.es.offspring);
        g.read("parents", c.es.parents);
        g.read("recombination", c.es.recombination);
        g.read("initial_step", c.es.initial_step);
        g.read("resample_limit", c.es.resample_limit);
        g.finish();
    }
    {
        Section r = s.child("rollout");
        std::string model;
        r.read("model", model);
        if (!model.empty())
        {
            try
            {
                c.rollout.model = load_model(model);
            } catch (const std::exception& e)
            {
                throw ConfigError(r.field("model"), e.what());
            }
        }
        r.read("control_dt", c.rollout.control_dt);
        r.read("swing_height", c.rollout.swing_height);
        r.read("com_recovery_time", c.rollout.com_recovery_time);
        r.read("max_time", c.rollout.max_time);
        r.finish();
    }
    read_plant(s.child("plant"), c.rollout.plant);
    read_mpc(s.child("mpc"), c.rollout.mpc);
    read_schedule(s.raw("schedule"), "schedule", c.rollout.schedule);
    s.finish();
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("<file>", "cannot read " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string dump_config(const ExperimentConfig& c)
{
    YAML::Emitter e;
    e.SetDoublePrecision(17);
    e << YAML::BeginMap;
    e << YAML::Key << "algorithms" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (opt::Algorithm a : c.algorithms)
        e << opt::to_string(a);
    e << YAML::EndSeq;
    e << YAML::Key << "objective" << YAML::Value << objective::to_string(c.objective);
    e << YAML::Key << "objective_weights" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "duration" << YAML::Value << c.objective_spec.duration;
    e << YAML::Key << "time_weight" << YAML::Value << c.objective_spec.time_weight;
    e << YAML::Key << "torque_weight" << YAML::Value << c.objective_spec.torque_weight;
    e << YAML::Key << "floor" << YAML::Value << c.objective_spec.floor;
    e << YAML::Key << "infeasible_torque" << YAML::Value << c.objective_spec.infeasible_torque;
    e << YAML::EndMap;
    e << YAML::Key << "runs" << YAML::Value << c.runs;
    e << YAML::Key << "budget" << YAML::Value << c.budget;
    e << YAML::Key << "population" << YAML::Value << c.population;
    e << YAML::Key << "seed" << YAML::Value << c.seed;
    e << YAML::Key << "stop_at" << YAML::Value << c.stop_at;
    e << YAML::Key << "workers" << YAML::Value << c.workers;
    e << YAML::Key << "output" << YAML::Value << c.output.string();

    e << YAML::Key << "search_space" << YAML::Value << YAML::BeginMap;
    for (int i = 0; i < objective::kNumParams; ++i)
    {
        e << YAML::Key << objective::kParamNames[static_cast<size_t>(i)] << YAML::Value << YAML::Flow
          << YAML::BeginSeq << c.space.lower(i) << c.space.upper(i) << YAML::EndSeq;
    }
    e << YAML::EndMap;

    e << YAML::Key << "ga" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "tournament" << YAML::Value << c.ga.tournament;
    e << YAML::Key << "crossover_probability" << YAML::Value << c.ga.crossover_probability;
    e << YAML::Key << "mutation_probability" << YAML::Value << c.ga.mutation_probability;
    e << YAML::Key << "elitism" << YAML::Value << c.ga.elitism;
    e << YAML::EndMap;
    e << YAML::Key << "cmaes" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "initial_variance" << YAML::Value << c.cmaes.initial_variance;
    e << YAML::Key << "resample_limit" << YAML::Value << c.cmaes.resample_limit;
    e << YAML::Key << "max_condition" << YAML::Value << c.cmaes.max_condition;
    e << YAML::EndMap;
    e << YAML::Key << "de" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "crossover_rate" << YAML::Value << c.de.crossover_rate;
    e << YAML::Key << "differential_weight" << YAML::Value << c.de.differential_weight;
    e << YAML::Key << "resample_limit" << YAML::Value << c.de.resample_limit;
    e << YAML::EndMap;
    e << YAML::Key << "es" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "offspring" << YAML::Value << c.es.offspring;
    e << YAML::Key << "parents" << YAML::Value << c.es.parents;
    e << YAML::Key << "recombination" << YAML::Value << c.es.recombination;
    e << YAML::Key << "initial_step" << YAML::Value << c.es.initial_step;
    e << YAML::Key << "resample_limit" << YAML::Value << c.es.resample_limit;
    e << YAML::EndMap;

    const sim::RolloutConfig& r = c.rollout;
    e << YAML::Key << "rollout" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "control_dt" << YAML::Value << r.control_dt;
    e << YAML::Key << "swing_height" << YAML::Value << r.swing_height;
    e << YAML::Key << "com_recovery_time" << YAML::Value << r.com_recovery_time;
    e << YAML::Key << "max_time" << YAML::Value << r.max_time;
    e << YAML::EndMap;

    const sim::PlantParams& p = r.plant;
    e << YAML::Key << "plant" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "dt" << YAML::Value << p.dt;
    e << YAML::Key << "com_height" << YAML::Value << p.com_height;
    e << YAML::Key << "actuator_lag" << YAML::Value << p.actuator_lag;
    e << YAML::Key << "velocity_noise" << YAML::Value << p.velocity_noise;
    e << YAML::Key << "contact_jitter" << YAML::Value << p.contact_jitter;
    e << YAML::Key << "pushes" << YAML::Value << YAML::BeginSeq;
    for (const sim::Push& push : p.pushes)
    {
        e << YAML::Flow << YAML::BeginMap;
        e << YAML::Key << "time" << YAML::Value << push.time;
        e << YAML::Key << "force" << YAML::Value;
        emit_vec3(e, push.force);
        e << YAML::Key << "duration" << YAML::Value << push.duration;
        e << YAML::EndMap;
    }
    e << YAML::EndSeq;
    e << YAML::Key << "coupling_stiffness" << YAML::Value << p.coupling_stiffness;
    e << YAML::Key << "coupling_damping" << YAML::Value << p.coupling_damping;
    e << YAML::Key << "coupling_filter" << YAML::Value << p.coupling_filter;
    e << YAML::Key << "friction" << YAML::Value << p.friction;
    e << YAML::Key << "zmp_margin" << YAML::Value << p.zmp_margin;
    e << YAML::Key << "zmp_dwell" << YAML::Value << p.zmp_dwell;
    e << YAML::Key << "min_height_ratio" << YAML::Value << p.min_height_ratio;
    e << YAML::EndMap;

    const mpc::MpcConfig& m = r.mpc;
    e << YAML::Key << "mpc" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "horizon" << YAML::Value << m.horizon;
    e << YAML::Key << "sampling" << YAML::Value << m.sampling;
    e << YAML::Key << "friction" << YAML::Value << m.friction;
    e << YAML::Key << "cone_facets" << YAML::Value << m.cone_facets;
    e << YAML::Key << "max_normal_force_factor" << YAML::Value << m.max_normal_force_factor;
    e << YAML::Key << "max_contact_speed" << YAML::Value << m.max_contact_speed;
    e << YAML::Key << "momentum_scale" << YAML::Value << m.momentum_scale;
    e << YAML::Key << "contact_velocity_weight" << YAML::Value << m.contact_velocity_weight;
    e << YAML::EndMap;

    const sim::ScheduleParams& sp = r.schedule;
    e << YAML::Key << "schedule" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "name" << YAML::Value << sp.name;
    e << YAML::Key << "step_length" << YAML::Value << sp.step_length;
    e << YAML::Key << "step_duration" << YAML::Value << sp.step_duration;
    e << YAML::Key << "n_steps" << YAML::Value << sp.n_steps;
    e << YAML::Key << "double_support_ratio" << YAML::Value << sp.double_support_ratio;
    e << YAML::Key << "step_width" << YAML::Value << sp.step_width;
    e << YAML::Key << "heading_change" << YAML::Value << sp.heading_change;
    e << YAML::Key << "standing" << YAML::Value << sp.standing;
    e << YAML::Key << "standing_duration" << YAML::Value << sp.standing_duration;
    e << YAML::EndMap;
    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

std::uint64_t evaluation_seed(std::uint64_t master, int run, long eval)
{
    return derive_seed(master, static_cast<std::uint64_t>(run), static_cast<std::uint64_t>(eval), 0);
}

std::uint64_t optimizer_seed(std::uint64_t master, int run)
{
    return derive_seed(master, static_cast<std::uint64_t>(run), 0, 1);
}

int resolve_workers(int workers)
{
    if (workers > 0)
        return workers;
    return std::max(1, omp_get_num_procs());
}

} // namespace gaintune::harness
