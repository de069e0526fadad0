#include <gaintune/math/kinematics.h>

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <yaml-cpp/yaml.h>

namespace gaintune {
namespace {

Eigen::Vector3d read_vec3(const YAML::Node& node, const std::string& what)
{
    if (!node || !node.IsSequence() || node.size() != 3)
    {
        throw std::runtime_error("model: '" + what + "' must be a 3-element list");
    }
    return {node[0].as<double>(), node[1].as<double>(), node[2].as<double>()};
}

template <typename T>
T required(const YAML::Node& node, const std::string& key, const std::string& where)
{
    if (!node[key])
    {
        throw std::runtime_error("model: missing '" + where + "." + key + "'");
    }
    return node[key].as<T>();
}

} // namespace

RobotModel parse_model(const std::string& yaml_text)
{
    YAML::Node root;
    try
    {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e)
    {
        throw std::runtime_error(std::string("model: YAML error: ") + e.what());
    }

    RobotModel model;
    try
    {
        const double total = required<double>(root, "total_mass", "");
        const YAML::Node base = root["base"];
        if (!base)
        {
            throw std::runtime_error("model: missing 'base'");
        }
        model.base_mass = total * required<double>(base, "mass_fraction", "base");
        model.base_com = read_vec3(base["com"], "base.com");

        if (const YAML::Node foot = root["foot"])
        {
            model.foot_length = required<double>(foot, "length", "foot");
            model.foot_width = required<double>(foot, "width", "foot");
        }

        std::map<std::string, int> index;
        std::vector<double> rest;
        for (const auto& jn : root["joints"])
        {
            JointSpec j;
            j.name = required<std::string>(jn, "name", "joints[]");
            const std::string parent = jn["parent"] ? jn["parent"].as<std::string>() : "base";
            if (parent == "base")
            {
                j.parent = -1;
            } else if (auto it = index.find(parent); it != index.end())
            {
                j.parent = it->second;
            } else
            {
                throw std::runtime_error("model: joint '" + j.name + "' has unknown parent '" + parent
                                         + "' (parents must be listed first)");
            }
            j.origin = read_vec3(jn["origin"], j.name + ".origin");
            j.axis = read_vec3(jn["axis"], j.name + ".axis");
            j.mass = total * (jn["mass_fraction"] ? jn["mass_fraction"].as<double>() : 0.0);
            j.com = jn["com"] ? read_vec3(jn["com"], j.name + ".com") : Eigen::Vector3d::Zero();
            if (const YAML::Node lim = jn["limits"])
            {
                if (!lim.IsSequence() || lim.size() != 2)
                {
                    throw std::runtime_error("model: '" + j.name + ".limits' must be [lower, upper]");
                }
                j.lower = lim[0].as<double>();
                j.upper = lim[1].as<double>();
            }
            rest.push_back(jn["rest"] ? jn["rest"].as<double>() : 0.0);
            index[j.name] = model.dofs();
            model.joints.push_back(j);
        }
        model.rest_posture = Eigen::Map<Eigen::VectorXd>(rest.data(), static_cast<Eigen::Index>(rest.size()));

        for (const auto& fn : root["frames"])
        {
            FrameSpec f;
            f.name = required<std::string>(fn, "name", "frames[]");
            const std::string link = fn["link"] ? fn["link"].as<std::string>() : "base";
            if (link == "base")
            {
                f.link = -1;
            } else if (auto it = index.find(link); it != index.end())
            {
                f.link = it->second;
            } else
            {
                throw std::runtime_error("model: frame '" + f.name + "' attached to unknown link '" + link + "'");
            }
            f.offset = fn["offset"] ? read_vec3(fn["offset"], f.name + ".offset") : Eigen::Vector3d::Zero();
            model.frames.push_back(f);
        }
    } catch (const YAML::Exception& e)
    {
        throw std::runtime_error(std::string("model: ") + e.what());
    }

    try
    {
        model.validate();
    } catch (const std::invalid_argument& e)
    {
        throw std::runtime_error(e.what());
    }
    return model;
}

RobotModel load_model(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw std::runtime_error("model: cannot open '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_model(buffer.str());
}

} // namespace gaintune
