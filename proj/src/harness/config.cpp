#include "attnflow/config.hpp"

#include "attnflow/io.hpp"
#include "attnflow/matrix_spec.hpp"

#include <toml.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <type_traits>

namespace attnflow
{
    std::string to_string(Analysis analysis)
    {
        switch (analysis)
        {
            case Analysis::Renyi:
                return "renyi";
            case Analysis::Clusters:
                return "clusters";
            case Analysis::Collapse:
                return "collapse";
            case Analysis::Rates:
                return "rates";
            case Analysis::Metastability:
                return "metastability";
            case Analysis::FrozenConvergence:
                return "frozen_convergence";
        }
        return "unknown";
    }

    Analysis analysis_from_string(const std::string& name)
    {
        for (const Analysis a : {Analysis::Renyi, Analysis::Clusters, Analysis::Collapse, Analysis::Rates,
                                 Analysis::Metastability, Analysis::FrozenConvergence})
        {
            if (to_string(a) == name)
            {
                return a;
            }
        }
        throw std::invalid_argument("unknown analysis '" + name
                                    + "' (expected renyi|clusters|collapse|rates|metastability|frozen_convergence)");
    }

    bool ExperimentConfig::has(Analysis a) const
    {
        return std::find(analyses.begin(), analyses.end(), a) != analyses.end();
    }

    double ExperimentConfig::cluster_radius() const
    {
        return radius.value_or(default_radius(beta));
    }

    SystemParams ExperimentConfig::system_params() const
    {
        SystemParams p;
        try
        {
            p.Q = parse_matrix_spec(Q, d);
        }
        catch (const ParseError& e)
        {
            throw ConfigError("matrices.Q", e.what());
        }
        try
        {
            p.K = parse_matrix_spec(K, d);
        }
        catch (const ParseError& e)
        {
            throw ConfigError("matrices.K", e.what());
        }
        try
        {
            p.V = parse_matrix_spec(V, d);
        }
        catch (const ParseError& e)
        {
            throw ConfigError("matrices.V", e.what());
        }
        p.beta = beta;
        p.kind = kind;
        p.frozen = frozen;
        p.compensated_sum = compensated_sum;
        return p;
    }

    void ExperimentConfig::validate() const
    {
        if (name.empty())
        {
            throw ConfigError("name", "must not be empty");
        }
        if (n < 1)
        {
            throw ConfigError("n", "must be >= 1");
        }
        if (d < 2)
        {
            throw ConfigError("d", "must be >= 2");
        }
        if (!(beta > 0.0) || !std::isfinite(beta))
        {
            throw ConfigError("beta", "must be positive");
        }
        if (seeds.empty())
        {
            throw ConfigError("seeds", "list must not be empty");
        }
        if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
        {
            throw ConfigError("seeds", "contains duplicates");
        }
        if (output_dir.empty())
        {
            throw ConfigError("output_dir", "must not be empty");
        }
        try
        {
            integrator.validate();
        }
        catch (const std::invalid_argument& e)
        {
            throw ConfigError("integrator", e.what());
        }
        const SystemParams p = system_params();
        try
        {
            p.validate();
        }
        catch (const std::invalid_argument& e)
        {
            throw ConfigError(kind == DynamicsKind::FrozenCenters ? "frozen" : "kind", e.what());
        }
        if (radius && !(*radius > 0.0))
        {
            throw ConfigError("radius", "must be positive");
        }

        const bool identity_2d = d == 2 && p.Q.isIdentity(0.0) && p.K.isIdentity(0.0) && p.V.isIdentity(0.0)
                                 && (kind == DynamicsKind::Causal || kind == DynamicsKind::Causal2d);
        for (const Analysis a : analyses)
        {
            const std::string field = "analyses." + to_string(a);
            switch (a)
            {
                case Analysis::Renyi:
                    if (!delta || !(*delta > 0.0))
                    {
                        throw ConfigError(field, "requires a positive 'delta'");
                    }
                    break;
                case Analysis::Clusters:
                case Analysis::Collapse:
                    break;
                case Analysis::Rates:
                    if (n != 1)
                    {
                        throw ConfigError(field, "requires a single token (n = 1)");
                    }
                    if (!rate_window || !(rate_window->first > 0.0) || !(rate_window->second > rate_window->first))
                    {
                        throw ConfigError(field, "requires 'rate_window' = [t0, t1] with 0 < t0 < t1");
                    }
                    if (rate_target != "L" && rate_target != "Lprime")
                    {
                        throw ConfigError("rate_target", "must be \"L\" or \"Lprime\"");
                    }
                    break;
                case Analysis::Metastability:
                    if (!delta || !(*delta > 0.0))
                    {
                        throw ConfigError(field, "requires a positive 'delta'");
                    }
                    if (!c || !epsilon || !(*c > 0.0) || !(*epsilon > 0.0))
                    {
                        throw ConfigError(field, "requires positive 'c' and 'epsilon'");
                    }
                    if (!identity_2d)
                    {
                        throw ConfigError(field, "requires causal dynamics with d = 2 and Q = K = V = identity");
                    }
                    break;
                case Analysis::FrozenConvergence:
                    if (kind != DynamicsKind::FrozenCenters)
                    {
                        throw ConfigError(field, "requires kind = \"frozen\"");
                    }
                    if (!epsilon || !(*epsilon > 0.0))
                    {
                        throw ConfigError(field, "requires a positive 'epsilon'");
                    }
                    if (!(stop_velocity > 0.0))
                    {
                        throw ConfigError("stop_velocity", "must be positive");
                    }
                    break;
            }
        }
    }

    namespace
    {
        template <typename T>
        T get_or(const toml::table& t, const std::string& key, const std::string& prefix, T fallback)
        {
            const toml::node* node = t.get(key);
            if (node == nullptr)
            {
                return fallback;
            }
            if constexpr (std::is_same_v<T, double>)
            {
                if (auto v = node->value<double>())
                {
                    return *v;
                }
            }
            else if constexpr (std::is_same_v<T, std::string>)
            {
                if (auto v = node->value<std::string>())
                {
                    return *v;
                }
            }
            else if constexpr (std::is_same_v<T, bool>)
            {
                if (auto v = node->value<bool>())
                {
                    return *v;
                }
            }
            else
            {
                if (auto v = node->value<std::int64_t>())
                {
                    return static_cast<T>(*v);
                }
            }
            throw ConfigError(prefix + key, "has the wrong type");
        }

        std::optional<double> get_opt(const toml::table& t, const std::string& key)
        {
            if (t.get(key) == nullptr)
            {
                return std::nullopt;
            }
            return get_or<double>(t, key, "", 0.0);
        }

        std::vector<double> number_list(const toml::table& t, const std::string& key)
        {
            std::vector<double> out;
            const toml::array* arr = t.get_as<toml::array>(key);
            if (arr == nullptr)
            {
                if (t.get(key) != nullptr)
                {
                    throw ConfigError(key, "must be a list of numbers");
                }
                return out;
            }
            for (const auto& el : *arr)
            {
                const auto v = el.value<double>();
                if (!v)
                {
                    throw ConfigError(key, "must be a list of numbers");
                }
                out.push_back(*v);
            }
            return out;
        }

        void reject_unknown(const toml::table& t, const std::set<std::string>& known, const std::string& prefix)
        {
            for (const auto& [key, _] : t)
            {
                if (!known.contains(std::string(key.str())))
                {
                    throw ConfigError(prefix + std::string(key.str()), "unknown key");
                }
            }
        }
    }

    ExperimentConfig parse_config(const std::string& toml_text, const std::string& source)
    {
        toml::table root;
        try
        {
            root = toml::parse(toml_text, source);
        }
        catch (const toml::parse_error& e)
        {
            std::ostringstream msg;
            msg << e.description() << " (line " << e.source().begin.line << ")";
            throw ConfigError(source, msg.str());
        }
        reject_unknown(root,
                       {"name", "n", "d", "beta", "seeds", "kind", "compensated_sum", "analyses", "delta", "metric",
                        "radius", "c", "epsilon", "rate_target", "rate_window", "stop_velocity", "output_dir",
                        "matrices", "integrator", "frozen"},
                       "");

        ExperimentConfig cfg;
        cfg.name = get_or<std::string>(root, "name", "", cfg.name);
        cfg.n = get_or<int>(root, "n", "", 0);
        cfg.d = get_or<int>(root, "d", "", 0);
        cfg.beta = get_or<double>(root, "beta", "", cfg.beta);
        if (const toml::array* seeds = root.get_as<toml::array>("seeds"))
        {
            for (const auto& el : *seeds)
            {
                const auto v = el.value<std::int64_t>();
                if (!v || *v < 0)
                {
                    throw ConfigError("seeds", "must be a list of non-negative integers");
                }
                cfg.seeds.push_back(static_cast<std::uint64_t>(*v));
            }
        }
        else if (root.get("seeds") != nullptr)
        {
            throw ConfigError("seeds", "must be a list of non-negative integers");
        }
        try
        {
            cfg.kind = dynamics_kind_from_string(get_or<std::string>(root, "kind", "", "causal"));
        }
        catch (const std::invalid_argument& e)
        {
            throw ConfigError("kind", e.what());
        }
        cfg.compensated_sum = get_or<bool>(root, "compensated_sum", "", false);
        if (const toml::array* an = root.get_as<toml::array>("analyses"))
        {
            for (const auto& el : *an)
            {
                const auto v = el.value<std::string>();
                if (!v)
                {
                    throw ConfigError("analyses", "must be a list of strings");
                }
                try
                {
                    cfg.analyses.push_back(analysis_from_string(*v));
                }
                catch (const std::invalid_argument& e)
                {
                    throw ConfigError("analyses", e.what());
                }
            }
        }
        cfg.delta = get_opt(root, "delta");
        try
        {
            cfg.metric = metric_from_string(get_or<std::string>(root, "metric", "", "geodesic"));
        }
        catch (const std::invalid_argument& e)
        {
            throw ConfigError("metric", e.what());
        }
        cfg.radius = get_opt(root, "radius");
        cfg.c = get_opt(root, "c");
        cfg.epsilon = get_opt(root, "epsilon");
        cfg.rate_target = get_or<std::string>(root, "rate_target", "", cfg.rate_target);
        if (root.get("rate_window") != nullptr)
        {
            const auto w = number_list(root, "rate_window");
            if (w.size() != 2)
            {
                throw ConfigError("rate_window", "must be [t0, t1]");
            }
            cfg.rate_window = std::make_pair(w[0], w[1]);
        }
        cfg.stop_velocity = get_or<double>(root, "stop_velocity", "", cfg.stop_velocity);
        cfg.output_dir = get_or<std::string>(root, "output_dir", "", cfg.output_dir);

        if (const toml::table* m = root.get_as<toml::table>("matrices"))
        {
            reject_unknown(*m, {"Q", "K", "V"}, "matrices.");
            cfg.Q = get_or<std::string>(*m, "Q", "matrices.", cfg.Q);
            cfg.K = get_or<std::string>(*m, "K", "matrices.", cfg.K);
            cfg.V = get_or<std::string>(*m, "V", "matrices.", cfg.V);
        }
        if (const toml::table* in = root.get_as<toml::table>("integrator"))
        {
            reject_unknown(*in, {"method", "dt", "t_end", "record_every", "rtol", "atol", "renormalize_every_step"},
                           "integrator.");
            try
            {
                cfg.integrator.method =
                    method_from_string(get_or<std::string>(*in, "method", "integrator.", "rk4"));
            }
            catch (const std::invalid_argument& e)
            {
                throw ConfigError("integrator.method", e.what());
            }
            cfg.integrator.dt = get_or<double>(*in, "dt", "integrator.", cfg.integrator.dt);
            cfg.integrator.t_end = get_or<double>(*in, "t_end", "integrator.", cfg.integrator.t_end);
            cfg.integrator.record_every = get_or<int>(*in, "record_every", "integrator.", cfg.integrator.record_every);
            cfg.integrator.rtol = get_or<double>(*in, "rtol", "integrator.", cfg.integrator.rtol);
            cfg.integrator.atol = get_or<double>(*in, "atol", "integrator.", cfg.integrator.atol);
            cfg.integrator.renormalize_every_step =
                get_or<bool>(*in, "renormalize_every_step", "integrator.", cfg.integrator.renormalize_every_step);
        }
        if (const toml::table* fr = root.get_as<toml::table>("frozen"))
        {
            reject_unknown(*fr, {"angles", "weights"}, "frozen.");
            const auto angles = number_list(*fr, "angles");
            auto weights = number_list(*fr, "weights");
            if (weights.empty())
            {
                weights.assign(angles.size(), 1.0);
            }
            if (weights.size() != angles.size())
            {
                throw ConfigError("frozen.weights", "must have one entry per angle");
            }
            for (std::size_t i = 0; i < angles.size(); ++i)
            {
                cfg.frozen.push_back({angles[i], weights[i]});
            }
        }
        return cfg;
    }

    ExperimentConfig load_config(const std::string& path)
    {
        std::string text;
        try
        {
            text = read_text_file(path);
        }
        catch (const ParseError& e)
        {
            throw ConfigError("config", e.what());
        }
        return parse_config(text, path);
    }

    void apply_overrides(ExperimentConfig& config, const ConfigOverrides& o)
    {
        if (o.beta)
        {
            config.beta = *o.beta;
        }
        if (o.n)
        {
            config.n = *o.n;
        }
        if (o.seed)
        {
            config.seeds = {*o.seed};
        }
        if (o.t_end)
        {
            config.integrator.t_end = *o.t_end;
        }
        if (o.output_dir)
        {
            config.output_dir = *o.output_dir;
        }
    }
}
