#pragma once

// Experiment configuration: TOML file plus command-line overrides.

#include "attnflow/integrator.hpp"
#include "attnflow/renyi.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace attnflow
{
    /// Invalid configuration; the message names the offending field.
    class ConfigError : public std::invalid_argument
    {
      public:
        ConfigError(const std::string& field, const std::string& what)
            : std::invalid_argument(field + ": " + what)
            , field_(field)
        {
        }

        const std::string& field() const noexcept
        {
            return field_;
        }

      private:
        std::string field_;
    };

    enum class Analysis
    {
        Renyi,
        Clusters,
        Collapse,
        Rates,
        Metastability,
        FrozenConvergence
    };

    std::string to_string(Analysis analysis);
    Analysis analysis_from_string(const std::string& name);

    struct ExperimentConfig
    {
        std::string name = "experiment";
        int n = 0;
        int d = 0;
        double beta = 1.0;
        std::vector<std::uint64_t> seeds;
        DynamicsKind kind = DynamicsKind::Causal;
        std::string Q = "identity";
        std::string K = "identity";
        std::string V = "identity";
        bool compensated_sum = false;
        std::vector<FrozenCenter> frozen;
        IntegratorConfig integrator;
        std::vector<Analysis> analyses;

        std::optional<double> delta;
        Metric metric = Metric::Geodesic;
        std::optional<double> radius;  // defaults to 3 beta^{-1/2}
        std::optional<double> c;
        std::optional<double> epsilon;
        std::string rate_target = "L";  // "L" or "Lprime"
        std::optional<std::pair<double, double>> rate_window;
        double stop_velocity = 1e-10;   // frozen_convergence stopping tolerance

        std::string output_dir = "out";

        bool has(Analysis a) const;
        double cluster_radius() const;

        /// Throws ConfigError for the first missing or inconsistent field.
        void validate() const;

        /// Parses matrices and assembles the dynamics parameters.
        SystemParams system_params() const;
    };

    ExperimentConfig parse_config(const std::string& toml_text, const std::string& source = "config");
    ExperimentConfig load_config(const std::string& path);

    struct ConfigOverrides
    {
        std::optional<double> beta;
        std::optional<int> n;
        std::optional<std::uint64_t> seed;
        std::optional<double> t_end;
        std::optional<std::string> output_dir;
    };

    void apply_overrides(ExperimentConfig& config, const ConfigOverrides& overrides);
}
