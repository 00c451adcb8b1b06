#pragma once

// Runs an experiment config over its seeds and writes per-seed outputs, the
// cross-seed aggregate and the manifest.

#include "attnflow/config.hpp"
#include "attnflow/io.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace attnflow
{
    using Series = std::vector<std::pair<double, double>>;

    struct SeedOutcome
    {
        std::uint64_t seed = 0;
        json analyses = json::object();
        std::map<std::string, Series> series;
        std::map<std::string, double> scalars;
        std::optional<Trajectory> trajectory;  // kept only when requested
    };

    struct ExperimentResult
    {
        std::vector<SeedOutcome> seeds;  // sorted by seed
        json aggregate;
    };

    struct RunOptions
    {
        int jobs = 1;
        bool write_files = true;
        bool keep_trajectories = false;
    };

    /// Type-7 (linear interpolation) sample quantile; q in [0, 1].
    double quantile(std::vector<double> values, double q);

    /// Uniform initial state for `seed` (planar kinds carry angles).
    ParticleState initial_state(const ExperimentConfig& config, std::uint64_t seed);

    /// Integrates one seed and evaluates the configured analyses. Throws
    /// NumericalError with the seed in its message on blow-up.
    SeedOutcome run_seed(const ExperimentConfig& config, const SystemParams& params, std::uint64_t seed,
                         const RunOptions& options);

    /// Mean and 0.1 / 0.9 quantiles per snapshot index for every series, and
    /// per scalar, over seeds sorted by seed.
    json aggregate_outcomes(const std::vector<SeedOutcome>& outcomes);

    /// Validates, runs all seeds on a worker pool and (optionally) writes
    /// output_dir/{seed_<s>/..., aggregate.json, manifest.json}.
    ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options);

    json experiment_config_to_json(const ExperimentConfig& config);

    /// Manifest JSON: config, seeds, software version, wall-clock.
    json make_manifest(const json& config, const std::vector<std::uint64_t>& seeds, double elapsed_seconds);

    std::string software_version();
}
