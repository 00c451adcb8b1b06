#include "attnflow/experiment.hpp"

#include "attnflow/metrics.hpp"
#include "attnflow/parallel.hpp"
#include "attnflow/spectral.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <limits>
#include <numbers>
#include <sstream>

#ifndef ATTNFLOW_VERSION
#define ATTNFLOW_VERSION "0.0.0"
#endif

namespace attnflow
{
    std::string software_version()
    {
        return ATTNFLOW_VERSION;
    }

    double quantile(std::vector<double> values, double q)
    {
        if (values.empty())
        {
            throw std::invalid_argument("quantile of an empty sample");
        }
        if (!(q >= 0.0 && q <= 1.0))
        {
            throw std::invalid_argument("quantile level must lie in [0, 1]");
        }
        std::sort(values.begin(), values.end());
        const double pos = q * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return values[lo] + frac * (values[hi] - values[lo]);
    }

    ParticleState initial_state(const ExperimentConfig& config, std::uint64_t seed)
    {
        const MatrixXd points = sample_uniform_points(seed, config.d, config.n);
        if (is_planar(config.kind))
        {
            return ParticleState::from_angles(angles_of(points));
        }
        return ParticleState::from_points(points);
    }

    namespace
    {
        double circle_distance(double a, double b)
        {
            const double r = std::remainder(a - b, 2.0 * std::numbers::pi);
            return std::abs(r);
        }

        MatrixXd columns(const MatrixXd& points, const std::vector<Eigen::Index>& idx)
        {
            MatrixXd out(points.rows(), static_cast<Eigen::Index>(idx.size()));
            for (std::size_t i = 0; i < idx.size(); ++i)
            {
                out.col(static_cast<Eigen::Index>(i)) = points.col(idx[i]);
            }
            return out;
        }

        void write_seed_files(const std::string& dir, const Trajectory& traj, const SeedOutcome& outcome)
        {
            std::ostringstream csv;
            write_trajectory_csv(csv, traj);
            write_text_file(dir + "/trajectory.csv", csv.str());
            write_text_file(dir + "/trajectory.json", trajectory_sidecar(traj).dump(2) + "\n");
            for (const auto& [name, value] : outcome.analyses.items())
            {
                write_text_file(dir + "/" + name + ".json", value.dump(2) + "\n");
            }
            for (const auto& [name, series] : outcome.series)
            {
                std::ostringstream s;
                write_series_csv(s, series);
                write_text_file(dir + "/" + name + ".csv", s.str());
            }
        }
    }

    SeedOutcome run_seed(const ExperimentConfig& config, const SystemParams& params, std::uint64_t seed,
                         const RunOptions& options)
    {
        SeedOutcome out;
        out.seed = seed;
        const ParticleState init = initial_state(config, seed);

        Trajectory traj;
        try
        {
            if (config.has(Analysis::FrozenConvergence))
            {
                traj = integrate_until(params, init, config.integrator, velocity_below(params, config.stop_velocity), seed);
            }
            else
            {
                traj = integrate(params, init, config.integrator, seed);
            }
        }
        catch (const NumericalError& e)
        {
            throw NumericalError("seed " + std::to_string(seed) + ": " + e.what(), e.time());
        }

        const MatrixXd& x0 = traj.initial().points;
        const double radius = config.cluster_radius();

        if (config.has(Analysis::Collapse))
        {
            const VectorXd first = x0.col(0);
            Series s;
            for (const auto& snap : traj.snapshots)
            {
                s.emplace_back(snap.time, collapse_diagnostic(snap, first));
            }
            out.scalars["collapse_final"] = s.back().second;
            out.analyses["collapse"] = {{"target", "first token at t = 0"}, {"final", s.back().second}};
            out.series["collapse"] = std::move(s);
        }
        if (config.has(Analysis::Clusters))
        {
            Series s;
            for (const auto& snap : traj.snapshots)
            {
                s.emplace_back(snap.time, static_cast<double>(detect_clusters(snap, radius).count()));
            }
            const ClusterReport final_report = detect_clusters(traj.final(), radius);
            out.analyses["clusters"] = clusters_to_json(final_report);
            out.scalars["cluster_count_final"] = static_cast<double>(final_report.count());
            out.series["cluster_count"] = std::move(s);
        }
        if (config.has(Analysis::Renyi) || config.has(Analysis::Metastability))
        {
            RenyiReport report = renyi_report(x0, *config.delta, config.metric);
            if (config.c && config.epsilon)
            {
                attach_horizons(report, *config.c, *config.epsilon, config.beta);
            }
            out.analyses["renyi"] = renyi_to_json(report);
            out.scalars["renyi_count"] = static_cast<double>(report.renyi_indices.size());
            out.scalars["strong_count"] = static_cast<double>(report.strong_indices.size());
            Series renyi_series;
            Series strong_series;
            for (const auto& snap : traj.snapshots)
            {
                renyi_series.emplace_back(snap.time,
                                          consumed_fraction(snap, columns(snap.points, report.renyi_indices), radius));
                strong_series.emplace_back(
                    snap.time, consumed_fraction(snap, columns(snap.points, report.strong_indices), radius));
            }
            out.series["consumed_renyi"] = std::move(renyi_series);
            out.series["consumed_strong"] = std::move(strong_series);

            if (config.has(Analysis::Metastability))
            {
                const MetastabilityResult meta = verify_metastability(traj, report, *config.c, *config.epsilon,
                                                                      config.beta);
                out.analyses["metastability"] = metastability_to_json(meta);
                out.scalars["metastability_violations"] = meta.violations();
            }
        }
        if (config.has(Analysis::Rates))
        {
            const SpectralClassification cls = classify_value_matrix(params.V);
            const MatrixXd& target = config.rate_target == "L" ? cls.L_basis : cls.Lprime_basis;
            json j = {{"target", config.rate_target}, {"window", {config.rate_window->first, config.rate_window->second}}};
            try
            {
                const RateFit fit = fit_convergence_rate(traj, target, config.rate_window->first,
                                                         config.rate_window->second);
                j["type"] = to_string(fit.type);
                j["rate"] = fit.rate;
                j["r_squared"] = fit.r_squared;
                j["exponential_rate"] = fit.exponential_rate;
                j["exponential_r_squared"] = fit.exponential_r_squared;
                j["linear_coefficient"] = fit.linear_coefficient;
                j["linear_r_squared"] = fit.linear_r_squared;
                out.scalars["rate"] = fit.rate;
            }
            catch (const std::domain_error& e)
            {
                j["error"] = e.what();
            }
            out.analyses["rates"] = j;
        }
        if (config.has(Analysis::FrozenConvergence))
        {
            const ParticleState& last = traj.final();
            const double capture = *config.epsilon / std::sqrt(config.beta);
            double worst = 0.0;
            long captured = 0;
            for (Eigen::Index k = 0; k < last.size(); ++k)
            {
                double best = std::numeric_limits<double>::infinity();
                for (const auto& f : config.frozen)
                {
                    best = std::min(best, circle_distance(last.angles(k), f.angle));
                }
                worst = std::max(worst, best);
                captured += best <= capture ? 1 : 0;
            }
            const double fraction = static_cast<double>(captured) / static_cast<double>(last.size());
            out.analyses["frozen_convergence"] = {
                {"terminated", traj.termination == Termination::StopPredicate},
                {"t_final", last.time},
                {"max_velocity", max_velocity_norm(last, params)},
                {"capture_radius", capture},
                {"max_distance_to_center", worst},
                {"captured_fraction", fraction}};
            out.scalars["frozen_captured_fraction"] = fraction;
            out.scalars["frozen_max_distance"] = worst;
        }

        if (options.write_files)
        {
            write_seed_files(config.output_dir + "/seed_" + std::to_string(seed), traj, out);
        }
        if (options.keep_trajectories)
        {
            out.trajectory = std::move(traj);
        }
        return out;
    }

    json aggregate_outcomes(const std::vector<SeedOutcome>& outcomes)
    {
        json agg = {{"seeds", json::array()}, {"series", json::object()}, {"scalars", json::object()}};
        for (const auto& o : outcomes)
        {
            agg["seeds"].push_back(o.seed);
        }
        std::map<std::string, std::vector<const Series*>> series;
        std::map<std::string, std::vector<double>> scalars;
        for (const auto& o : outcomes)
        {
            for (const auto& [name, s] : o.series)
            {
                series[name].push_back(&s);
            }
            for (const auto& [name, v] : o.scalars)
            {
                scalars[name].push_back(v);
            }
        }
        for (const auto& [name, list] : series)
        {
            std::size_t len = 0;
            const Series* longest = nullptr;
            for (const Series* s : list)
            {
                if (s->size() > len)
                {
                    len = s->size();
                    longest = s;
                }
            }
            json t = json::array();
            json mean = json::array();
            json q10 = json::array();
            json q90 = json::array();
            json count = json::array();
            for (std::size_t i = 0; i < len; ++i)
            {
                std::vector<double> v;
                for (const Series* s : list)
                {
                    if (i < s->size())
                    {
                        v.push_back((*s)[i].second);
                    }
                }
                double sum = 0.0;
                for (const double x : v)
                {
                    sum += x;
                }
                t.push_back((*longest)[i].first);
                mean.push_back(sum / static_cast<double>(v.size()));
                q10.push_back(quantile(v, 0.1));
                q90.push_back(quantile(v, 0.9));
                count.push_back(v.size());
            }
            agg["series"][name] = {{"t", t}, {"mean", mean}, {"q10", q10}, {"q90", q90}, {"count", count}};
        }
        for (const auto& [name, v] : scalars)
        {
            double sum = 0.0;
            for (const double x : v)
            {
                sum += x;
            }
            agg["scalars"][name] = {{"mean", sum / static_cast<double>(v.size())},
                                    {"q10", quantile(v, 0.1)},
                                    {"q90", quantile(v, 0.9)},
                                    {"min", *std::min_element(v.begin(), v.end())},
                                    {"max", *std::max_element(v.begin(), v.end())},
                                    {"values", v}};
        }
        return agg;
    }

    json experiment_config_to_json(const ExperimentConfig& config)
    {
        json analyses = json::array();
        for (const Analysis a : config.analyses)
        {
            analyses.push_back(to_string(a));
        }
        json frozen = json::array();
        for (const auto& f : config.frozen)
        {
            frozen.push_back({{"angle", f.angle}, {"weight", f.weight}});
        }
        json j = {{"name", config.name},
                  {"n", config.n},
                  {"d", config.d},
                  {"beta", config.beta},
                  {"seeds", config.seeds},
                  {"kind", to_string(config.kind)},
                  {"matrices", {{"Q", config.Q}, {"K", config.K}, {"V", config.V}}},
                  {"compensated_sum", config.compensated_sum},
                  {"frozen", frozen},
                  {"integrator", config_to_json(config.integrator)},
                  {"analyses", analyses},
                  {"metric", to_string(config.metric)},
                  {"radius", config.cluster_radius()},
                  {"rate_target", config.rate_target},
                  {"stop_velocity", config.stop_velocity},
                  {"output_dir", config.output_dir}};
        j["delta"] = config.delta ? json(*config.delta) : json(nullptr);
        j["c"] = config.c ? json(*config.c) : json(nullptr);
        j["epsilon"] = config.epsilon ? json(*config.epsilon) : json(nullptr);
        j["rate_window"] = config.rate_window ? json({config.rate_window->first, config.rate_window->second})
                                              : json(nullptr);
        return j;
    }

    json make_manifest(const json& config, const std::vector<std::uint64_t>& seeds, double elapsed_seconds)
    {
        const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        return {{"config", config},
                {"seeds", seeds},
                {"software", {{"name", "attn-flow"}, {"version", software_version()}}},
                {"wall_clock", {{"finished_utc", stamp}, {"elapsed_seconds", elapsed_seconds}}}};
    }

    ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options)
    {
        config.validate();
        const auto start = std::chrono::steady_clock::now();
        const SystemParams params = config.system_params();

        std::vector<std::uint64_t> seeds = config.seeds;
        std::sort(seeds.begin(), seeds.end());
        ExperimentResult result;
        result.seeds.resize(seeds.size());
        parallel_for(seeds.size(), options.jobs,
                     [&](std::size_t i) { result.seeds[i] = run_seed(config, params, seeds[i], options); });
        result.aggregate = aggregate_outcomes(result.seeds);
        if (options.write_files)
        {
            write_text_file(config.output_dir + "/aggregate.json", result.aggregate.dump(2) + "\n");
            const double elapsed =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            write_text_file(config.output_dir + "/manifest.json",
                            make_manifest(experiment_config_to_json(config), seeds, elapsed).dump(2) + "\n");
        }
        return result;
    }
}
