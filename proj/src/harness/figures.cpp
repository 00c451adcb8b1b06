#include "attnflow/figures.hpp"

#include "attnflow/atlas.hpp"
#include "attnflow/experiment.hpp"
#include "attnflow/matrix_spec.hpp"
#include "attnflow/svg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

namespace attnflow
{
    namespace
    {
        constexpr double kEvolutionBeta = 64.0;
        constexpr int kEvolutionTokens = 200;
        constexpr std::array<double, 4> kEvolutionTimes{0.0, 75.0, 150.0, 500.0};

        const ParticleState& snapshot_at(const Trajectory& traj, double t)
        {
            const auto it = std::min_element(traj.snapshots.begin(), traj.snapshots.end(),
                                             [t](const ParticleState& a, const ParticleState& b) {
                                                 return std::abs(a.time - t) < std::abs(b.time - t);
                                             });
            return *it;
        }

        std::string trajectory_csv(const Trajectory& traj)
        {
            std::ostringstream out;
            write_trajectory_csv(out, traj);
            return out.str();
        }

        void write_outputs(const std::string& dir, const json& config, const json& summary,
                           const std::vector<std::uint64_t>& seeds, double elapsed)
        {
            write_text_file(dir + "/summary.json", summary.dump(2) + "\n");
            write_text_file(dir + "/manifest.json", make_manifest(config, seeds, elapsed).dump(2) + "\n");
        }

        // Orthographic view of the unit sphere.
        struct Camera
        {
            Eigen::Vector3d right;
            Eigen::Vector3d up;
            Eigen::Vector3d forward;

            Camera(double azimuth, double elevation)
            {
                forward << std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
                    std::sin(elevation);
                right << -std::sin(azimuth), std::cos(azimuth), 0.0;
                up = forward.cross(right);
            }
        };

        std::string render_sphere(const Trajectory& traj, const std::string& title)
        {
            constexpr double size = 460.0;
            constexpr double radius = 190.0;
            const Point2 center{size / 2.0, size / 2.0 + 10.0};
            const Camera cam(0.6, 0.35);
            auto project = [&](const VectorXd& x) {
                const Eigen::Vector3d p = x.head<3>();
                return Point2{center.first + radius * p.dot(cam.right), center.second - radius * p.dot(cam.up)};
            };
            auto front = [&](const VectorXd& x) { return x.head<3>().dot(cam.forward) >= 0.0; };

            SvgDocument doc(size, size + 20.0);
            doc.text({size / 2.0, 18.0}, title, 13.0, "middle");
            doc.circle(center, radius, {"#888888", "#f4f6fa", 1.0, 1.0});
            const Eigen::Index n = traj.initial().size();
            for (Eigen::Index k = 0; k < n; ++k)
            {
                std::vector<Point2> run;
                bool run_front = front(traj.initial().points.col(k));
                auto flush = [&] {
                    doc.polyline(run, {"#1f4e9c", "none", 0.8, run_front ? 0.9 : 0.25});
                    run.clear();
                };
                for (const auto& snap : traj.snapshots)
                {
                    const VectorXd x = snap.points.col(k);
                    if (front(x) != run_front)
                    {
                        if (!run.empty())
                        {
                            run.push_back(project(x));
                        }
                        flush();
                        run_front = front(x);
                    }
                    run.push_back(project(x));
                }
                flush();
            }
            for (Eigen::Index k = 0; k < n; ++k)
            {
                const VectorXd x0 = traj.initial().points.col(k);
                doc.circle(project(x0), 2.0, {"none", "#777777", 1.0, front(x0) ? 1.0 : 0.4});
            }
            for (Eigen::Index k = 0; k < n; ++k)
            {
                const VectorXd x = traj.final().points.col(k);
                doc.circle(project(x), 3.5, {"none", "#d62728", 1.0, front(x) ? 1.0 : 0.4});
            }
            return doc.str();
        }

        json figure_atlas(const AtlasCase& ac, const FigureOptions& opt, const std::string& dir)
        {
            const auto start = std::chrono::steady_clock::now();
            const Trajectory traj = run_atlas_case(ac, opt.seed, 100);
            const SpectralClassification cls = classify_value_matrix(parse_matrix_spec(ac.V, kAtlasDim));
            const AtlasObservation obs = observe_final_configuration(cls, traj.initial(), traj.final());

            json summary{{"figure", ac.figure},
                         {"V", ac.V},
                         {"seed", opt.seed},
                         {"caption_row", to_string(ac.caption_row)},
                         {"classification", classification_to_json(cls)},
                         {"observed_matches_prediction", obs.matches},
                         {"observation", obs.metrics},
                         {"final_min_pairwise", min_pairwise_distance(traj.final())}};
            write_text_file(dir + "/trajectory.csv", trajectory_csv(traj));
            write_text_file(dir + "/trajectory.json", trajectory_sidecar(traj).dump(2) + "\n");
            write_text_file(dir + "/classification.json", classification_to_json(cls).dump(2) + "\n");
            if (!opt.data_only)
            {
                write_text_file(dir + "/" + ac.figure + ".svg",
                                render_sphere(traj, std::string("V = ") + ac.V + ", beta = 9, T = 5000"));
            }
            const json config{{"figure", ac.figure}, {"params", params_to_json(traj.params)},
                              {"integrator", config_to_json(traj.config)}, {"n", kAtlasTokens}};
            write_outputs(dir, config, summary, {opt.seed},
                          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
            return summary;
        }

        std::string render_evolution(const Trajectory& traj, const RenyiReport& report)
        {
            constexpr double panel = 250.0;
            constexpr double radius = 95.0;
            SvgDocument doc(panel * kEvolutionTimes.size(), panel + 20.0);
            std::vector<int> role(static_cast<std::size_t>(traj.initial().size()), 0);
            for (const auto i : report.renyi_indices)
            {
                role[static_cast<std::size_t>(i)] = 1;
            }
            for (const auto i : report.strong_indices)
            {
                role[static_cast<std::size_t>(i)] = 2;
            }
            for (std::size_t p = 0; p < kEvolutionTimes.size(); ++p)
            {
                const ParticleState& snap = snapshot_at(traj, kEvolutionTimes[p]);
                const Point2 c{panel * (static_cast<double>(p) + 0.5), panel / 2.0 + 20.0};
                std::ostringstream title;
                title << "t = " << snap.time;
                doc.text({c.first, 20.0}, title.str(), 13.0, "middle");
                doc.circle(c, radius, {"#888888", "none", 1.0, 1.0});
                // plain tokens first so centers stay visible
                for (int pass = 0; pass < 3; ++pass)
                {
                    for (Eigen::Index k = 0; k < snap.size(); ++k)
                    {
                        if (role[static_cast<std::size_t>(k)] != pass)
                        {
                            continue;
                        }
                        const double a = snap.angles(k);
                        const Point2 at{c.first + radius * std::cos(a), c.second - radius * std::sin(a)};
                        static const std::array<const char*, 3> colors{"#1f4e9c", "#ff9f1c", "#d62728"};
                        doc.circle(at, pass == 0 ? 2.5 : 4.0, {"none", colors[static_cast<std::size_t>(pass)], 1.0,
                                                               pass == 0 ? 0.6 : 1.0});
                    }
                }
            }
            return doc.str();
        }

        json figure_evolution(const FigureOptions& opt, const std::string& dir)
        {
            const auto start = std::chrono::steady_clock::now();
            const SystemParams params = SystemParams::identity(2, kEvolutionBeta, DynamicsKind::Causal2d);
            IntegratorConfig cfg;
            cfg.dt = 1e-2;
            cfg.t_end = kEvolutionTimes.back();
            cfg.record_every = 100;
            const ParticleState init =
                ParticleState::from_angles(angles_of(sample_uniform_points(opt.seed, 2, kEvolutionTokens)));
            const Trajectory traj = integrate(params, init, cfg, opt.seed);

            const double b = 1.0 / std::sqrt(kEvolutionBeta);
            RenyiReport report = renyi_report(init.points, 4.0 * b);
            attach_horizons(report, 4.0, 0.5, kEvolutionBeta);
            const MetastabilityResult meta = verify_metastability(traj, report, 4.0, 0.5, kEvolutionBeta);

            std::ostringstream snaps;
            snaps << "t,token,angle,c0,c1\n";
            json clusters = json::object();
            json counts = json::array();
            for (const double t : kEvolutionTimes)
            {
                const ParticleState& s = snapshot_at(traj, t);
                for (Eigen::Index k = 0; k < s.size(); ++k)
                {
                    snaps << format_double(s.time) << ',' << k << ',' << format_double(s.angles(k)) << ','
                          << format_double(s.points(0, k)) << ',' << format_double(s.points(1, k)) << '\n';
                }
                const ClusterReport cr = detect_clusters(s, default_radius(kEvolutionBeta));
                clusters[format_double(s.time)] = clusters_to_json(cr);
                counts.push_back({{"t", s.time}, {"clusters", cr.count()}});
            }

            write_text_file(dir + "/trajectory.csv", trajectory_csv(traj));
            write_text_file(dir + "/trajectory.json", trajectory_sidecar(traj).dump(2) + "\n");
            write_text_file(dir + "/snapshots.csv", snaps.str());
            write_text_file(dir + "/renyi.json", renyi_to_json(report).dump(2) + "\n");
            write_text_file(dir + "/metastability.json", metastability_to_json(meta).dump(2) + "\n");
            write_text_file(dir + "/clusters.json", clusters.dump(2) + "\n");
            if (!opt.data_only)
            {
                write_text_file(dir + "/fig2.svg", render_evolution(traj, report));
            }
            const json summary{{"figure", "fig2"},
                               {"seed", opt.seed},
                               {"renyi_centers", report.renyi_indices.size()},
                               {"strong_centers", report.strong_indices.size()},
                               {"metastability_violations", meta.violations()},
                               {"cluster_counts", counts}};
            const json config{{"figure", "fig2"},
                              {"params", params_to_json(params)},
                              {"integrator", config_to_json(cfg)},
                              {"n", kEvolutionTokens},
                              {"delta", 4.0 * b},
                              {"c", 4.0},
                              {"epsilon", 0.5},
                              {"cluster_radius", default_radius(kEvolutionBeta)}};
            write_outputs(dir, config, summary, {opt.seed},
                          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
            return summary;
        }

        std::string render_consumption(const std::vector<double>& t, const json& series)
        {
            SvgDocument doc(640.0, 420.0);
            const PlotFrame frame{70.0, 40.0, 540.0, 320.0, t.front(), t.back(), 0.0, 100.0};
            draw_axes(doc, frame, "t", "% of tokens consumed");
            const std::array<std::pair<const char*, const char*>, 2> curves{
                {{"consumed_renyi", "#ff9f1c"}, {"consumed_strong", "#d62728"}}};
            for (const auto& [name, color] : curves)
            {
                const auto mean = series.at(name).at("mean").get<std::vector<double>>();
                const auto q10 = series.at(name).at("q10").get<std::vector<double>>();
                const auto q90 = series.at(name).at("q90").get<std::vector<double>>();
                std::vector<Point2> band;
                std::vector<Point2> line;
                for (std::size_t i = 0; i < t.size(); ++i)
                {
                    band.push_back(frame.map(t[i], 100.0 * q90[i]));
                    line.push_back(frame.map(t[i], 100.0 * mean[i]));
                }
                for (std::size_t i = t.size(); i-- > 0;)
                {
                    band.push_back(frame.map(t[i], 100.0 * q10[i]));
                }
                doc.polygon(band, {"none", color, 1.0, 0.25});
                doc.polyline(line, {color, "none", 2.0, 1.0});
            }
            doc.text({frame.left + 10.0, frame.top + 18.0}, "Renyi centers", 12.0);
            doc.line({frame.left + 100.0, frame.top + 14.0}, {frame.left + 130.0, frame.top + 14.0},
                     {"#ff9f1c", "none", 2.0, 1.0});
            doc.text({frame.left + 10.0, frame.top + 36.0}, "strong Renyi centers", 12.0);
            doc.line({frame.left + 140.0, frame.top + 32.0}, {frame.left + 170.0, frame.top + 32.0},
                     {"#d62728", "none", 2.0, 1.0});
            return doc.str();
        }

        json figure_consumption(const FigureOptions& opt, const std::string& dir)
        {
            const auto start = std::chrono::steady_clock::now();
            if (opt.trials < 1)
            {
                throw std::invalid_argument("trials must be >= 1");
            }
            ExperimentConfig cfg;
            cfg.name = "fig3";
            cfg.n = kEvolutionTokens;
            cfg.d = 2;
            cfg.beta = kEvolutionBeta;
            cfg.kind = DynamicsKind::Causal2d;
            for (int s = 1; s <= opt.trials; ++s)
            {
                cfg.seeds.push_back(static_cast<std::uint64_t>(s));
            }
            cfg.analyses = {Analysis::Renyi};
            cfg.delta = 4.0 / std::sqrt(cfg.beta);
            cfg.integrator.dt = 0.1;
            cfg.integrator.t_end = 100.0;
            cfg.integrator.record_every = 10;
            cfg.output_dir = dir;
            RunOptions run;
            run.jobs = opt.jobs;
            run.write_files = false;
            const ExperimentResult result = run_experiment(cfg, run);

            const json& series = result.aggregate.at("series");
            const auto t = series.at("consumed_renyi").at("t").get<std::vector<double>>();
            std::ostringstream csv;
            csv << "t,renyi_mean,renyi_q10,renyi_q90,strong_mean,strong_q10,strong_q90\n";
            bool ordered = true;
            for (std::size_t i = 0; i < t.size(); ++i)
            {
                csv << format_double(t[i]);
                for (const char* name : {"consumed_renyi", "consumed_strong"})
                {
                    for (const char* stat : {"mean", "q10", "q90"})
                    {
                        csv << ',' << format_double(series.at(name).at(stat).at(i).get<double>());
                    }
                }
                csv << '\n';
                ordered = ordered && series.at("consumed_renyi").at("mean").at(i).get<double>()
                                         >= series.at("consumed_strong").at("mean").at(i).get<double>();
            }
            write_text_file(dir + "/consumed.csv", csv.str());
            write_text_file(dir + "/aggregate.json", result.aggregate.dump(2) + "\n");
            if (!opt.data_only)
            {
                write_text_file(dir + "/fig3.svg", render_consumption(t, series));
            }
            const json summary{{"figure", "fig3"},
                               {"trials", opt.trials},
                               {"radius", cfg.cluster_radius()},
                               {"renyi_mean_ge_strong_mean", ordered},
                               {"final_renyi_mean", series.at("consumed_renyi").at("mean").back()},
                               {"final_strong_mean", series.at("consumed_strong").at("mean").back()}};
            std::vector<std::uint64_t> seeds = cfg.seeds;
            write_outputs(dir, experiment_config_to_json(cfg), summary, seeds,
                          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
            return summary;
        }
    }

    const std::vector<std::string>& figure_ids()
    {
        static const std::vector<std::string> ids = [] {
            std::vector<std::string> out;
            for (const auto& ac : kAtlasCases)
            {
                out.emplace_back(ac.figure);
            }
            out.emplace_back("fig2");
            out.emplace_back("fig3");
            return out;
        }();
        return ids;
    }

    bool is_figure(const std::string& id)
    {
        const auto& ids = figure_ids();
        return std::find(ids.begin(), ids.end(), id) != ids.end();
    }

    json make_figure(const std::string& id, const FigureOptions& options)
    {
        const std::string dir = options.out_dir + "/" + id;
        for (const auto& ac : kAtlasCases)
        {
            if (id == ac.figure)
            {
                return figure_atlas(ac, options, dir);
            }
        }
        if (id == "fig2")
        {
            return figure_evolution(options, dir);
        }
        if (id == "fig3")
        {
            return figure_consumption(options, dir);
        }
        throw std::invalid_argument("unknown figure '" + id + "' (expected fig1a..fig1e, fig2, fig3)");
    }
}
