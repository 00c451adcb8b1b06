// attn-flow: simulate | classify | renyi | figures | verify
//
// Exit codes: 0 ok, 1 verification failure, 2 usage or configuration error,
// 3 numerical failure.

#include "attnflow/config.hpp"
#include "attnflow/experiment.hpp"
#include "attnflow/figures.hpp"
#include "attnflow/io.hpp"
#include "attnflow/matrix_spec.hpp"
#include "attnflow/parallel.hpp"
#include "attnflow/renyi.hpp"
#include "attnflow/spectral.hpp"
#include "attnflow/verify.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <numbers>
#include <iostream>
#include <optional>
#include <sstream>

namespace
{
    using namespace attnflow;

    constexpr int kOk = 0;
    constexpr int kVerificationFailed = 1;
    constexpr int kUsage = 2;
    constexpr int kNumerical = 3;

    struct SimulateArgs
    {
        std::string config;
        std::optional<double> beta;
        std::optional<int> n;
        std::optional<std::uint64_t> seed;
        std::optional<double> t_end;
        std::optional<std::string> out;
    };

    struct ClassifyArgs
    {
        std::string matrix;
        std::string spectra;
        double tol = kDefaultSpectralTol;
    };

    struct RenyiArgs
    {
        int n = 1000;
        int d = 2;
        double delta = 0.0;
        std::uint64_t seed = 1;
        std::string metric = "geodesic";
        std::string points;
        std::optional<double> beta;
        double c = 4.0;
        double epsilon = 0.5;
    };

    struct FigureArgs
    {
        std::vector<std::string> ids;
        FigureOptions options;
    };

    struct VerifyArgs
    {
        std::string suite;
        std::string report;
    };

    int run_simulate(const SimulateArgs& args, int jobs)
    {
        ExperimentConfig config = load_config(args.config);
        ConfigOverrides o;
        o.beta = args.beta;
        o.n = args.n;
        o.seed = args.seed;
        o.t_end = args.t_end;
        o.output_dir = args.out;
        apply_overrides(config, o);
        RunOptions run;
        run.jobs = jobs;
        const ExperimentResult result = run_experiment(config, run);
        std::cout << "wrote " << result.seeds.size() << " seed(s) to " << config.output_dir << "\n";
        return kOk;
    }

    json classify_head(const HeadSpectrum& head, double tol)
    {
        const SpectralClassification cls =
            head.matrix ? classify_value_matrix(*head.matrix, tol) : classify_eigenvalues(head.eigenvalues, tol);
        json out = classification_to_json(cls);
        out["model"] = head.model;
        out["layer"] = head.layer;
        out["head"] = head.head;
        out["source"] = head.matrix ? "matrix" : "eigenvalues";
        return out;
    }

    int run_classify(const ClassifyArgs& args)
    {
        if (args.matrix.empty() == args.spectra.empty())
        {
            throw std::invalid_argument("classify: give exactly one of a matrix spec or --spectra <file>");
        }
        if (!args.matrix.empty())
        {
            const MatrixXd V = parse_matrix_spec(args.matrix);
            const SpectralClassification cls = classify_value_matrix(V, args.tol);
            json out = classification_to_json(cls);
            out["matrix"] = args.matrix;
            if (cls.L_basis.cols() >= 2 && cls.is_real && cls.lambda_max.real() > 0.0)
            {
                out["one_cluster_hypothesis"] = one_cluster_hypothesis_holds(V, cls);
            }
            std::cout << out.dump(2) << "\n";
            return kOk;
        }
        json parsed;
        try
        {
            parsed = json::parse(read_text_file(args.spectra));
        }
        catch (const json::parse_error& e)
        {
            throw ParseError(args.spectra + ": " + e.what());
        }
        json out = json::array();
        for (const auto& head : parse_spectra(parsed))
        {
            out.push_back(classify_head(head, args.tol));
        }
        std::cout << out.dump(2) << "\n";
        return kOk;
    }

    int run_renyi(const RenyiArgs& args)
    {
        const Metric metric = metric_from_string(args.metric);
        MatrixXd points;
        if (!args.points.empty())
        {
            std::istringstream in(read_text_file(args.points));
            const auto snaps = read_trajectory_csv(in);
            if (snaps.empty())
            {
                throw ParseError(args.points + ": no snapshots");
            }
            points = snaps.front().points;
        }
        else
        {
            if (args.n < 1 || args.d < 2)
            {
                throw std::invalid_argument("renyi: --n must be >= 1 and --d >= 2");
            }
            points = sample_uniform_points(args.seed, args.d, args.n);
        }
        RenyiReport report = renyi_report(points, args.delta, metric);
        if (args.beta)
        {
            attach_horizons(report, args.c, args.epsilon, *args.beta);
        }
        json out = renyi_to_json(report);
        out["n"] = points.cols();
        out["d"] = points.rows();
        out["renyi_count"] = report.renyi_indices.size();
        out["strong_count"] = report.strong_indices.size();
        if (metric == Metric::Geodesic && args.delta < std::numbers::pi)
        {
            out["expected_strong_count"] = expected_strong_count(static_cast<int>(points.rows()), args.delta);
        }
        std::cout << out.dump(2) << "\n";
        return kOk;
    }

    int run_figures(FigureArgs args, int jobs)
    {
        args.options.jobs = jobs;
        std::vector<std::string> ids = args.ids;
        if (ids.size() == 1 && ids.front() == "all")
        {
            ids = figure_ids();
        }
        for (const auto& id : ids)
        {
            if (!is_figure(id))
            {
                throw std::invalid_argument("unknown figure '" + id + "' (expected fig1a..fig1e, fig2, fig3, all)");
            }
        }
        for (const auto& id : ids)
        {
            const auto start = std::chrono::steady_clock::now();
            make_figure(id, args.options);
            std::cout << id << ": " << args.options.out_dir << "/" << id << " ("
                      << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() << " s)\n";
        }
        return kOk;
    }

    int run_verify(const VerifyArgs& args, int jobs)
    {
        std::vector<std::string> suites;
        if (args.suite == "all")
        {
            suites = suite_names();
        }
        else if (is_suite(args.suite))
        {
            suites = {args.suite};
        }
        else
        {
            std::string names;
            for (const auto& s : suite_names())
            {
                names += s + "|";
            }
            throw std::invalid_argument("unknown suite '" + args.suite + "' (expected " + names + "all)");
        }

        VerifyOptions options;
        options.jobs = jobs;
        json reports = json::array();
        bool all_passed = true;
        for (const auto& name : suites)
        {
            const SuiteReport report = run_suite(name, options);
            for (const auto& c : report.checks)
            {
                const char* tag = c.informational ? "INFO" : (c.passed ? "PASS" : "FAIL");
                std::cout << "[" << tag << "] " << report.suite << ": " << c.name << " -- " << c.detail << "\n";
            }
            std::cout << report.suite << " (criterion " << report.criterion << "): "
                      << (report.passed() ? "PASS" : "FAIL") << "\n";
            all_passed = all_passed && report.passed();
            reports.push_back(report.to_json());
        }
        const json out{{"passed", all_passed}, {"suites", reports}};
        if (!args.report.empty())
        {
            write_text_file(args.report, out.dump(2) + "\n");
        }
        return all_passed ? kOk : kVerificationFailed;
    }
}

int main(int argc, char** argv)
{
    CLI::App app{"Causal self-attention particle dynamics on the sphere"};
    app.require_subcommand(1);
    std::optional<int> jobs_flag;
    app.add_option("-j,--jobs", jobs_flag, "worker threads (default: ATTN_FLOW_JOBS or hardware concurrency)")
        ->check(CLI::PositiveNumber);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "run an experiment config over its seeds");
    simulate->add_option("config", sim.config, "TOML experiment config")->required();
    simulate->add_option("--beta", sim.beta, "override beta");
    simulate->add_option("--n", sim.n, "override number of tokens");
    simulate->add_option("--seed", sim.seed, "run this single seed");
    simulate->add_option("--t-end", sim.t_end, "override integration horizon");
    simulate->add_option("-o,--out", sim.out, "override output directory");

    ClassifyArgs cls;
    auto* classify = app.add_subcommand("classify", "predict the final configuration from the value matrix spectrum");
    classify->add_option("matrix", cls.matrix, "matrix spec, e.g. 'diag(1,1,0)'");
    classify->add_option("--spectra", cls.spectra, "head spectra JSON");
    classify->add_option("--tol", cls.tol, "relative tolerance grouping the top eigenvalues");

    RenyiArgs ren;
    auto* renyi = app.add_subcommand("renyi", "Renyi and strong Renyi centers of a token sequence");
    renyi->add_option("--delta", ren.delta, "separation radius")->required();
    renyi->add_option("--n", ren.n, "tokens to sample");
    renyi->add_option("--d", ren.d, "ambient dimension");
    renyi->add_option("--seed", ren.seed, "sampling seed");
    renyi->add_option("--metric", ren.metric, "geodesic|euclidean");
    renyi->add_option("--points", ren.points, "trajectory CSV; its first snapshot is used instead of sampling");
    renyi->add_option("--beta", ren.beta, "attach metastability horizons for this beta");
    renyi->add_option("--c", ren.c, "horizon constant c");
    renyi->add_option("--epsilon", ren.epsilon, "horizon constant epsilon");

    FigureArgs fig;
    auto* figures = app.add_subcommand("figures", "regenerate figure data and SVG plots");
    figures->add_option("ids", fig.ids, "fig1a..fig1e, fig2, fig3 or all")->required();
    figures->add_option("-o,--out", fig.options.out_dir, "output directory");
    figures->add_option("--trials", fig.options.trials, "fig3 trial count")->check(CLI::PositiveNumber);
    figures->add_option("--seed", fig.options.seed, "seed for fig1*/fig2");
    figures->add_flag("--data-only", fig.options.data_only, "skip SVG rendering");

    VerifyArgs ver;
    auto* verify = app.add_subcommand("verify", "run an acceptance suite");
    verify->add_option("suite", ver.suite, "suite name or all")->required();
    verify->add_option("--report", ver.report, "write the JSON report here");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try
    {
        const int jobs = jobs_flag ? *jobs_flag : default_jobs();
        if (simulate->parsed())
        {
            return run_simulate(sim, jobs);
        }
        if (classify->parsed())
        {
            return run_classify(cls);
        }
        if (renyi->parsed())
        {
            return run_renyi(ren);
        }
        if (figures->parsed())
        {
            return run_figures(fig, jobs);
        }
        return run_verify(ver, jobs);
    }
    catch (const NumericalError& e)
    {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    }
    catch (const std::domain_error& e)
    {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
}
